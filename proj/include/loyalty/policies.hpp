#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loyalty/core_model.hpp"
#include "loyalty/estimation.hpp"
#include "loyalty/simulator.hpp"
#include "loyalty/threshold.hpp"

namespace loyalty {

/// Known constants of the theoretical epoch schedule.
struct ConstantsBundle {
    double sigma = 0.5;
    double c_lambda = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double c5 = 0.0;
    double t_hat_mix = 0.0;
};

ConstantsBundle schedule_constants(const RegularityReport& report, const Instance& instance, double t_hat_mix);

enum class ScheduleMode { Theoretical, Practical };
enum class MleWindow { PreviousEpoch, AllHistory };

/// Doubling epoch schedule T_h = 2^{h-1} T_1 with termination margins Delta_h.
/// Theoretical: Delta_h = scale * sqrt(log(1/delta) / (M T_{h-1})).
/// Practical:   Delta_h = scale / sqrt(M sum_{i<h} T_i).
/// Delta_1 is +infinity: epoch 1 has no termination check.
struct EpochPlan {
    ScheduleMode mode = ScheduleMode::Practical;
    MleWindow mle_window = MleWindow::AllHistory;
    std::int64_t t1 = 1;
    int m = 1;
    double scale = 0.15;
    double log_inv_delta = 0.0;

    /// Saturates at Policy::kUnbounded.
    std::int64_t length(int h) const;
    double delta(int h) const;
    /// H(T) = min{H : sum_{h<=H} T_h >= T}.
    int epochs_for(std::int64_t horizon) const;
};

/// T_1 before rounding, as a real number (it is usually astronomically large).
double theoretical_t1(const ConstantsBundle& c, int m, double delta);

/// Throws InvalidDelta, InvalidConfig when the report is not valid, and
/// HorizonTooShort when T < T_1.
EpochPlan theoretical_epoch_plan(const RegularityReport& report, const Instance& instance, std::int64_t horizon,
                                 int m, double delta, double t_hat_mix);

EpochPlan practical_epoch_plan(std::int64_t horizon, int m, double c = 0.15);

/// Subset of {1..N_max}, kept sorted.
class ConsiderationSet {
public:
    ConsiderationSet() = default;
    explicit ConsiderationSet(int n_max);

    const std::vector<int>& thresholds() const { return items_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }
    int max() const { return items_.back(); }
    bool contains(int n) const;
    /// Keeps only elements with keep(n) true.
    template <class Pred>
    void filter(Pred keep) {
        std::vector<int> next;
        for (int n : items_)
            if (keep(n)) next.push_back(n);
        items_ = std::move(next);
    }

private:
    std::vector<int> items_;
};

/// Behavioural: likelihood of the clamped purchase model the simulator draws
/// from. Glm: smooth unclamped likelihood with probability margins.
enum class FitMethod { Behavioural, Glm };

/// Model shape the policy fits: the true links (or an override), known
/// baselines, boxes, N_max and rho.
struct FitShape {
    Instance shape;
    FitMethod method = FitMethod::Behavioural;
    FitOptions options;
    BehaviouralFitOptions behavioural;

    static FitShape from_instance(const Instance& truth, std::optional<LinkKind> fit_link = std::nullopt,
                                  FitMethod method = FitMethod::Behavioural);
};

struct GreedyOutcome {
    Decision decision;
    std::vector<Beta> beta_hat;
    /// R(N; beta_hat) for N = 1..N_max.
    std::vector<double> revenue_hat;
    bool fit_fallback = false;
};

/// Fits every type and evaluates R(N; beta_hat) for N = 1..N_max. Returns
/// nullopt when some type's fit is degenerate.
std::optional<GreedyOutcome> fit_and_evaluate(const std::vector<SampleSet>& samples, const FitShape& shape);

/// Greedy step: argmax over finite goals (smallest on ties), terminate when
/// R(inf) > R(N_h; beta_hat) + Delta_h. A degenerate fit keeps `previous`.
GreedyOutcome stable_greedy_decide(const std::vector<SampleSet>& samples, const EpochPlan& plan, int h,
                                   const FitShape& shape, Threshold previous);

/// Nested consideration-set step. Shrinks `set` to the goals within 2 Delta_h
/// of the best member, plays its maximum, terminates when
/// R(inf) > R(N_h; beta_hat) + 3 Delta_h.
GreedyOutcome fair_greedy_decide(const std::vector<SampleSet>& samples, const EpochPlan& plan, int h,
                                 ConsiderationSet& set, const FitShape& shape, Threshold previous);

enum class PolicyKind { Stable, Fair, Oracle, Fixed, None };

/// Policy configuration as read from JSON.
struct PolicyConfig {
    PolicyKind kind = PolicyKind::Stable;
    ScheduleMode schedule = ScheduleMode::Practical;
    std::optional<std::int64_t> t1;
    double delta_c = 0.15;
    std::optional<MleWindow> mle_window;
    std::optional<int> n1;
    /// Threshold for the fixed policy.
    std::optional<int> n;
    std::optional<LinkKind> fit_link;
    FitMethod fit_method = FitMethod::Behavioural;
    /// Confidence parameter of the theoretical schedule.
    double delta = 0.1;
    std::optional<double> t_hat_mix;
};

std::string policy_kind_name(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& name);
/// Throws InvalidConfig on unknown keys or values.
PolicyConfig parse_policy_config(const std::string& json_text);
std::string policy_config_json(const PolicyConfig& config);

class GreedyPolicy final : public Policy {
public:
    GreedyPolicy(PolicyKind kind, EpochPlan plan, FitShape shape, int n1);

    std::string name() const override;
    Threshold initial_threshold() const override { return Threshold(n1_); }
    std::int64_t epoch_length(int h) const override { return plan_.length(h); }
    EpochDecision decide(const EpochContext& context) override;

    const ConsiderationSet& consideration_set() const { return set_; }
    /// |N_h| after each decision (Fair-Greedy only), epoch 1 included.
    const std::vector<std::size_t>& set_sizes() const { return set_sizes_; }

private:
    PolicyKind kind_;
    EpochPlan plan_;
    FitShape shape_;
    int n1_;
    ConsiderationSet set_;
    std::vector<std::size_t> set_sizes_;
};

/// Constant threshold in a single epoch (fixed goal, oracle, or no loyalty).
class ConstantPolicy final : public Policy {
public:
    ConstantPolicy(std::string name, Threshold n) : name_(std::move(name)), n_(n) {}

    std::string name() const override { return name_; }
    Threshold initial_threshold() const override { return n_; }
    std::int64_t epoch_length(int) const override { return kUnbounded; }
    EpochDecision decide(const EpochContext&) override { return {Decision::set(n_), {}, false}; }

private:
    std::string name_;
    Threshold n_;
};

/// Builds a policy for the true instance. The oracle plays the best
/// non-personalized goal (possibly no loyalty).
std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const Instance& truth, int m, std::int64_t horizon);

}  // namespace loyalty
