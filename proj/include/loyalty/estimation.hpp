#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loyalty/core_model.hpp"

namespace loyalty {

/// (tau, x) observations of one customer type, stored as per-tau trial and
/// success counts. The likelihood only depends on these sufficient statistics,
/// so order and grouping of the raw samples are irrelevant by construction.
class SampleSet {
public:
    void add(int tau, bool x, std::int64_t count = 1);
    void merge(const SampleSet& other);
    void clear();

    std::int64_t size() const { return total_; }
    bool empty() const { return total_ == 0; }
    /// Largest tau with a recorded trial, -1 when empty.
    int max_tau() const { return static_cast<int>(trials_.size()) - 1; }
    std::int64_t trials(int tau) const;
    std::int64_t successes(int tau) const;
    int distinct_taus() const;
    int min_observed_tau() const;
    int max_observed_tau() const;

private:
    std::vector<std::int64_t> trials_;
    std::vector<std::int64_t> successes_;
    std::int64_t total_ = 0;
};

/// Link family and known baseline of the model being fitted.
struct GlmModel {
    LinkKind link = LinkKind::LinearPP;
    double baseline = 0.0;
    ParamBox box{};
};

/// sum x log mu + (1 - x) log(1 - mu) with mu = glm_mean(b1 + b2 tau). Throws
/// ProbabilityAtBoundary when mu leaves (0, 1) at an observed tau.
double log_likelihood(const SampleSet& samples, const GlmModel& model, Beta beta);

struct LikelihoodDerivatives {
    double value = 0.0;
    std::array<double, 2> gradient{};
    std::array<double, 3> hessian{};  ///< h11, h12, h22
};

/// Value, gradient and Hessian; same preconditions as log_likelihood.
LikelihoodDerivatives log_likelihood_derivatives(const SampleSet& samples, const GlmModel& model, Beta beta);

struct FitOptions {
    /// Add 1e-8 ||beta - box center||^2 when the design is rank-deficient instead of throwing.
    bool allow_ridge = false;
    int max_iterations = 200;
    double gradient_tolerance = 1e-10;
    /// Fitted probabilities are kept inside [eps, 1 - eps] at every observed tau.
    double probability_margin = 1e-9;
};

struct FitResult {
    Beta beta;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    bool ridge_applied = false;
    /// Indices of constraints active at the solution: 0..3 box (b1 hi, b1 lo, b2 hi,
    /// b2 lo), 4 upper probability margin, 5 lower probability margin.
    std::vector<int> active_constraints;
};

/// Maximum-likelihood estimate over the box intersected with the probability
/// margins, by active-set Newton with Armijo backtracking. Throws
/// DegenerateDesign on empty samples, or on a single distinct tau unless
/// options.allow_ridge.
FitResult fit_mle(const SampleSet& samples, const GlmModel& model, const FitOptions& options = {});

/// Log-likelihood of the behavioural purchase model phi = min(1, baseline +
/// g(b1 + b2 tau)), positive part and clamp included, with phi floored into
/// [floor, 1 - floor] so that every data set has a finite value.
double behavioural_log_likelihood(const SampleSet& samples, const GlmModel& model, Beta beta, double floor = 1e-6);

struct BehaviouralFitOptions {
    /// Spacing of the global search grid over the box.
    double grid_step = 0.5;
    /// Number of distinct likelihood levels refined locally.
    int starts = 6;
    double floor = 1e-6;
    /// Weight of the 1e-8 ||beta - box center||^2 tie-break on flat likelihoods.
    double ridge = 1e-8;
    int max_iterations = 300;
};

/// Maximum-likelihood fit of the behavioural model. The clamp and the
/// positive part make the likelihood flat on whole regions and multimodal,
/// so the fit is a grid search over the box followed by safeguarded Newton
/// refinement from the best few distinct grid levels. Throws DegenerateDesign
/// on empty samples.
FitResult fit_behavioural(const SampleSet& samples, const GlmModel& model, const BehaviouralFitOptions& options = {});

/// [[count, sum tau], [sum tau, sum tau^2]].
struct DesignMatrix {
    double a = 0.0;
    double b = 0.0;
    double d = 0.0;
};

DesignMatrix design_matrix(const SampleSet& samples);

/// Smaller eigenvalue of a symmetric 2x2 matrix, clipped to 0 within 1e-12.
double lambda_min(const DesignMatrix& v);

/// C0 = 512 G^2 sigma^2 (1 + N_max^2) / kappa^4 with sigma = 1/2.
double information_constant(const RegularityReport& report, int n_max);

/// lambda_min(v) >= C0 (4 + log(1/delta)). Throws InvalidDelta unless 0 < delta < 1.
bool info_gate(const DesignMatrix& v, double delta, const RegularityReport& report, int n_max);

}  // namespace loyalty
