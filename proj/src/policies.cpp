#include "loyalty/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "json.hpp"
#include "loyalty/error.hpp"
#include "loyalty/steady_state.hpp"

namespace loyalty {

ConstantsBundle schedule_constants(const RegularityReport& report, const Instance& instance, double t_hat_mix) {
    ConstantsBundle c;
    const double n = instance.n_max;
    const double rho_min = instance.rho_min();
    const double mu_ratio = report.mu_min / report.mu_max;
    c.t_hat_mix = t_hat_mix;
    c.c_lambda = mu_ratio * mu_ratio / 12.0;
    c.c0 = information_constant(report, instance.n_max);
    c.c1 = 48.0 / c.c_lambda;
    c.c2 = 8.0 * c.c0 / (rho_min * c.c_lambda);
    c.c3 = 2.0 * c.c0 / (rho_min * c.c_lambda);
    c.c4 = 810.0 * n * n * n * n / (rho_min * c.c_lambda * c.c_lambda);
    const double lead = 3.0 * report.mu_max * report.mu_max * report.l_mu * c.sigma /
                        (report.mu_min * report.mu_min * report.kappa);
    for (double rho : instance.rho) c.c5 += lead * std::sqrt(2.0 * rho * (1.0 + n * n) / c.c_lambda);
    return c;
}

std::int64_t EpochPlan::length(int h) const {
    if (h < 1) throw Error(ErrorCode::OutOfRange, "epochs are numbered from 1");
    std::int64_t len = t1;
    for (int i = 1; i < h; ++i) {
        if (len > Policy::kUnbounded / 2) return Policy::kUnbounded;
        len *= 2;
    }
    return len;
}

double EpochPlan::delta(int h) const {
    if (h < 1) throw Error(ErrorCode::OutOfRange, "epochs are numbered from 1");
    if (h == 1) return std::numeric_limits<double>::infinity();
    if (mode == ScheduleMode::Theoretical)
        return scale * std::sqrt(log_inv_delta / (static_cast<double>(m) * static_cast<double>(length(h - 1))));
    // sum_{i<h} T_i = T_1 (2^{h-1} - 1)
    const double elapsed = static_cast<double>(t1) * (std::ldexp(1.0, h - 1) - 1.0);
    return scale / std::sqrt(static_cast<double>(m) * elapsed);
}

int EpochPlan::epochs_for(std::int64_t horizon) const {
    std::int64_t covered = 0;
    int h = 0;
    while (covered < horizon) {
        ++h;
        const std::int64_t len = length(h);
        covered = len >= Policy::kUnbounded - covered ? Policy::kUnbounded : covered + len;
    }
    return h;
}

double theoretical_t1(const ConstantsBundle& c, int m, double delta) {
    const double log_inv = std::log(1.0 / delta);
    const double mixing_term = c.c1 / (1.0 - std::pow(2.0, -1.0 / c.t_hat_mix));
    const double info_term = (c.c2 + c.c3 * log_inv) / m;
    const double concentration_term = c.c4 * c.t_hat_mix * log_inv / m;
    return std::max({mixing_term, info_term, concentration_term});
}

EpochPlan theoretical_epoch_plan(const RegularityReport& report, const Instance& instance, std::int64_t horizon,
                                 int m, double delta, double t_hat_mix) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 1)");
    if (!report.valid) {
        std::string why;
        for (const std::string& f : report.flags) why += (why.empty() ? "" : "; ") + f;
        throw Error(ErrorCode::InvalidConfig, "theoretical schedule needs a regular instance: " + why);
    }
    if (m < 1) throw Error(ErrorCode::OutOfRange, "M must be >= 1");
    const ConstantsBundle c = schedule_constants(report, instance, t_hat_mix);
    const double t1 = std::ceil(theoretical_t1(c, m, delta));
    if (!(t1 <= static_cast<double>(horizon)))
        throw Error(ErrorCode::HorizonTooShort,
                    "T = " + std::to_string(horizon) + " is below the first epoch length " + std::to_string(t1));
    EpochPlan plan;
    plan.mode = ScheduleMode::Theoretical;
    plan.mle_window = MleWindow::PreviousEpoch;
    plan.t1 = static_cast<std::int64_t>(t1);
    plan.m = m;
    plan.scale = c.c5;
    plan.log_inv_delta = std::log(1.0 / delta);
    return plan;
}

EpochPlan practical_epoch_plan(std::int64_t horizon, int m, double c) {
    if (horizon < 1) throw Error(ErrorCode::OutOfRange, "horizon must be >= 1");
    if (m < 1) throw Error(ErrorCode::OutOfRange, "M must be >= 1");
    if (!(c > 0.0)) throw Error(ErrorCode::OutOfRange, "delta scale must be positive");
    EpochPlan plan;
    plan.mode = ScheduleMode::Practical;
    plan.mle_window = MleWindow::AllHistory;
    plan.t1 = 1;
    plan.m = m;
    plan.scale = c;
    return plan;
}

ConsiderationSet::ConsiderationSet(int n_max) {
    for (int n = 1; n <= n_max; ++n) items_.push_back(n);
}

bool ConsiderationSet::contains(int n) const { return std::binary_search(items_.begin(), items_.end(), n); }

FitShape FitShape::from_instance(const Instance& truth, std::optional<LinkKind> fit_link, FitMethod method) {
    FitShape out;
    out.method = method;
    out.shape = truth;
    if (fit_link) {
        for (TypeSpec& t : out.shape.types) {
            t.link = *fit_link;
            t.b1 = t.b2 = 0.0;
        }
    }
    out.options.allow_ridge = true;
    return out;
}

std::optional<GreedyOutcome> fit_and_evaluate(const std::vector<SampleSet>& samples, const FitShape& shape) {
    const Instance& inst = shape.shape;
    GreedyOutcome out;
    std::vector<TypeSpec> fitted;
    for (std::size_t k = 0; k < inst.k(); ++k) {
        const TypeSpec& spec = inst.types[k];
        Beta b{};
        if (spec.link != LinkKind::NoPressure) {
            if (k >= samples.size() || samples[k].empty()) return std::nullopt;
            const GlmModel model{spec.link, spec.baseline, spec.box};
            try {
                b = shape.method == FitMethod::Behavioural ? fit_behavioural(samples[k], model, shape.behavioural).beta
                                                           : fit_mle(samples[k], model, shape.options).beta;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::DegenerateDesign) return std::nullopt;
                throw;
            }
        }
        out.beta_hat.push_back(b);
        fitted.push_back(spec.with_beta(b));
    }
    out.revenue_hat.assign(static_cast<std::size_t>(inst.n_max), 0.0);
    for (std::size_t k = 0; k < fitted.size(); ++k) {
        const std::vector<double> phi = purchase_curve(fitted[k], inst.n_max);
        for (int n = 1; n <= inst.n_max; ++n)
            out.revenue_hat[static_cast<std::size_t>(n - 1)] +=
                inst.rho[k] * long_run_revenue(std::span(phi).first(static_cast<std::size_t>(n) + 1),
                                               ZeroProbability::Allow);
    }
    return out;
}

namespace {

GreedyOutcome fallback(Threshold previous) {
    GreedyOutcome out;
    out.decision = Decision::set(previous);
    out.fit_fallback = true;
    return out;
}

double revenue_at(const GreedyOutcome& g, int n) { return g.revenue_hat[static_cast<std::size_t>(n - 1)]; }

}  // namespace

GreedyOutcome stable_greedy_decide(const std::vector<SampleSet>& samples, const EpochPlan& plan, int h,
                                   const FitShape& shape, Threshold previous) {
    std::optional<GreedyOutcome> fit = fit_and_evaluate(samples, shape);
    if (!fit) return fallback(previous);
    const ThresholdChoice best = argmax_threshold(fit->revenue_hat, -std::numeric_limits<double>::infinity());
    if (shape.shape.no_loyalty_revenue() > best.value + plan.delta(h))
        fit->decision = Decision::terminate();
    else
        fit->decision = Decision::set(best.n);
    return *fit;
}

GreedyOutcome fair_greedy_decide(const std::vector<SampleSet>& samples, const EpochPlan& plan, int h,
                                 ConsiderationSet& set, const FitShape& shape, Threshold previous) {
    if (set.empty()) throw Error(ErrorCode::InvalidConfig, "consideration set is empty");
    std::optional<GreedyOutcome> fit = fit_and_evaluate(samples, shape);
    if (!fit) return fallback(previous);
    double best = -std::numeric_limits<double>::infinity();
    for (int n : set.thresholds()) best = std::max(best, revenue_at(*fit, n));
    const double margin = 2.0 * plan.delta(h);
    set.filter([&](int n) { return revenue_at(*fit, n) >= best - margin; });
    if (set.empty()) throw Error(ErrorCode::InvalidConfig, "consideration set lost its own maximizer");
    const int n_h = set.max();
    if (shape.shape.no_loyalty_revenue() > revenue_at(*fit, n_h) + 3.0 * plan.delta(h))
        fit->decision = Decision::terminate();
    else
        fit->decision = Decision::set(Threshold(n_h));
    return *fit;
}

std::string policy_kind_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Stable: return "stable";
        case PolicyKind::Fair: return "fair";
        case PolicyKind::Oracle: return "oracle";
        case PolicyKind::Fixed: return "fixed";
        case PolicyKind::None: return "none";
    }
    return "?";
}

PolicyKind parse_policy_kind(const std::string& name) {
    for (PolicyKind k : {PolicyKind::Stable, PolicyKind::Fair, PolicyKind::Oracle, PolicyKind::Fixed, PolicyKind::None})
        if (policy_kind_name(k) == name) return k;
    throw Error(ErrorCode::InvalidConfig, "unknown policy '" + name + "' (expected stable|fair|oracle|fixed|none)");
}

PolicyConfig parse_policy_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("policy config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "policy config must be a JSON object");
    PolicyConfig c;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "policy") {
                c.kind = parse_policy_kind(value.get<std::string>());
            } else if (key == "schedule") {
                const auto s = value.get<std::string>();
                if (s == "practical")
                    c.schedule = ScheduleMode::Practical;
                else if (s == "theoretical")
                    c.schedule = ScheduleMode::Theoretical;
                else
                    throw Error(ErrorCode::InvalidConfig, "schedule must be practical|theoretical");
            } else if (key == "t1") {
                c.t1 = value.get<std::int64_t>();
                if (*c.t1 < 1) throw Error(ErrorCode::InvalidConfig, "t1 must be >= 1");
            } else if (key == "delta_c") {
                c.delta_c = value.get<double>();
                if (!(c.delta_c > 0.0)) throw Error(ErrorCode::InvalidConfig, "delta_c must be positive");
            } else if (key == "mle_window") {
                const auto s = value.get<std::string>();
                if (s == "pooled")
                    c.mle_window = MleWindow::AllHistory;
                else if (s == "epoch")
                    c.mle_window = MleWindow::PreviousEpoch;
                else
                    throw Error(ErrorCode::InvalidConfig, "mle_window must be pooled|epoch");
            } else if (key == "n1") {
                c.n1 = value.get<int>();
            } else if (key == "n") {
                c.n = value.get<int>();
            } else if (key == "fit_link") {
                c.fit_link = parse_link(value.get<std::string>());
            } else if (key == "fit_method") {
                const auto s = value.get<std::string>();
                if (s == "behavioural")
                    c.fit_method = FitMethod::Behavioural;
                else if (s == "glm")
                    c.fit_method = FitMethod::Glm;
                else
                    throw Error(ErrorCode::InvalidConfig, "fit_method must be behavioural|glm");
            } else if (key == "delta") {
                c.delta = value.get<double>();
            } else if (key == "t_hat_mix") {
                c.t_hat_mix = value.get<double>();
            } else {
                throw Error(ErrorCode::InvalidConfig, "unknown policy config key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("bad policy config value: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedInstance) throw Error(ErrorCode::InvalidConfig, e.what());
        throw;
    }
    return c;
}

std::string policy_config_json(const PolicyConfig& c) {
    nlohmann::ordered_json doc;
    doc["policy"] = policy_kind_name(c.kind);
    doc["schedule"] = c.schedule == ScheduleMode::Practical ? "practical" : "theoretical";
    if (c.t1) doc["t1"] = *c.t1;
    doc["delta_c"] = c.delta_c;
    if (c.mle_window) doc["mle_window"] = *c.mle_window == MleWindow::AllHistory ? "pooled" : "epoch";
    if (c.n1) doc["n1"] = *c.n1;
    if (c.n) doc["n"] = *c.n;
    if (c.fit_link) doc["fit_link"] = std::string(link_name(*c.fit_link));
    doc["fit_method"] = c.fit_method == FitMethod::Behavioural ? "behavioural" : "glm";
    doc["delta"] = c.delta;
    if (c.t_hat_mix) doc["t_hat_mix"] = *c.t_hat_mix;
    return doc.dump();
}

GreedyPolicy::GreedyPolicy(PolicyKind kind, EpochPlan plan, FitShape shape, int n1)
    : kind_(kind), plan_(plan), shape_(std::move(shape)), n1_(n1) {
    if (kind_ != PolicyKind::Stable && kind_ != PolicyKind::Fair)
        throw Error(ErrorCode::InvalidConfig, "GreedyPolicy is stable or fair only");
    if (n1_ < 1 || n1_ > shape_.shape.n_max) throw Error(ErrorCode::InvalidConfig, "n1 must lie in 1..N_max");
    set_ = ConsiderationSet(shape_.shape.n_max);
    if (kind_ == PolicyKind::Fair) set_sizes_.push_back(set_.size());
}

std::string GreedyPolicy::name() const { return policy_kind_name(kind_); }

EpochDecision GreedyPolicy::decide(const EpochContext& context) {
    const std::vector<SampleSet>& samples =
        plan_.mle_window == MleWindow::AllHistory ? context.pooled : context.previous_epoch;
    GreedyOutcome g = kind_ == PolicyKind::Stable
                          ? stable_greedy_decide(samples, plan_, context.h, shape_, context.current)
                          : fair_greedy_decide(samples, plan_, context.h, set_, shape_, context.current);
    if (kind_ == PolicyKind::Fair) set_sizes_.push_back(set_.size());
    return {g.decision, std::move(g.beta_hat), g.fit_fallback};
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const Instance& truth, int m, std::int64_t horizon) {
    check_instance_shape(truth);
    switch (config.kind) {
        case PolicyKind::Oracle: return std::make_unique<ConstantPolicy>("oracle", optimal_threshold(truth).n);
        case PolicyKind::None: return std::make_unique<ConstantPolicy>("none", Threshold::infinite());
        case PolicyKind::Fixed:
            if (!config.n || *config.n < 1) throw Error(ErrorCode::InvalidConfig, "fixed policy needs \"n\" >= 1");
            return std::make_unique<ConstantPolicy>("fixed", Threshold(*config.n));
        case PolicyKind::Stable:
        case PolicyKind::Fair: break;
    }
    EpochPlan plan;
    if (config.schedule == ScheduleMode::Practical) {
        plan = practical_epoch_plan(horizon, m, config.delta_c);
        if (config.t1) plan.t1 = *config.t1;
    } else {
        const RegularityReport report = validate_instance(truth);
        const double t_hat = config.t_hat_mix ? *config.t_hat_mix
                                              : tmix_upper_bound(truth.n_max, report.mu_min, report.mu_max);
        plan = theoretical_epoch_plan(report, truth, horizon, m, config.delta, t_hat);
    }
    if (config.mle_window) plan.mle_window = *config.mle_window;
    return std::make_unique<GreedyPolicy>(config.kind, plan, FitShape::from_instance(truth, config.fit_link, config.fit_method),
                                          config.n1.value_or(truth.n_max));
}

}  // namespace loyalty
