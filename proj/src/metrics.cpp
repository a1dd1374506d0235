#include "loyalty/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "loyalty/error.hpp"
#include "loyalty/steady_state.hpp"

namespace loyalty {

namespace {

// Per-type long-run revenues keyed by threshold, computed once per run.
class RevenueTable {
public:
    explicit RevenueTable(const Instance& truth) : truth_(truth) {}

    const std::vector<double>& per_type(Threshold n) {
        auto it = cache_.find(n);
        if (it != cache_.end()) return it->second;
        std::vector<double> r;
        for (const TypeSpec& spec : truth_.types) r.push_back(long_run_revenue_type(spec, n, ZeroProbability::Allow));
        return cache_.emplace(n, std::move(r)).first->second;
    }

    double mixture(Threshold n) {
        const std::vector<double>& r = per_type(n);
        double total = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) total += truth_.rho[k] * r[k];
        return total;
    }

private:
    const Instance& truth_;
    std::map<Threshold, std::vector<double>> cache_;
};

struct RunSums {
    long double steady = 0.0L;    // sum_t sum_k rho_k M R_k(N_t)
    long double realized = 0.0L;  // sum_t sum_j expected revenue at the visited tau
    long double benchmark = 0.0L; // M T R^non-pers
    long double gap = 0.0L;       // sum_t M (R^non-pers - R(N_t)), exact zero for the oracle
};

RunSums accumulate(const RunRecord& run, const Instance& truth) {
    RevenueTable table(truth);
    RunSums s;
    const double best = optimal_threshold(truth).value;
    s.benchmark = static_cast<long double>(run.m) * run.horizon * best;
    std::vector<int> per_type_count(truth.k(), 0);
    for (int type : run.customer_types) ++per_type_count[static_cast<std::size_t>(type)];
    for (std::int64_t t = 0; t < run.horizon; ++t) {
        const Threshold n = run.thresholds[static_cast<std::size_t>(t)];
        s.gap += static_cast<long double>(run.m) * (best - table.mixture(n));
        const std::vector<double>& r = table.per_type(n);
        for (std::size_t k = 0; k < r.size(); ++k)
            s.steady += static_cast<long double>(truth.rho[k]) * run.m * r[k];
        for (int j = 0; j < run.m; ++j) {
            const TypeSpec& spec = truth.types[static_cast<std::size_t>(run.customer_types[static_cast<std::size_t>(j)])];
            const int tau = run.taus[run.index(t, j)];
            if (tau == kPausedTau)
                s.realized += spec.baseline;
            else if (tau > 0)
                s.realized += purchase_prob(spec, tau);
        }
    }
    return s;
}

}  // namespace

RegretBreakdown regret_breakdown(const RunRecord& run, const Instance& truth) {
    const RunSums s = accumulate(run, truth);
    return {static_cast<double>(s.gap), static_cast<double>(s.benchmark - s.realized),
            static_cast<double>(s.steady - s.realized)};
}

double counterfactual_regret(const RunRecord& run, const Instance& truth) {
    return regret_breakdown(run, truth).counterfactual;
}

double observable_regret(const RunRecord& run, const Instance& truth) { return regret_breakdown(run, truth).observable; }

double mixing_loss(const RunRecord& run, const Instance& truth) { return regret_breakdown(run, truth).mixing_loss; }

std::vector<double> cumulative_regret(const RunRecord& run, const Instance& truth) {
    RevenueTable table(truth);
    const double best = optimal_threshold(truth).value;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(run.horizon));
    long double acc = 0.0L;
    for (std::int64_t t = 0; t < run.horizon; ++t) {
        acc += static_cast<long double>(run.m) * (best - table.mixture(run.thresholds[static_cast<std::size_t>(t)]));
        out.push_back(static_cast<double>(acc));
    }
    return out;
}

double performance_ratio(const RunRecord& run, const Instance& truth) {
    const double best = optimal_finite_threshold(truth).value;
    if (!(best > 0.0)) throw Error(ErrorCode::ZeroRevenue, "optimal finite-goal revenue is 0");
    RevenueTable table(truth);
    long double total = 0.0L;
    for (Threshold n : run.thresholds) total += table.mixture(n);
    return static_cast<double>(total / (static_cast<long double>(run.horizon) * best));
}

AdaptivityStats adaptivity_stats(const std::vector<Threshold>& sequence) {
    AdaptivityStats s;
    double rel_sum = 0.0;
    int rel_count = 0;
    double inc_sum = 0.0;
    for (std::size_t i = 1; i < sequence.size(); ++i) {
        const Threshold prev = sequence[i - 1];
        const Threshold next = sequence[i];
        if (prev == next) continue;
        ++s.n_changes;
        if (prev.is_infinite() || next.is_infinite()) continue;
        const double rel = static_cast<double>(next.value() - prev.value()) / prev.value();
        rel_sum += std::abs(rel);
        ++rel_count;
        if (rel > 0.0) {
            ++s.n_increases;
            inc_sum += rel;
        }
    }
    if (rel_count > 0) s.mean_abs_rel_change = rel_sum / rel_count;
    if (s.n_increases > 0) s.mean_rel_increase = inc_sum / s.n_increases;
    return s;
}

AdaptivityStats adaptivity_stats(const RunRecord& run) {
    std::vector<Threshold> seq;
    for (const EpochEvent& e : run.epoch_log) seq.push_back(e.threshold);
    return adaptivity_stats(seq);
}

MetricsRow evaluate_run(const RunRecord& run, const Instance& truth) {
    MetricsRow row;
    row.seed = run.seed;
    row.policy = run.policy;
    row.t = run.horizon;
    row.m = run.m;
    const RegretBreakdown r = regret_breakdown(run, truth);
    row.regret = r.counterfactual;
    row.obs_regret = r.observable;
    row.mixing_loss = r.mixing_loss;
    row.gamma = performance_ratio(run, truth);
    row.adaptivity = adaptivity_stats(run);
    return row;
}

std::string metrics_csv_header() {
    return "seed,policy,T,M,regret,obs_regret,mixing_loss,gamma,n_changes,n_increases,mean_rel_change,"
           "mean_rel_increase";
}

std::string metrics_csv_line(const MetricsRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%llu,%s,%lld,%d,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g",
                  static_cast<unsigned long long>(row.seed), row.policy.c_str(), static_cast<long long>(row.t), row.m,
                  row.regret, row.obs_regret, row.mixing_loss, row.gamma, row.adaptivity.n_changes,
                  row.adaptivity.n_increases, row.adaptivity.mean_abs_rel_change, row.adaptivity.mean_rel_increase);
    return buf;
}

}  // namespace loyalty
