#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loyalty/core_model.hpp"
#include "loyalty/simulator.hpp"

namespace loyalty {

/// The three regret notions of one run, accumulated in one pass over the
/// periods. observable == counterfactual + mixing_loss up to rounding.
struct RegretBreakdown {
    double counterfactual = 0.0;
    double observable = 0.0;
    double mixing_loss = 0.0;
};

/// M T R^non-pers - sum_t M R(N_t), with R^non-pers the best goal including
/// no loyalty.
double counterfactual_regret(const RunRecord& run, const Instance& truth);
/// M T R^non-pers - sum_t sum_j phi(tau_jt) 1{tau_jt > 0}; a paused customer
/// contributes its baseline.
double observable_regret(const RunRecord& run, const Instance& truth);
/// sum_t sum_k [rho_k M R_k(N_t) - sum_{j in k} phi_k(tau_jt) 1{tau_jt > 0}].
double mixing_loss(const RunRecord& run, const Instance& truth);
RegretBreakdown regret_breakdown(const RunRecord& run, const Instance& truth);

/// Counterfactual regret accumulated over each period prefix: entry t holds
/// the regret of periods 0..t.
std::vector<double> cumulative_regret(const RunRecord& run, const Instance& truth);

/// gamma = sum_t R(N_t) / (T R(N*)) with N* the best finite goal. Throws ZeroRevenue.
double performance_ratio(const RunRecord& run, const Instance& truth);

struct AdaptivityStats {
    int n_changes = 0;
    int n_increases = 0;
    /// Mean of |N' - N| / N over finite-to-finite changes (fraction, 0 if none).
    double mean_abs_rel_change = 0.0;
    /// Mean of (N' - N) / N over increases (fraction, 0 if none).
    double mean_rel_increase = 0.0;
};

/// Scans consecutive distinct thresholds. Switches to or from no loyalty
/// count as changes without a relative term and are never increases.
AdaptivityStats adaptivity_stats(const std::vector<Threshold>& sequence);
AdaptivityStats adaptivity_stats(const RunRecord& run);

struct MetricsRow {
    std::uint64_t seed = 0;
    std::string policy;
    std::int64_t t = 0;
    int m = 0;
    double regret = 0.0;
    double obs_regret = 0.0;
    double mixing_loss = 0.0;
    double gamma = 0.0;
    AdaptivityStats adaptivity;
};

MetricsRow evaluate_run(const RunRecord& run, const Instance& truth);

std::string metrics_csv_header();
std::string metrics_csv_line(const MetricsRow& row);

}  // namespace loyalty
