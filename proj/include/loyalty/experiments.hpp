#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "loyalty/core_model.hpp"
#include "loyalty/metrics.hpp"
#include "loyalty/policies.hpp"
#include "loyalty/rng.hpp"

namespace loyalty {

// Random instance generators. All parameters use b1 = alpha, b2 = -beta.

/// Type 1 (infrequent): baseline ~ U[0.05, 0.25], alpha, beta ~ U[1, 1.5].
/// Type 2 (frequent): baseline ~ U[0.5, 0.75], alpha, beta ~ U[0, 0.5].
/// ExponentialPP, rho = (1/2, 1/2), N_max = 20. Draw order per type:
/// baseline, alpha, beta.
Instance gen_two_type(UniformSource& rng);
/// gen_two_type with rho = (rho1, 1 - rho1); rho1 in (0, 1).
Instance gen_rho_sweep(UniformSource& rng, double rho1);
/// K >= 2 tiers, rho_k = 1/K. Tier i = 0..K-1: baseline ~ U[i/K, (i+1)/K],
/// alpha, beta ~ U[3(1 - i/K), 3(1 - (i-1)/K)].
Instance gen_k_tiers(UniformSource& rng, int k);
/// K = 1, N_max = 20, alpha, beta ~ U[1, 1.5] with the given truth link
/// (LinearPP, ExponentialPP or LogitPP) and baseline.
Instance gen_misspec(UniformSource& rng, LinkKind truth, double phi_bar);

/// Two K = 1, N_max = 2 LinearPP instances with phi(tau) = 1/2 + b2 tau, where
/// b2 = sqrt((1 -/+ delta)/8) - 1/2. N* is 1 for the first and 2 for the second.
struct LowerBoundPair {
    Instance first;
    Instance second;
};
LowerBoundPair gen_lower_bound_pair(double delta);

enum class GapSide { First, Second };
/// Closed form of R(1) - R(2) for the chosen member of the pair.
double rev_gap_closed_form(double delta, GapSide side);

/// Two customer types used by the learning experiments: an infrequent buyer
/// with strong pressure near the goal and a frequent buyer with weak pressure.
Instance regret_instance();
/// N_max = 1 instance with PoF = 3/2 exactly.
Instance tight_instance();

/// Price-of-fairness histogram bins: width 0.01 on [1.0, 1.5].
inline constexpr double kPofBinLo = 1.0;
inline constexpr double kPofBinWidth = 0.01;
inline constexpr int kPofBins = 50;
/// Bin counts; values outside the range go to the nearest edge bin.
std::vector<std::int64_t> pof_histogram(const std::vector<double>& values);

/// Runs fn(0..n-1) on `jobs` threads; results are returned in index order.
template <class T>
std::vector<T> parallel_map(std::size_t n, int jobs, const std::function<T(std::size_t)>& fn);

enum class StudyKind { Pof, Rho, KTier, Learning, Misspec };

std::string study_name(StudyKind kind);
StudyKind parse_study(const std::string& name);

struct StudyConfig {
    StudyKind kind = StudyKind::Pof;
    int replications = 100;
    std::uint64_t master_seed = 0;
    /// Learning and misspecification horizons.
    std::vector<std::int64_t> horizons;
    int m = 2;
    std::vector<PolicyConfig> policies;
    /// Rho sweep grid for StudyKind::Rho.
    std::vector<double> rho_grid;
    /// Tier counts for StudyKind::KTier.
    std::vector<int> k_grid;
    /// Truth links and baselines for StudyKind::Misspec.
    std::vector<LinkKind> truths;
    std::vector<double> phi_bars;
    /// Empty: no files are written.
    std::filesystem::path output;
    int jobs = 1;
};

/// Paper-scale defaults for each study (replication counts, grids, horizons).
StudyConfig default_study_config(StudyKind kind);
/// Throws InvalidConfig (replications < 1, empty horizons for learning
/// studies, bad grids, m < 1).
void validate_study_config(const StudyConfig& config);

struct StudyTable {
    std::string name;
    std::string csv;
};

/// CSV tables plus a JSON summary (schema "loyalty_lab.study_summary").
struct StudyResult {
    std::vector<StudyTable> tables;
    std::string summary_json;
};

inline constexpr int kStudySummaryVersion = 1;

/// Runs the study; seeds are master_seed + replication index. When
/// config.output is set writes <output>/<table>.csv and <output>/summary.json.
StudyResult run_study(const StudyConfig& config);

}  // namespace loyalty

#include "loyalty/detail/parallel_map.hpp"
