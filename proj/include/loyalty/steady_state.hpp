#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "loyalty/core_model.hpp"
#include "loyalty/threshold.hpp"

namespace loyalty {

// Closed-form analytics of the points-to-redemption chain. For a threshold N
// the chain lives on tau in {0..N}; from tau it stays with probability
// 1 - phi(tau) and moves to (tau - 1) mod (N + 1) with probability phi(tau).
//
// Functions taking a span expect phi(0..N), i.e. N + 1 entries.

/// How to treat phi(tau) == 0 when computing revenues.
enum class ZeroProbability {
    Reject,  ///< throw DegenerateChain
    Allow,   ///< use the limit: revenue 0
};

std::vector<double> stationary_distribution(std::span<const double> phi);
std::vector<double> stationary_distribution(const TypeSpec& spec, int n);

/// R(N) = N / sum_{tau=0}^{N} 1/phi(tau).
double long_run_revenue(std::span<const double> phi, ZeroProbability zeros = ZeroProbability::Reject);
/// Infinite threshold returns the baseline.
double long_run_revenue_type(const TypeSpec& spec, Threshold n,
                             ZeroProbability zeros = ZeroProbability::Reject);

/// sum_k rho_k R_k(N); the no-loyalty option gives sum_k rho_k baseline_k.
double mixture_revenue(const Instance& instance, Threshold n,
                       ZeroProbability zeros = ZeroProbability::Reject);

struct ThresholdChoice {
    Threshold n;
    double value = 0.0;
};

/// Deterministic argmax: the smallest finite N wins ties among finite goals,
/// and the no-loyalty option wins an exact tie against the best finite goal.
ThresholdChoice argmax_threshold(std::span<const double> finite_values, double infinite_value);

/// Optimizers treat a zero purchase probability as revenue 0 (ZeroProbability::Allow).
ThresholdChoice optimal_threshold(const Instance& instance);
/// Best finite goal only (N* in the regret definitions).
ThresholdChoice optimal_finite_threshold(const Instance& instance);

struct PersonalizedOptimum {
    std::vector<ThresholdChoice> per_type;  ///< unweighted per-type maxima
    double revenue = 0.0;                    ///< sum_k rho_k value_k
};

PersonalizedOptimum optimal_personalized(const Instance& instance);

/// R^pers / R^non-pers. Throws ZeroRevenue when the denominator is 0.
double price_of_fairness(const Instance& instance);

/// K - (K - 1) 2^{-1/(K-1)}, and 1 for K = 1.
double pof_upper_bound(int k);

struct StationaryProfile {
    int n = 0;
    std::vector<double> p;
    double revenue = 0.0;
    double nu = 0.0;   ///< E[tau]
    double nu2 = 0.0;  ///< E[tau^2]
    double variance = 0.0;
};

StationaryProfile steady_state_profile(std::span<const double> phi);
StationaryProfile steady_state_profile(const TypeSpec& spec, int n);

/// mu_min^2 N (N + 2) / (12 mu_max^2) with mu over phi(0..N).
double variance_lower_bound(std::span<const double> phi);

/// Dense row-major (N+1) x (N+1) transition matrix.
struct TransitionMatrix {
    int size = 0;
    std::vector<double> entries;

    double operator()(int row, int col) const {
        return entries[static_cast<std::size_t>(row) * size + col];
    }
};

TransitionMatrix transition_matrix(std::span<const double> phi);
TransitionMatrix transition_matrix(const TypeSpec& spec, int n);

/// Smallest t with max_{tau0} TV(P^t(tau0, .), p) <= eps. Throws PeriodicChain when
/// phi == 1 everywhere, DegenerateChain when some phi is 0, IterationCap past max_iter.
std::int64_t empirical_mixing_time(std::span<const double> phi, double eps = 0.25,
                                   std::int64_t max_iter = 1'000'000);
std::int64_t empirical_mixing_time(const TypeSpec& spec, int n, double eps = 0.25);

/// (N_max + 1)^2 / (2 (1 - mu_max) mu_min); +infinity when mu_max == 1.
double tmix_upper_bound(int n_max, double mu_min, double mu_max);

}  // namespace loyalty
