#include "loyalty/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loyalty/error.hpp"

namespace loyalty {

namespace {

void require_chain(std::span<const double> phi) {
    if (phi.size() < 2)
        throw Error(ErrorCode::DegenerateChain, "threshold must be >= 1 (need phi(0..N) with N >= 1)");
}

void require_positive(std::span<const double> phi) {
    for (std::size_t tau = 0; tau < phi.size(); ++tau)
        if (!(phi[tau] > 0.0))
            throw Error(ErrorCode::DegenerateChain, "phi(" + std::to_string(tau) + ") is not positive");
}

}  // namespace

std::vector<double> stationary_distribution(std::span<const double> phi) {
    require_chain(phi);
    require_positive(phi);
    std::vector<double> p(phi.size());
    double total = 0.0;
    for (std::size_t tau = 0; tau < phi.size(); ++tau) {
        p[tau] = 1.0 / phi[tau];
        total += p[tau];
    }
    for (double& v : p) v /= total;
    return p;
}

std::vector<double> stationary_distribution(const TypeSpec& spec, int n) {
    return stationary_distribution(purchase_curve(spec, n));
}

double long_run_revenue(std::span<const double> phi, ZeroProbability zeros) {
    require_chain(phi);
    double cycle = 0.0;
    for (std::size_t tau = 0; tau < phi.size(); ++tau) {
        if (!(phi[tau] > 0.0)) {
            if (zeros == ZeroProbability::Allow) return 0.0;
            throw Error(ErrorCode::DegenerateChain, "phi(" + std::to_string(tau) + ") is not positive");
        }
        cycle += 1.0 / phi[tau];
    }
    return static_cast<double>(phi.size() - 1) / cycle;
}

double long_run_revenue_type(const TypeSpec& spec, Threshold n, ZeroProbability zeros) {
    if (n.is_infinite()) return spec.baseline;
    return long_run_revenue(purchase_curve(spec, n.value()), zeros);
}

double mixture_revenue(const Instance& instance, Threshold n, ZeroProbability zeros) {
    double total = 0.0;
    for (std::size_t k = 0; k < instance.types.size(); ++k)
        total += instance.rho[k] * long_run_revenue_type(instance.types[k], n, zeros);
    return total;
}

ThresholdChoice argmax_threshold(std::span<const double> finite_values, double infinite_value) {
    ThresholdChoice best{Threshold::infinite(), infinite_value};
    double best_finite = -std::numeric_limits<double>::infinity();
    int best_n = 0;
    for (std::size_t i = 0; i < finite_values.size(); ++i) {
        if (finite_values[i] > best_finite) {
            best_finite = finite_values[i];
            best_n = static_cast<int>(i) + 1;
        }
    }
    if (best_n > 0 && best_finite > infinite_value) best = {Threshold(best_n), best_finite};
    return best;
}

namespace {

std::vector<double> finite_mixture_values(const Instance& instance) {
    std::vector<double> values(static_cast<std::size_t>(instance.n_max), 0.0);
    for (std::size_t k = 0; k < instance.types.size(); ++k) {
        const std::vector<double> phi = purchase_curve(instance.types[k], instance.n_max);
        for (int n = 1; n <= instance.n_max; ++n)
            values[static_cast<std::size_t>(n - 1)] +=
                instance.rho[k] * long_run_revenue(std::span(phi).first(static_cast<std::size_t>(n) + 1),
                                                   ZeroProbability::Allow);
    }
    return values;
}

}  // namespace

ThresholdChoice optimal_threshold(const Instance& instance) {
    return argmax_threshold(finite_mixture_values(instance), instance.no_loyalty_revenue());
}

ThresholdChoice optimal_finite_threshold(const Instance& instance) {
    return argmax_threshold(finite_mixture_values(instance), -std::numeric_limits<double>::infinity());
}

PersonalizedOptimum optimal_personalized(const Instance& instance) {
    PersonalizedOptimum out;
    for (std::size_t k = 0; k < instance.types.size(); ++k) {
        const TypeSpec& spec = instance.types[k];
        const std::vector<double> phi = purchase_curve(spec, instance.n_max);
        std::vector<double> values(static_cast<std::size_t>(instance.n_max));
        for (int n = 1; n <= instance.n_max; ++n)
            values[static_cast<std::size_t>(n - 1)] =
                long_run_revenue(std::span(phi).first(static_cast<std::size_t>(n) + 1), ZeroProbability::Allow);
        out.per_type.push_back(argmax_threshold(values, spec.baseline));
        out.revenue += instance.rho[k] * out.per_type.back().value;
    }
    return out;
}

double price_of_fairness(const Instance& instance) {
    const double non_pers = optimal_threshold(instance).value;
    if (!(non_pers > 0.0)) throw Error(ErrorCode::ZeroRevenue, "optimal non-personalized revenue is 0");
    return optimal_personalized(instance).revenue / non_pers;
}

double pof_upper_bound(int k) {
    if (k < 1) throw Error(ErrorCode::OutOfRange, "number of types must be >= 1");
    if (k == 1) return 1.0;
    const double kk = static_cast<double>(k);
    return kk - (kk - 1.0) * std::pow(2.0, -1.0 / (kk - 1.0));
}

StationaryProfile steady_state_profile(std::span<const double> phi) {
    StationaryProfile prof;
    prof.n = static_cast<int>(phi.size()) - 1;
    prof.p = stationary_distribution(phi);
    prof.revenue = long_run_revenue(phi);
    for (std::size_t tau = 0; tau < prof.p.size(); ++tau) {
        const double t = static_cast<double>(tau);
        prof.nu += t * prof.p[tau];
        prof.nu2 += t * t * prof.p[tau];
    }
    // The pairwise form sum_{a<b} (a-b)^2 p_a p_b equals the variance and is never negative.
    double var = 0.0;
    for (std::size_t a = 0; a < prof.p.size(); ++a)
        for (std::size_t b = a + 1; b < prof.p.size(); ++b) {
            const double d = static_cast<double>(b) - static_cast<double>(a);
            var += d * d * prof.p[a] * prof.p[b];
        }
    prof.variance = var;
    return prof;
}

StationaryProfile steady_state_profile(const TypeSpec& spec, int n) {
    return steady_state_profile(purchase_curve(spec, n));
}

double variance_lower_bound(std::span<const double> phi) {
    const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
    const double n = static_cast<double>(phi.size()) - 1.0;
    return (*lo) * (*lo) / (12.0 * (*hi) * (*hi)) * n * (n + 2.0);
}

TransitionMatrix transition_matrix(std::span<const double> phi) {
    require_chain(phi);
    TransitionMatrix m;
    m.size = static_cast<int>(phi.size());
    m.entries.assign(static_cast<std::size_t>(m.size) * m.size, 0.0);
    for (int tau = 0; tau < m.size; ++tau) {
        const int next = (tau + m.size - 1) % m.size;
        m.entries[static_cast<std::size_t>(tau) * m.size + tau] = 1.0 - phi[static_cast<std::size_t>(tau)];
        m.entries[static_cast<std::size_t>(tau) * m.size + next] += phi[static_cast<std::size_t>(tau)];
    }
    return m;
}

TransitionMatrix transition_matrix(const TypeSpec& spec, int n) {
    return transition_matrix(purchase_curve(spec, n));
}

std::int64_t empirical_mixing_time(std::span<const double> phi, double eps, std::int64_t max_iter) {
    require_chain(phi);
    require_positive(phi);
    if (std::all_of(phi.begin(), phi.end(), [](double v) { return v >= 1.0; }))
        throw Error(ErrorCode::PeriodicChain, "phi == 1 everywhere: deterministic cycle never mixes");

    const std::size_t size = phi.size();
    const std::vector<double> target = stationary_distribution(phi);
    // rows[s] holds P^t(s, .); each step is a sparse row-vector product.
    std::vector<std::vector<double>> rows(size, std::vector<double>(size, 0.0));
    for (std::size_t s = 0; s < size; ++s) rows[s][s] = 1.0;
    std::vector<double> next(size);
    for (std::int64_t t = 1; t <= max_iter; ++t) {
        double worst = 0.0;
        for (auto& row : rows) {
            for (std::size_t tau = 0; tau < size; ++tau) {
                const std::size_t from = (tau + 1) % size;  // (tau + 1) moves down to tau
                next[tau] = row[tau] * (1.0 - phi[tau]) + row[from] * phi[from];
            }
            row.swap(next);
            double tv = 0.0;
            for (std::size_t tau = 0; tau < size; ++tau) tv += std::abs(row[tau] - target[tau]);
            worst = std::max(worst, 0.5 * tv);
        }
        if (worst <= eps) return t;
    }
    throw Error(ErrorCode::IterationCap, "mixing time exceeds " + std::to_string(max_iter) + " steps");
}

std::int64_t empirical_mixing_time(const TypeSpec& spec, int n, double eps) {
    return empirical_mixing_time(purchase_curve(spec, n), eps);
}

double tmix_upper_bound(int n_max, double mu_min, double mu_max) {
    if (mu_max >= 1.0) return std::numeric_limits<double>::infinity();
    if (!(mu_min > 0.0)) throw Error(ErrorCode::OutOfRange, "mu_min must be > 0");
    const double states = static_cast<double>(n_max) + 1.0;
    return states * states / (2.0 * (1.0 - mu_max) * mu_min);
}

}  // namespace loyalty
