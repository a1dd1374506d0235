#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "loyalty/core_model.hpp"
#include "loyalty/estimation.hpp"
#include "loyalty/rng.hpp"
#include "loyalty/steady_state.hpp"

namespace loyalty::testing {

// Draws n (tau, x) pairs with tau from the stationary law of threshold n_max
// and x ~ Bernoulli(phi(tau)).
inline SampleSet stationary_samples(const TypeSpec& spec, int n_max, std::int64_t n, std::uint64_t seed) {
    const std::vector<double> phi = purchase_curve(spec, n_max);
    const std::vector<double> p = stationary_distribution(phi);
    CounterRng rng(seed, 7);
    SampleSet out;
    for (std::int64_t i = 0; i < n; ++i) {
        double u = rng.next_uniform();
        int tau = 0;
        while (tau < n_max && u >= p[static_cast<std::size_t>(tau)]) {
            u -= p[static_cast<std::size_t>(tau)];
            ++tau;
        }
        out.add(tau, rng.next_uniform() < phi[static_cast<std::size_t>(tau)]);
    }
    return out;
}

inline double distance(Beta a, Beta b) { return std::hypot(a.b1 - b.b1, a.b2 - b.b2); }

}  // namespace loyalty::testing
