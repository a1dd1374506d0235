#include <cmath>
#include <vector>

#include "doctest.h"
#include "loyalty/error.hpp"
#include "loyalty/experiments.hpp"
#include "loyalty/metrics.hpp"
#include "loyalty/policies.hpp"
#include "loyalty/steady_state.hpp"

using namespace loyalty;

namespace {

RunRecord run_config(const Instance& inst, const std::string& json, int m, std::int64_t t, std::uint64_t seed) {
    auto p = make_policy(parse_policy_config(json), inst, m, t);
    return simulate_policy(inst, *p, m, t, seed);
}

}  // namespace

TEST_CASE("oracle run has zero regret and unit performance ratio") {
    const Instance inst = regret_instance();
    const RunRecord run = run_config(inst, R"({"policy":"oracle"})", 2, 500, 1);
    CHECK(counterfactual_regret(run, inst) == 0.0);
    CHECK(performance_ratio(run, inst) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("no-loyalty run pays the constant revenue gap") {
    const Instance inst = regret_instance();
    const RunRecord run = run_config(inst, R"({"policy":"none"})", 2, 300, 1);
    const double gap = optimal_threshold(inst).value - inst.no_loyalty_revenue();
    REQUIRE(gap > 0.0);
    CHECK(counterfactual_regret(run, inst) == doctest::Approx(2.0 * 300.0 * gap).epsilon(1e-12));
    CHECK(mixing_loss(run, inst) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("fixed-threshold regret matches per-period summation") {
    const Instance inst = regret_instance();
    const RunRecord run = run_config(inst, R"({"policy":"fixed","n":4})", 2, 250, 2);
    const double best = optimal_threshold(inst).value;
    double acc = 0.0;
    for (std::int64_t t = 0; t < 250; ++t) acc += 2.0 * (best - mixture_revenue(inst, run.thresholds[t]));
    CHECK(counterfactual_regret(run, inst) == doctest::Approx(acc).epsilon(1e-12));
    const double r_star = optimal_finite_threshold(inst).value;
    CHECK(performance_ratio(run, inst) == doctest::Approx(mixture_revenue(inst, Threshold(4)) / r_star).epsilon(1e-12));
    const std::vector<double> cum = cumulative_regret(run, inst);
    CHECK(cum.size() == 250);
    CHECK(cum.back() == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("deterministic two-cycle has zero observable regret") {
    const Instance inst{{{LinkKind::LinearPP, 0.5, 0.0, 0.5, {}}}, {1.0}, 1};
    const RunRecord run = simulate_fixed(inst, Threshold(1), 1, 10, 0);
    CHECK(optimal_threshold(inst).value == doctest::Approx(0.5));
    CHECK(observable_regret(run, inst) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("observable regret splits into regret plus mixing loss") {
    const Instance inst = regret_instance();
    for (const char* cfg : {R"({"policy":"stable"})", R"({"policy":"fair"})", R"({"policy":"fixed","n":9})",
                            R"({"policy":"none"})"}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const RunRecord run = run_config(inst, cfg, 2, 1500, seed);
            const RegretBreakdown b = regret_breakdown(run, inst);
            CHECK(std::abs(b.observable - (b.counterfactual + b.mixing_loss)) <= 1e-9);
            CHECK(b.counterfactual == doctest::Approx(counterfactual_regret(run, inst)).epsilon(1e-12));
            CHECK(b.observable == doctest::Approx(observable_regret(run, inst)).epsilon(1e-12));
            CHECK(b.mixing_loss == doctest::Approx(mixing_loss(run, inst)).scale(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("mixing loss vanishes on average from a stationary start") {
    const TypeSpec t{LinkKind::ExponentialPP, 1.0, -0.8, 0.2, {}};
    const Instance inst{{t}, {1.0}, 6};
    const int n = 4;
    const std::vector<double> p = stationary_distribution(t, n);
    CounterRng draw(77, 5);
    double total = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        SimulationOptions opts;
        double u = draw.next_uniform();
        int tau = 0;
        while (tau < n && u >= p[tau]) u -= p[tau++];
        opts.initial_stocks = {n - tau};
        const RunRecord run = simulate_fixed(inst, Threshold(n), 1, 50, static_cast<std::uint64_t>(r), opts);
        total += mixing_loss(run, inst) / 50.0;
    }
    CHECK(std::abs(total / reps) < 0.02);
}

TEST_CASE("adaptivity conventions") {
    const AdaptivityStats flat = adaptivity_stats(std::vector<Threshold>{Threshold(5), Threshold(5)});
    CHECK(flat.n_changes == 0);
    CHECK(flat.n_increases == 0);
    CHECK(flat.mean_abs_rel_change == 0.0);

    const AdaptivityStats s =
        adaptivity_stats(std::vector<Threshold>{Threshold(20), Threshold(10), Threshold(12), Threshold(12)});
    CHECK(s.n_changes == 2);
    CHECK(s.n_increases == 1);
    CHECK(s.mean_abs_rel_change == doctest::Approx(0.35));
    CHECK(s.mean_rel_increase == doctest::Approx(0.2));

    const AdaptivityStats inf =
        adaptivity_stats(std::vector<Threshold>{Threshold(4), Threshold::infinite(), Threshold(4)});
    CHECK(inf.n_changes == 2);
    CHECK(inf.n_increases == 0);
    CHECK(inf.mean_abs_rel_change == 0.0);
}

TEST_CASE("metrics row and CSV schema") {
    CHECK(metrics_csv_header() ==
          "seed,policy,T,M,regret,obs_regret,mixing_loss,gamma,n_changes,n_increases,mean_rel_change,"
          "mean_rel_increase");
    const Instance inst = regret_instance();
    const RunRecord run = run_config(inst, R"({"policy":"oracle"})", 2, 10, 3);
    const MetricsRow row = evaluate_run(run, inst);
    CHECK(row.seed == 3);
    CHECK(row.policy == "oracle");
    CHECK(row.t == 10);
    CHECK(row.m == 2);
    CHECK(metrics_csv_line(row).rfind("3,oracle,10,2,", 0) == 0);
}

TEST_CASE("performance ratio rejects zero optimal revenue") {
    const Instance dead{{{LinkKind::NoPressure, 0, 0, 0.0, {}}}, {1.0}, 2};
    const RunRecord run = simulate_fixed(dead, Threshold(1), 1, 5, 0);
    CHECK_THROWS_AS(performance_ratio(run, dead), Error);
}
