#include <cmath>
#include <vector>

#include "doctest.h"
#include "loyalty/error.hpp"
#include "loyalty/experiments.hpp"
#include "loyalty/metrics.hpp"
#include "loyalty/policies.hpp"
#include "loyalty/steady_state.hpp"
#include "support.hpp"

using namespace loyalty;
using loyalty::testing::stationary_samples;

namespace {

RegularityReport synthetic_report() {
    RegularityReport r;
    r.mu_min = 0.2;
    r.mu_max = 0.8;
    r.l_mu = 1.0;
    r.kappa = 0.1;
    r.g_mu = 1.0;
    r.valid = true;
    return r;
}

std::vector<SampleSet> truth_samples(const Instance& inst, std::int64_t n, int n_at) {
    std::vector<SampleSet> out;
    for (std::size_t k = 0; k < inst.k(); ++k)
        out.push_back(stationary_samples(inst.types[k], n_at, n, 100 + k));
    return out;
}

}  // namespace

TEST_CASE("theoretical schedule constants against hand evaluation") {
    const Instance inst{{{LinkKind::LinearPP, 0.3, -0.1, 0.2, {}}}, {1.0}, 2};
    const RegularityReport r = synthetic_report();
    const ConstantsBundle c = schedule_constants(r, inst, 36.0);
    CHECK(c.c0 == doctest::Approx(6.4e6).epsilon(1e-12));
    CHECK(c.c_lambda == doctest::Approx(0.0625 / 12.0).epsilon(1e-14));
    CHECK(c.c5 == doctest::Approx(10516.27310409919).epsilon(1e-12));

    const EpochPlan plan = theoretical_epoch_plan(r, inst, 100'000'000'000, 1, 0.1, 36.0);
    CHECK(plan.t1 == 39602777739);
    CHECK(plan.delta(2) == doctest::Approx(0.0801875373872414).epsilon(1e-12));
    CHECK(plan.mle_window == MleWindow::PreviousEpoch);
    for (int h = 2; h < 6; ++h) {
        CHECK(plan.length(h) == 2 * plan.length(h - 1));
        CHECK(plan.delta(h) / plan.delta(h + 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    }

    try {
        (void)theoretical_epoch_plan(r, inst, 5000, 1, 0.1, 36.0);
        FAIL("expected HorizonTooShort");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::HorizonTooShort);
    }
    CHECK_THROWS_AS(theoretical_epoch_plan(r, inst, 5000, 1, 1.5, 36.0), Error);
}

TEST_CASE("practical schedule") {
    const EpochPlan plan = practical_epoch_plan(5000, 2);
    CHECK(plan.t1 == 1);
    CHECK(plan.length(13) == 4096);
    CHECK(plan.epochs_for(5000) == 13);
    CHECK(plan.epochs_for(4095) == 12);
    CHECK(plan.delta(2) == doctest::Approx(0.15 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(std::isinf(plan.delta(1)));
    CHECK(practical_epoch_plan(1, 1).epochs_for(1) == 1);
    for (int h = 2; h < 12; ++h) CHECK(plan.delta(h + 1) < plan.delta(h));
}

TEST_CASE("consideration set basics") {
    ConsiderationSet s(5);
    CHECK(s.size() == 5);
    CHECK(s.max() == 5);
    s.filter([](int n) { return n % 2 == 1; });
    CHECK(s.thresholds() == std::vector<int>{1, 3, 5});
    CHECK(s.contains(3));
    CHECK_FALSE(s.contains(2));
}

TEST_CASE("policy config parsing") {
    const PolicyConfig c = parse_policy_config(
        R"({"policy":"fair","schedule":"practical","delta_c":0.2,"fit_link":"linear","fit_method":"glm","mle_window":"epoch"})");
    CHECK(c.kind == PolicyKind::Fair);
    CHECK(c.delta_c == 0.2);
    CHECK(c.fit_link == LinkKind::LinearPP);
    CHECK(c.fit_method == FitMethod::Glm);
    CHECK(c.mle_window == MleWindow::PreviousEpoch);
    CHECK(parse_policy_config(policy_config_json(c)).fit_method == FitMethod::Glm);
    CHECK(parse_policy_config("{}").fit_method == FitMethod::Behavioural);

    for (const char* bad : {R"({"policy":"greedy"})", R"({"colour":1})", R"({"fit_method":"bayes"})",
                            R"({"t1":0})", R"({"fit_link":"probit"})", "[1]", "{"}) {
        try {
            (void)parse_policy_config(bad);
            FAIL("expected InvalidConfig for " << bad);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidConfig);
        }
    }
}

TEST_CASE("greedy with plentiful truth samples picks the true optimum") {
    const Instance inst = regret_instance();
    const EpochPlan plan = practical_epoch_plan(5000, 2);
    const FitShape shape = FitShape::from_instance(inst);
    const std::vector<SampleSet> s = truth_samples(inst, 200000, inst.n_max);
    const GreedyOutcome g = stable_greedy_decide(s, plan, 20, shape, Threshold(1));
    CHECK(g.decision.threshold == optimal_threshold(inst).n);
    CHECK_FALSE(g.fit_fallback);
    CHECK(g.revenue_hat.size() == static_cast<std::size_t>(inst.n_max));
}

TEST_CASE("greedy terminates when the baseline dominates") {
    const Instance inst{{{LinkKind::NoPressure, 0, 0, 0.5, {}}}, {1.0}, 5};
    const FitShape shape = FitShape::from_instance(inst);
    const std::vector<SampleSet> none(1);
    CHECK(stable_greedy_decide(none, practical_epoch_plan(5000, 100), 12, shape, Threshold(3)).decision.terminates());
    // A loose margin keeps the program running.
    CHECK_FALSE(stable_greedy_decide(none, practical_epoch_plan(5000, 1), 2, shape, Threshold(3)).decision.terminates());
}

TEST_CASE("greedy keeps the previous threshold on an empty fit") {
    const Instance inst = regret_instance();
    const FitShape shape = FitShape::from_instance(inst);
    const std::vector<SampleSet> empty(2);
    const GreedyOutcome g = stable_greedy_decide(empty, practical_epoch_plan(100, 2), 2, shape, Threshold(7));
    CHECK(g.fit_fallback);
    CHECK(g.decision.threshold == Threshold(7));
}

TEST_CASE("fair greedy consideration sets") {
    const Instance inst = regret_instance();
    const FitShape shape = FitShape::from_instance(inst);
    const std::vector<SampleSet> s = truth_samples(inst, 200000, inst.n_max);

    ConsiderationSet loose(inst.n_max);
    EpochPlan huge = practical_epoch_plan(5000, 2, 1e6);
    const GreedyOutcome g = fair_greedy_decide(s, huge, 2, loose, shape, Threshold(inst.n_max));
    CHECK(loose.size() == static_cast<std::size_t>(inst.n_max));
    CHECK(g.decision.threshold == Threshold(inst.n_max));

    ConsiderationSet set(inst.n_max);
    const EpochPlan plan = practical_epoch_plan(5000, 2);
    Threshold prev(inst.n_max);
    std::size_t prev_size = set.size();
    for (int h = 2; h <= 30; ++h) {
        const GreedyOutcome o = fair_greedy_decide(s, plan, h, set, shape, prev);
        REQUIRE_FALSE(o.decision.terminates());
        CHECK(o.decision.threshold <= prev);
        CHECK(set.size() <= prev_size);
        prev = o.decision.threshold;
        prev_size = set.size();
    }
    CHECK(set.contains(optimal_threshold(inst).n.value()));
    CHECK(set.size() <= 3);
}

TEST_CASE("baseline policies") {
    const Instance inst = regret_instance();
    PolicyConfig oracle;
    oracle.kind = PolicyKind::Oracle;
    auto p = make_policy(oracle, inst, 2, 100);
    CHECK(p->initial_threshold() == optimal_threshold(inst).n);
    const RunRecord run = simulate_policy(inst, *p, 2, 100, 0);
    for (Threshold t : run.thresholds) CHECK(t == optimal_threshold(inst).n);

    PolicyConfig fixed;
    fixed.kind = PolicyKind::Fixed;
    CHECK_THROWS_AS(make_policy(fixed, inst, 2, 100), Error);
    fixed.n = 3;
    const RunRecord f = simulate_policy(inst, *make_policy(fixed, inst, 2, 50), 2, 50, 0);
    for (Threshold t : f.thresholds) CHECK(t == Threshold(3));

    PolicyConfig none;
    none.kind = PolicyKind::None;
    const RunRecord z = simulate_policy(inst, *make_policy(none, inst, 2, 50), 2, 50, 0);
    for (Threshold t : z.thresholds) CHECK(t.is_infinite());
    CHECK(mixing_loss(z, inst) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("stable greedy on the regret instance stays within the epoch budget") {
    const Instance inst = regret_instance();
    PolicyConfig c;
    auto p = make_policy(c, inst, 2, 5000);
    const RunRecord run = simulate_policy(inst, *p, 2, 5000, 0);
    CHECK(run.epoch_log.size() <= 13);
    CHECK(run.thresholds.size() == 5000);
    std::int64_t covered = 0;
    for (const EpochEvent& e : run.epoch_log) {
        CHECK(e.start == covered);
        covered += e.length;
    }
    CHECK(covered == 5000);
}

TEST_CASE("fair greedy never raises its threshold") {
    const Instance inst = regret_instance();
    PolicyConfig c;
    c.kind = PolicyKind::Fair;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto p = make_policy(c, inst, 2, 2000);
        const RunRecord run = simulate_policy(inst, *p, 2, 2000, seed);
        CHECK(adaptivity_stats(run).n_increases == 0);
    }
}
