#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "loyalty/error.hpp"
#include "loyalty/experiments.hpp"
#include "loyalty/rng.hpp"
#include "loyalty/simulator.hpp"
#include "loyalty/steady_state.hpp"

using namespace loyalty;

namespace {

Instance single(const TypeSpec& t, int n_max = 20) { return Instance{{t}, {1.0}, n_max}; }

const TypeSpec kAlways{LinkKind::LinearPP, 0.5, 0.0, 0.5, {}};

// Replays the draws of one customer from the raw counter stream.
struct FixedSource final : UniformSource {
    std::vector<double> values;
    std::size_t at = 0;
    double next_uniform() override { return values.at(at++); }
};

}  // namespace

TEST_CASE("counter rng is addressable and stream-separated") {
    CounterRng a(3), b(3), c(3, 1);
    for (int i = 0; i < 5; ++i) CHECK(a.next_bits() == b.bits_at(static_cast<std::uint64_t>(i)));
    CHECK(CounterRng(3).bits_at(0) != c.bits_at(0));
    CHECK(CounterRng(4).bits_at(0) != CounterRng(3).bits_at(0));
    for (int i = 0; i < 1000; ++i) {
        const double u = a.next_uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("deterministic two-cycle at threshold one") {
    CustomerState s;
    CustomerOutcome o = step_customer(s, Threshold(1), kAlways, 0.99);
    CHECK(o.tau == 1);
    CHECK(o.x);
    CHECK_FALSE(o.redeemed);
    CHECK(s.stock == 1);
    o = step_customer(s, Threshold(1), kAlways, 0.99);
    CHECK(o.tau == 0);
    CHECK(o.x);
    CHECK(o.redeemed);
    CHECK(s.stock == 0);

    const RunRecord run = simulate_fixed(single(kAlways, 1), Threshold(1), 1, 10, 0);
    CHECK(run.purchases() == 5);
    CHECK(run.redemptions() == 5);
}

TEST_CASE("paused periods keep the stock and buy at baseline") {
    const TypeSpec t{LinkKind::ExponentialPP, 1.0, -1.0, 0.3, {}};
    CustomerState s{0, 4};
    CustomerOutcome o = step_customer(s, Threshold::infinite(), t, 0.29);
    CHECK(o.tau == kPausedTau);
    CHECK(o.x);
    CHECK(s.stock == 4);
    o = step_customer(s, Threshold::infinite(), t, 0.31);
    CHECK_FALSE(o.x);
    CHECK(s.stock == 4);
}

TEST_CASE("lowered threshold puts a customer at redemption and clears the stock") {
    CustomerState s{0, 4};
    const CustomerOutcome o = step_customer(s, Threshold(2), kAlways, 0.1);
    CHECK(o.tau == 0);
    CHECK(o.redeemed);
    CHECK(s.stock == 0);
}

TEST_CASE("advance_period draws one uniform per customer in index order") {
    Instance inst = single(kAlways, 3);
    inst.types[0] = {LinkKind::NoPressure, 0, 0, 0.5, {}};
    std::vector<CustomerState> states(3);
    FixedSource src;
    src.values = {0.4, 0.6, 0.1};
    const PeriodOutcome p = advance_period(states, Threshold(3), inst, src);
    CHECK(src.at == 3);
    CHECK(p.customers[0].x);
    CHECK_FALSE(p.customers[1].x);
    CHECK(p.customers[2].x);
}

TEST_CASE("customer partition") {
    Instance inst = regret_instance();
    const std::vector<int> types = customer_partition(inst, 4);
    CHECK(types == std::vector<int>{0, 0, 1, 1});
    try {
        (void)customer_partition(inst, 3);
        FAIL("expected NonIntegralPartition");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonIntegralPartition);
    }
}

TEST_CASE("simulation is deterministic and replays the counter stream") {
    const Instance inst = regret_instance();
    const RunRecord a = simulate_fixed(inst, Threshold(6), 4, 300, 17);
    const RunRecord b = simulate_fixed(inst, Threshold(6), 4, 300, 17);
    std::ostringstream sa, sb;
    write_run_csv(sa, a);
    write_run_csv(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(a.final_stocks == b.final_stocks);
    const RunRecord c = simulate_fixed(inst, Threshold(6), 4, 300, 18);
    CHECK(c.xs != a.xs);

    // Customer 2 at period 5 uses counter 5 * m + 2 of stream 0.
    CounterRng rng(17);
    std::vector<CustomerState> states{{0, 0}, {0, 0}, {1, 0}, {1, 0}};
    for (std::int64_t t = 0; t < 6; ++t) {
        const PeriodOutcome p = advance_period(states, Threshold(6), inst, rng);
        if (t == 5) CHECK(p.customers[2].x == (a.xs[a.index(5, 2)] != 0));
    }
}

TEST_CASE("draw slots permute which counter a customer consumes") {
    const TypeSpec t{LinkKind::NoPressure, 0, 0, 0.5, {}};
    Instance inst{{t}, {1.0}, 2};
    SimulationOptions swap;
    swap.draw_slot = {1, 0};
    const RunRecord a = simulate_fixed(inst, Threshold::infinite(), 2, 50, 9);
    const RunRecord b = simulate_fixed(inst, Threshold::infinite(), 2, 50, 9, swap);
    for (std::int64_t s = 0; s < 50; ++s) {
        CHECK(a.xs[a.index(s, 0)] == b.xs[b.index(s, 1)]);
        CHECK(a.xs[a.index(s, 1)] == b.xs[b.index(s, 0)]);
    }
    swap.draw_slot = {0, 0};
    CHECK_THROWS_AS(simulate_fixed(inst, Threshold(1), 2, 5, 9, swap), Error);
}

TEST_CASE("no-loyalty purchase rate matches the baseline") {
    const TypeSpec t{LinkKind::ExponentialPP, 1.0, -1.0, 0.3, {}};
    const std::int64_t T = 10000;
    const RunRecord run = simulate_fixed(single(t), Threshold::infinite(), 1, T, 4);
    const double rate = static_cast<double>(run.purchases()) / static_cast<double>(T);
    CHECK(std::abs(rate - 0.3) <= 3.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(T)));
    CHECK(run.redemptions() == 0);
}

TEST_CASE("long-run revenue rate approaches the closed form") {
    const TypeSpec t{LinkKind::ExponentialPP, 1.2, -0.9, 0.2, {}};
    for (int n : {2, 5, 9}) {
        const RunRecord run = simulate_fixed(single(t), Threshold(n), 1, 200000, 31);
        const double rate = static_cast<double>(run.purchases()) / 200000.0;
        CHECK(rate == doctest::Approx(long_run_revenue_type(t, Threshold(n))).epsilon(0.03));
    }
}

TEST_CASE("fixed-threshold policy reproduces simulate_fixed") {
    const Instance inst = regret_instance();
    ConstantPolicy fixed("fixed", Threshold(5));
    const RunRecord a = simulate_policy(inst, fixed, 2, 400, 3);
    const RunRecord b = simulate_fixed(inst, Threshold(5), 2, 400, 3);
    CHECK(a.xs == b.xs);
    CHECK(a.taus == b.taus);
    CHECK(a.epoch_log.size() == 1);
}

TEST_CASE("run record CSV has a versioned header and one row per customer-period") {
    const RunRecord run = simulate_fixed(regret_instance(), Threshold(2), 2, 3, 0);
    std::ostringstream os;
    write_run_csv(os, run);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# loyalty_lab run_record v1", 0) == 0);
    std::getline(in, line);
    CHECK(line == "period,threshold,customer,tau,x,redeemed");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
    CHECK(epoch_log_json(run).find("\"schema\": \"loyalty_lab.epoch_log\"") != std::string::npos);
}

TEST_CASE("simulator input validation") {
    const Instance inst = regret_instance();
    CHECK_THROWS_AS(simulate_fixed(inst, Threshold(3), 2, 0, 0), Error);
    SimulationOptions opts;
    opts.initial_stocks = {1};
    CHECK_THROWS_AS(simulate_fixed(inst, Threshold(3), 2, 5, 0, opts), Error);
}
