#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "loyalty/error.hpp"
#include "loyalty/experiments.hpp"
#include "loyalty/io.hpp"
#include "loyalty/steady_state.hpp"

using namespace loyalty;

namespace {

struct Midpoint final : UniformSource {
    double next_uniform() override { return 0.5; }
};

void check_type(const TypeSpec& t, double baseline, double b1, double b2) {
    CHECK(t.baseline == doctest::Approx(baseline).epsilon(1e-15));
    CHECK(t.b1 == doctest::Approx(b1).epsilon(1e-15));
    CHECK(t.b2 == doctest::Approx(b2).epsilon(1e-15));
}

StudyConfig small(StudyKind kind, int reps) {
    StudyConfig c = default_study_config(kind);
    c.replications = reps;
    return c;
}

}  // namespace

TEST_CASE("generators at interval midpoints") {
    Midpoint mid;
    const Instance two = gen_two_type(mid);
    REQUIRE(two.k() == 2);
    check_type(two.types[0], 0.15, 1.25, -1.25);
    check_type(two.types[1], 0.625, 0.25, -0.25);
    CHECK(two.n_max == 20);
    CHECK(two.rho == std::vector<double>{0.5, 0.5});
    CHECK(two.types[0].link == LinkKind::ExponentialPP);

    const Instance rho = gen_rho_sweep(mid, 0.3);
    CHECK(rho.rho[0] == doctest::Approx(0.3));
    CHECK(rho.rho[1] == doctest::Approx(0.7));

    const Instance tiers = gen_k_tiers(mid, 2);
    check_type(tiers.types[0], 0.25, 3.75, -3.75);
    check_type(tiers.types[1], 0.75, 2.25, -2.25);

    const Instance mis = gen_misspec(mid, LinkKind::LogitPP, 0.15);
    REQUIRE(mis.k() == 1);
    check_type(mis.types[0], 0.15, 1.25, -1.25);
    CHECK(mis.types[0].link == LinkKind::LogitPP);
}

TEST_CASE("generator preconditions") {
    Midpoint mid;
    CHECK_THROWS_AS(gen_rho_sweep(mid, 0.0), Error);
    CHECK_THROWS_AS(gen_rho_sweep(mid, 1.0), Error);
    CHECK_THROWS_AS(gen_k_tiers(mid, 1), Error);
    CHECK_THROWS_AS(gen_misspec(mid, LinkKind::NoPressure, 0.1), Error);
    CHECK_THROWS_AS(gen_lower_bound_pair(0.0), Error);
    CHECK_THROWS_AS(gen_lower_bound_pair(0.6), Error);
}

TEST_CASE("rho one half reproduces the two-type generator") {
    CounterRng a(9, CounterRng::kInstanceStream), b(9, CounterRng::kInstanceStream);
    const Instance x = gen_two_type(a);
    const Instance y = gen_rho_sweep(b, 0.5);
    CHECK(instance_to_json(x) == instance_to_json(y));
}

TEST_CASE("generated instances are well formed and bounded") {
    CounterRng rng(42, CounterRng::kInstanceStream);
    for (int i = 0; i < 300; ++i) {
        const Instance inst = gen_two_type(rng);
        CHECK_NOTHROW(check_instance_shape(inst));
        CHECK(price_of_fairness(inst) <= 1.5 + 1e-9);
    }
    for (int k = 2; k <= 6; ++k) {
        const Instance inst = gen_k_tiers(rng, k);
        CHECK_NOTHROW(check_instance_shape(inst));
        CHECK(price_of_fairness(inst) <= pof_upper_bound(k) + 1e-9);
    }
}

TEST_CASE("lower-bound pair") {
    const LowerBoundPair p = gen_lower_bound_pair(0.3);
    const std::vector<double> phi = purchase_curve(p.first.types[0], 2);
    CHECK(phi[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(phi[1] == doctest::Approx(0.29580).epsilon(1e-4));
    CHECK(phi[2] == doctest::Approx(0.09161).epsilon(1e-4));

    const LowerBoundPair edge = gen_lower_bound_pair(0.5);
    CHECK(purchase_curve(edge.first.types[0], 2)[2] == 0.0);
    CHECK(rev_gap_closed_form(0.5, GapSide::First) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(rev_gap_closed_form(0.3, GapSide::First) == doctest::Approx(0.063128).epsilon(1e-5));

    for (double d : {0.1, 0.3, 0.5}) {
        const LowerBoundPair q = gen_lower_bound_pair(d);
        const auto gap = [](const Instance& inst) {
            return mixture_revenue(inst, Threshold(1), ZeroProbability::Allow) -
                   mixture_revenue(inst, Threshold(2), ZeroProbability::Allow);
        };
        CHECK(std::abs(gap(q.first) - rev_gap_closed_form(d, GapSide::First)) < 1e-12);
        CHECK(std::abs(gap(q.second) - rev_gap_closed_form(d, GapSide::Second)) < 1e-12);
        CHECK(gap(q.first) > 0.0);
        CHECK(gap(q.second) < 0.0);
    }
    CHECK(std::abs(rev_gap_closed_form(1e-9, GapSide::First)) < 1e-8);

    const LowerBoundPair tiny = gen_lower_bound_pair(1e-6);
    CHECK(std::abs(tiny.first.types[0].b2 - tiny.second.types[0].b2) < 1e-6);
}

TEST_CASE("fixed instances") {
    const Instance r = regret_instance();
    CHECK(r.n_max == 20);
    check_type(r.types[0], 0.25, 1.5, -1.5);
    check_type(r.types[1], 0.5, 0.05, -0.05);
    CHECK(optimal_threshold(r).n == Threshold(16));
    CHECK(std::abs(price_of_fairness(tight_instance()) - 1.5) < 1e-12);
}

TEST_CASE("price-of-fairness histogram") {
    const std::vector<std::int64_t> h = pof_histogram({1.0, 1.004, 1.015, 1.499, 1.7, 0.9});
    REQUIRE(h.size() == static_cast<std::size_t>(kPofBins));
    CHECK(h[0] == 3);
    CHECK(h[1] == 1);
    CHECK(h[49] == 2);
}

TEST_CASE("parallel map keeps index order and propagates errors") {
    const std::vector<int> out =
        parallel_map<int>(200, 4, std::function<int(std::size_t)>([](std::size_t i) { return static_cast<int>(i * i); }));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
    CHECK_THROWS_AS(parallel_map<int>(50, 3, std::function<int(std::size_t)>([](std::size_t i) -> int {
                        if (i == 17) throw Error(ErrorCode::OutOfRange, "boom");
                        return 0;
                    })),
                    Error);
}

TEST_CASE("study names and validation") {
    for (StudyKind k : {StudyKind::Pof, StudyKind::Rho, StudyKind::KTier, StudyKind::Learning, StudyKind::Misspec})
        CHECK(parse_study(study_name(k)) == k);
    CHECK_THROWS_AS(parse_study("table9"), Error);

    StudyConfig c = default_study_config(StudyKind::Learning);
    CHECK_NOTHROW(validate_study_config(c));
    c.horizons.clear();
    CHECK_THROWS_AS(validate_study_config(c), Error);
    c = default_study_config(StudyKind::Pof);
    c.replications = 0;
    CHECK_THROWS_AS(validate_study_config(c), Error);
    c = default_study_config(StudyKind::Rho);
    c.rho_grid = {0.5, 1.0};
    CHECK_THROWS_AS(validate_study_config(c), Error);
    c = default_study_config(StudyKind::KTier);
    c.k_grid = {1};
    CHECK_THROWS_AS(validate_study_config(c), Error);
}

TEST_CASE("studies are deterministic and independent of the thread count") {
    StudyConfig c = small(StudyKind::Pof, 300);
    c.master_seed = 5;
    const StudyResult a = run_study(c);
    c.jobs = 3;
    const StudyResult b = run_study(c);
    REQUIRE(a.tables.size() == b.tables.size());
    CHECK(a.tables[0].csv == b.tables[0].csv);
    CHECK(a.summary_json == b.summary_json);

    const auto s = nlohmann::json::parse(a.summary_json);
    CHECK(s["version"] == kStudySummaryVersion);
    CHECK(s["pof"]["max"].get<double>() <= 1.5);
    CHECK(s["pof"]["count"] == 300);
}

TEST_CASE("learning study writes its tables") {
    StudyConfig c = small(StudyKind::Learning, 2);
    c.horizons = {64, 128};
    c.output = std::filesystem::temp_directory_path() / "loyalty_lab_test_learning";
    std::filesystem::remove_all(c.output);
    const StudyResult r = run_study(c);
    CHECK(std::filesystem::exists(c.output / "summary.json"));
    for (const StudyTable& t : r.tables) CHECK(std::filesystem::exists(c.output / (t.name + ".csv")));
    const auto s = nlohmann::json::parse(read_text_file(c.output / "summary.json"));
    CHECK(s["cells"].size() == 4);
    for (const auto& cell : s["cells"]) CHECK(cell["max_identity_error"].get<double>() <= 1e-9);
    std::filesystem::remove_all(c.output);
}
