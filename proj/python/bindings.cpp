#include <cmath>
#include <limits>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "loyalty/error.hpp"
#include "loyalty/estimation.hpp"
#include "loyalty/experiments.hpp"
#include "loyalty/io.hpp"
#include "loyalty/metrics.hpp"
#include "loyalty/policies.hpp"
#include "loyalty/simulator.hpp"
#include "loyalty/steady_state.hpp"

namespace py = pybind11;
using namespace loyalty;

namespace {

// Thresholds cross the boundary as int, with math.inf for no loyalty.
Threshold to_threshold(const py::object& n) {
    if (py::isinstance<py::float_>(n)) {
        const double v = n.cast<double>();
        if (std::isinf(v) && v > 0) return Threshold::infinite();
        throw Error(ErrorCode::OutOfRange, "threshold must be a positive int or math.inf");
    }
    const int v = n.cast<int>();
    if (v < 1) throw Error(ErrorCode::OutOfRange, "threshold must be >= 1");
    return Threshold(v);
}

py::object from_threshold(Threshold n) {
    if (n.is_infinite()) return py::float_(std::numeric_limits<double>::infinity());
    return py::int_(n.value());
}

py::dict metrics_dict(const MetricsRow& r) {
    py::dict d;
    d["seed"] = r.seed;
    d["policy"] = r.policy;
    d["T"] = r.t;
    d["M"] = r.m;
    d["regret"] = r.regret;
    d["obs_regret"] = r.obs_regret;
    d["mixing_loss"] = r.mixing_loss;
    d["gamma"] = r.gamma;
    d["n_changes"] = r.adaptivity.n_changes;
    d["n_increases"] = r.adaptivity.n_increases;
    d["mean_rel_change"] = r.adaptivity.mean_abs_rel_change;
    d["mean_rel_increase"] = r.adaptivity.mean_rel_increase;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Loyalty-program analytics, simulation and learning experiments";

    static py::exception<Error> error(m, "LoyaltyError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Io)
                PyErr_SetString(PyExc_OSError, e.what());
            else
                py::set_error(error, e.what());
        }
    });

    py::enum_<LinkKind>(m, "LinkKind")
        .value("NoPressure", LinkKind::NoPressure)
        .value("LinearPP", LinkKind::LinearPP)
        .value("ExponentialPP", LinkKind::ExponentialPP)
        .value("LogitPP", LinkKind::LogitPP);

    py::class_<TypeSpec>(m, "TypeSpec")
        .def(py::init([](LinkKind link, double b1, double b2, double baseline) {
                 return TypeSpec{link, b1, b2, baseline, {}};
             }),
             py::arg("link"), py::arg("b1") = 0.0, py::arg("b2") = 0.0, py::arg("baseline") = 0.5)
        .def_readwrite("link", &TypeSpec::link)
        .def_readwrite("b1", &TypeSpec::b1)
        .def_readwrite("b2", &TypeSpec::b2)
        .def_readwrite("baseline", &TypeSpec::baseline)
        .def("__repr__", [](const TypeSpec& t) {
            return "TypeSpec(" + std::string(link_name(t.link)) + ", b1=" + std::to_string(t.b1) +
                   ", b2=" + std::to_string(t.b2) + ", baseline=" + std::to_string(t.baseline) + ")";
        });

    py::class_<Instance>(m, "Instance")
        .def(py::init([](std::vector<TypeSpec> types, std::vector<double> rho, int n_max) {
                 Instance inst{std::move(types), std::move(rho), n_max};
                 check_instance_shape(inst);
                 return inst;
             }),
             py::arg("types"), py::arg("rho"), py::arg("n_max"))
        .def_readonly("types", &Instance::types)
        .def_readonly("rho", &Instance::rho)
        .def_readonly("n_max", &Instance::n_max)
        .def("no_loyalty_revenue", &Instance::no_loyalty_revenue);

    m.def("instance_from_json", &instance_from_json, py::arg("text"));
    m.def("instance_to_json", &instance_to_json, py::arg("instance"));

    m.def("purchase_curve", &purchase_curve, py::arg("spec"), py::arg("n"));
    m.def(
        "stationary_distribution", [](const std::vector<double>& phi) { return stationary_distribution(phi); },
        py::arg("phi"));
    m.def(
        "long_run_revenue", [](const std::vector<double>& phi) { return long_run_revenue(phi); }, py::arg("phi"));
    m.def(
        "mixture_revenue",
        [](const Instance& inst, const py::object& n) {
            return mixture_revenue(inst, to_threshold(n), ZeroProbability::Allow);
        },
        py::arg("instance"), py::arg("n"));
    m.def(
        "optimal_threshold",
        [](const Instance& inst) {
            const ThresholdChoice c = optimal_threshold(inst);
            return py::make_tuple(from_threshold(c.n), c.value);
        },
        py::arg("instance"), "Returns (N*, R(N*)); N* is math.inf for no loyalty.");
    m.def(
        "optimal_personalized",
        [](const Instance& inst) {
            const PersonalizedOptimum p = optimal_personalized(inst);
            py::list per_type;
            for (const ThresholdChoice& c : p.per_type) per_type.append(py::make_tuple(from_threshold(c.n), c.value));
            return py::make_tuple(per_type, p.revenue);
        },
        py::arg("instance"));
    m.def("price_of_fairness", &price_of_fairness, py::arg("instance"));
    m.def("pof_upper_bound", &pof_upper_bound, py::arg("k"));
    m.def("tmix_upper_bound", &tmix_upper_bound, py::arg("n_max"), py::arg("mu_min"), py::arg("mu_max"));

    m.def(
        "gen_two_type", [](std::uint64_t seed) {
            CounterRng rng(seed, CounterRng::kInstanceStream);
            return gen_two_type(rng);
        },
        py::arg("seed"));
    m.def(
        "gen_rho_sweep", [](std::uint64_t seed, double rho1) {
            CounterRng rng(seed, CounterRng::kInstanceStream);
            return gen_rho_sweep(rng, rho1);
        },
        py::arg("seed"), py::arg("rho1"));
    m.def(
        "gen_k_tiers", [](std::uint64_t seed, int k) {
            CounterRng rng(seed, CounterRng::kInstanceStream);
            return gen_k_tiers(rng, k);
        },
        py::arg("seed"), py::arg("k"));
    m.def(
        "gen_misspec", [](std::uint64_t seed, LinkKind truth, double phi_bar) {
            CounterRng rng(seed, CounterRng::kInstanceStream);
            return gen_misspec(rng, truth, phi_bar);
        },
        py::arg("seed"), py::arg("truth"), py::arg("phi_bar"));
    m.def(
        "gen_lower_bound_pair", [](double delta) {
            LowerBoundPair p = gen_lower_bound_pair(delta);
            return py::make_tuple(p.first, p.second);
        },
        py::arg("delta"));
    m.def(
        "rev_gap_closed_form",
        [](double delta, const std::string& side) {
            if (side != "first" && side != "second") throw Error(ErrorCode::OutOfRange, "side must be first|second");
            return rev_gap_closed_form(delta, side == "first" ? GapSide::First : GapSide::Second);
        },
        py::arg("delta"), py::arg("side"));
    m.def("regret_instance", &regret_instance);
    m.def("tight_instance", &tight_instance);

    m.def(
        "fit_behavioural",
        [](const std::vector<int>& taus, const std::vector<int>& xs, LinkKind link, double baseline) {
            if (taus.size() != xs.size()) throw Error(ErrorCode::OutOfRange, "taus and xs differ in length");
            SampleSet s;
            for (std::size_t i = 0; i < taus.size(); ++i) s.add(taus[i], xs[i] != 0);
            const FitResult r = fit_behavioural(s, {link, baseline, {}});
            return py::make_tuple(r.beta.b1, r.beta.b2);
        },
        py::arg("taus"), py::arg("xs"), py::arg("link"), py::arg("baseline"));

    m.def(
        "simulate_fixed",
        [](const Instance& inst, const py::object& n, int pop, std::int64_t horizon, std::uint64_t seed) {
            RunRecord run;
            {
                py::gil_scoped_release release;
                run = simulate_fixed(inst, to_threshold(n), pop, horizon, seed);
            }
            py::dict d;
            d["taus"] = run.taus;
            d["xs"] = std::vector<int>(run.xs.begin(), run.xs.end());
            d["redeemed"] = std::vector<int>(run.redeemed.begin(), run.redeemed.end());
            d["purchases"] = run.purchases();
            d["redemptions"] = run.redemptions();
            d["final_stocks"] = run.final_stocks;
            return d;
        },
        py::arg("instance"), py::arg("n"), py::arg("m"), py::arg("horizon"), py::arg("seed") = 0,
        "Per-customer arrays are period-major (index t * m + j); tau is -1 when paused.");
    m.def(
        "learn",
        [](const Instance& inst, const std::string& config_json, int pop, std::int64_t horizon, std::uint64_t seed) {
            const PolicyConfig pc = parse_policy_config(config_json);
            MetricsRow row;
            std::vector<Threshold> path;
            {
                py::gil_scoped_release release;
                auto policy = make_policy(pc, inst, pop, horizon);
                const RunRecord run = simulate_policy(inst, *policy, pop, horizon, seed);
                row = evaluate_run(run, inst);
                for (const EpochEvent& e : run.epoch_log) path.push_back(e.threshold);
            }
            py::dict d = metrics_dict(row);
            py::list thresholds;
            for (Threshold t : path) thresholds.append(from_threshold(t));
            d["thresholds"] = thresholds;
            return d;
        },
        py::arg("instance"), py::arg("config_json"), py::arg("m"), py::arg("horizon"), py::arg("seed") = 0);
    m.def(
        "run_study",
        [](const std::string& name, int replications, std::uint64_t seed, int jobs, std::vector<std::int64_t> horizons) {
            StudyConfig c = default_study_config(parse_study(name));
            c.replications = replications;
            c.master_seed = seed;
            c.jobs = jobs;
            if (!horizons.empty()) c.horizons = std::move(horizons);
            StudyResult r;
            {
                py::gil_scoped_release release;
                r = run_study(c);
            }
            py::dict tables;
            for (const StudyTable& t : r.tables) tables[py::str(t.name)] = t.csv;
            return py::make_tuple(tables, r.summary_json);
        },
        py::arg("name"), py::arg("replications"), py::arg("seed") = 0, py::arg("jobs") = 1,
        py::arg("horizons") = std::vector<std::int64_t>{},
        "Returns ({table name: csv text}, summary json text).");
}
