// loyalty_lab command-line front end.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "loyalty/error.hpp"
#include "loyalty/estimation.hpp"
#include "loyalty/experiments.hpp"
#include "loyalty/io.hpp"
#include "loyalty/metrics.hpp"
#include "loyalty/policies.hpp"
#include "loyalty/simulator.hpp"
#include "loyalty/steady_state.hpp"

namespace {

using namespace loyalty;
using ojson = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("loyalty_lab");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("LOYALTY_LAB_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only honour real level names.
        if (level != spdlog::level::off || std::string(env) == "off")
            spdlog::set_level(level);
        else
            spdlog::warn("ignoring LOYALTY_LAB_LOG='{}'", env);
    }
}

ojson threshold_json(Threshold n) {
    if (n.is_infinite()) return "inf";
    return n.value();
}

Threshold parse_threshold(const std::string& text) {
    if (text == "inf") return Threshold::infinite();
    try {
        std::size_t used = 0;
        const int n = std::stoi(text, &used);
        if (used == text.size() && n >= 1) return Threshold(n);
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::OutOfRange, "threshold must be a positive integer or 'inf', got '" + text + "'");
}

void emit(const ojson& doc) { std::cout << doc.dump(2) << '\n'; }

struct Options {
    std::string instance;
    std::string out;
    std::uint64_t seed = 0;
    std::int64_t t = 5000;
    int m = 2;
    std::string policy = "stable";
    std::string schedule = "practical";
    int jobs = 1;
    std::string threshold;
    std::string samples;
    std::string config;
    std::string method = "behavioural";
    std::string study;
    int reps = 0;
    std::vector<std::int64_t> horizons;
    int k = 2;
    double delta = 0.25;
    int n_max = 20;
    std::optional<double> mu_min;
    std::optional<double> mu_max;
};

Instance load_instance(const Options& o) {
    if (o.instance.empty()) throw Error(ErrorCode::InvalidConfig, "--instance is required");
    spdlog::debug("reading instance {}", o.instance);
    return read_instance_file(o.instance);
}

int cmd_pof(const Options& o) {
    const Instance inst = load_instance(o);
    const ThresholdChoice np = optimal_threshold(inst);
    const PersonalizedOptimum pers = optimal_personalized(inst);
    ojson doc;
    doc["pof"] = price_of_fairness(inst);
    doc["n_star"] = threshold_json(np.n);
    doc["n_star_personalized"] = ojson::array();
    for (const ThresholdChoice& c : pers.per_type) doc["n_star_personalized"].push_back(threshold_json(c.n));
    doc["r_pers"] = pers.revenue;
    doc["r_nonpers"] = np.value;
    emit(doc);
    return kExitOk;
}

int cmd_optimize(const Options& o) {
    const Instance inst = load_instance(o);
    const ThresholdChoice np = optimal_threshold(inst);
    ojson doc;
    doc["n_star"] = threshold_json(np.n);
    doc["revenue"] = np.value;
    doc["no_loyalty_revenue"] = inst.no_loyalty_revenue();
    doc["revenue_curve"] = ojson::array();
    for (int n = 1; n <= inst.n_max; ++n)
        doc["revenue_curve"].push_back(mixture_revenue(inst, Threshold(n), ZeroProbability::Allow));
    auto& types = doc["types"] = ojson::array();
    for (const TypeSpec& t : inst.types) {
        ojson row;
        row["link"] = std::string(link_name(t.link));
        if (np.n.is_finite()) {
            const StationaryProfile p = steady_state_profile(t, np.n.value());
            row["revenue_at_n_star"] = p.revenue;
            row["stationary"] = p.p;
            row["mean_tau"] = p.nu;
            row["var_tau"] = p.variance;
        } else {
            row["revenue_at_n_star"] = t.baseline;
        }
        types.push_back(std::move(row));
    }
    const RegularityReport rep = validate_instance(inst);
    doc["regularity"] = {{"valid", rep.valid}, {"mu_min", rep.mu_min}, {"mu_max", rep.mu_max}, {"flags", rep.flags}};
    emit(doc);
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    const Instance inst = load_instance(o);
    if (o.threshold.empty()) throw Error(ErrorCode::InvalidConfig, "--n is required");
    const Threshold n = parse_threshold(o.threshold);
    spdlog::info("simulating N={} T={} M={} seed={}", n.to_string(), o.t, o.m, o.seed);
    const RunRecord run = simulate_fixed(inst, n, o.m, o.t, o.seed);
    if (!o.out.empty()) {
        std::ostringstream csv;
        write_run_csv(csv, run);
        write_text_file(std::filesystem::path(o.out) / "run.csv", csv.str());
        write_text_file(std::filesystem::path(o.out) / "epochs.json", epoch_log_json(run) + "\n");
    }
    ojson doc;
    doc["threshold"] = threshold_json(n);
    doc["T"] = o.t;
    doc["m"] = o.m;
    doc["seed"] = o.seed;
    doc["purchases"] = run.purchases();
    doc["redemptions"] = run.redemptions();
    doc["revenue_rate"] = static_cast<double>(run.purchases()) / static_cast<double>(o.t * o.m);
    doc["long_run_revenue"] = mixture_revenue(inst, n, ZeroProbability::Allow);
    emit(doc);
    return kExitOk;
}

int cmd_fit(const Options& o) {
    const Instance inst = load_instance(o);
    if (o.samples.empty()) throw Error(ErrorCode::InvalidConfig, "--samples is required");
    std::ifstream in(o.samples);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + o.samples);
    const std::vector<SampleSet> samples = read_samples_csv(in, inst.k());
    if (samples.size() > inst.k()) throw Error(ErrorCode::OutOfRange, "samples mention a type the instance lacks");
    FitMethod method;
    if (o.method == "behavioural")
        method = FitMethod::Behavioural;
    else if (o.method == "glm")
        method = FitMethod::Glm;
    else
        throw Error(ErrorCode::InvalidConfig, "--method must be behavioural|glm");
    ojson doc;
    auto& types = doc["types"] = ojson::array();
    for (std::size_t k = 0; k < inst.k(); ++k) {
        const TypeSpec& t = inst.types[k];
        ojson row;
        row["type"] = k;
        row["link"] = std::string(link_name(t.link));
        row["n"] = samples[k].size();
        if (t.link == LinkKind::NoPressure || samples[k].empty()) {
            row["beta_hat"] = nullptr;
        } else {
            const GlmModel model{t.link, t.baseline, t.box};
            FitOptions glm;
            glm.allow_ridge = true;
            const FitResult r = method == FitMethod::Behavioural ? fit_behavioural(samples[k], model)
                                                                 : fit_mle(samples[k], model, glm);
            row["beta_hat"] = {r.beta.b1, r.beta.b2};
            row["log_likelihood"] = r.log_likelihood;
            row["converged"] = r.converged;
        }
        types.push_back(std::move(row));
    }
    emit(doc);
    return kExitOk;
}

int cmd_learn(const Options& o) {
    const Instance inst = o.instance.empty() ? regret_instance() : load_instance(o);
    PolicyConfig pc;
    if (!o.config.empty()) {
        pc = parse_policy_config(read_text_file(o.config));
    } else {
        nlohmann::json raw{{"policy", o.policy}, {"schedule", o.schedule}};
        pc = parse_policy_config(raw.dump());
    }
    spdlog::info("learning with {} T={} M={} seed={}", policy_config_json(pc), o.t, o.m, o.seed);
    auto policy = make_policy(pc, inst, o.m, o.t);
    const RunRecord run = simulate_policy(inst, *policy, o.m, o.t, o.seed);
    const MetricsRow row = evaluate_run(run, inst);
    if (!o.out.empty()) {
        std::ostringstream csv;
        write_run_csv(csv, run);
        write_text_file(std::filesystem::path(o.out) / "run.csv", csv.str());
        write_text_file(std::filesystem::path(o.out) / "epochs.json", epoch_log_json(run) + "\n");
        write_text_file(std::filesystem::path(o.out) / "metrics.csv",
                        metrics_csv_header() + "\n" + metrics_csv_line(row) + "\n");
    }
    ojson doc;
    doc["seed"] = row.seed;
    doc["policy"] = row.policy;
    doc["T"] = row.t;
    doc["M"] = row.m;
    doc["regret"] = row.regret;
    doc["obs_regret"] = row.obs_regret;
    doc["mixing_loss"] = row.mixing_loss;
    doc["gamma"] = row.gamma;
    doc["n_changes"] = row.adaptivity.n_changes;
    doc["n_increases"] = row.adaptivity.n_increases;
    doc["mean_rel_change"] = row.adaptivity.mean_abs_rel_change;
    doc["mean_rel_increase"] = row.adaptivity.mean_rel_increase;
    doc["thresholds"] = ojson::array();
    for (const EpochEvent& e : run.epoch_log) doc["thresholds"].push_back(threshold_json(e.threshold));
    emit(doc);
    return kExitOk;
}

int cmd_study(const Options& o, const CLI::App& sub) {
    StudyConfig c = default_study_config(parse_study(o.study));
    if (sub.count("--seed")) c.master_seed = o.seed;
    if (o.reps > 0) c.replications = o.reps;
    if (sub.count("--m")) c.m = o.m;
    if (!o.horizons.empty()) c.horizons = o.horizons;
    if (sub.count("--schedule"))
        for (PolicyConfig& p : c.policies) p.schedule = o.schedule == "theoretical" ? ScheduleMode::Theoretical : ScheduleMode::Practical;
    c.jobs = o.jobs;
    c.output = o.out;
    spdlog::info("study {} reps={} seed={} jobs={}", study_name(c.kind), c.replications, c.master_seed, c.jobs);
    const StudyResult r = run_study(c);
    std::cout << r.summary_json << '\n';
    return kExitOk;
}

int cmd_lbpair(const Options& o) {
    const LowerBoundPair pair = gen_lower_bound_pair(o.delta);
    auto side = [](const Instance& inst, double closed) {
        ojson s = ojson::parse(instance_to_json(inst));
        s["phi"] = purchase_curve(inst.types[0], 2);
        const double r1 = mixture_revenue(inst, Threshold(1), ZeroProbability::Allow);
        const double r2 = mixture_revenue(inst, Threshold(2), ZeroProbability::Allow);
        s["r1"] = r1;
        s["r2"] = r2;
        s["gap"] = r1 - r2;
        s["gap_closed_form"] = closed;
        return s;
    };
    ojson doc;
    doc["delta"] = o.delta;
    doc["first"] = side(pair.first, rev_gap_closed_form(o.delta, GapSide::First));
    doc["second"] = side(pair.second, rev_gap_closed_form(o.delta, GapSide::Second));
    emit(doc);
    return kExitOk;
}

int cmd_bounds(const Options& o, const CLI::App& sub) {
    if (o.k < 1) throw Error(ErrorCode::OutOfRange, "--k must be >= 1");
    ojson doc;
    doc["k"] = o.k;
    doc["pof_upper_bound"] = pof_upper_bound(o.k);
    if (o.mu_min || o.mu_max) {
        if (!o.mu_min || !o.mu_max) throw Error(ErrorCode::InvalidConfig, "--mu-min and --mu-max go together");
        const double tmix = tmix_upper_bound(o.n_max, *o.mu_min, *o.mu_max);
        doc["n_max"] = o.n_max;
        if (std::isfinite(tmix))
            doc["tmix_upper_bound"] = tmix;
        else
            doc["tmix_upper_bound"] = "inf";
    } else if (sub.count("--n-max")) {
        throw Error(ErrorCode::InvalidConfig, "--n-max needs --mu-min and --mu-max");
    }
    emit(doc);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Loyalty-program analytics, simulation and learning experiments"};
    app.require_subcommand(1);
    Options o;

    auto add_instance = [&](CLI::App* s, bool required) {
        auto* opt = s->add_option("--instance", o.instance, "Instance JSON file");
        if (required) opt->required();
    };
    auto add_run = [&](CLI::App* s) {
        s->add_option("--seed", o.seed, "Random seed")->capture_default_str();
        s->add_option("--t", o.t, "Horizon in periods")->capture_default_str()->check(CLI::PositiveNumber);
        s->add_option("--m", o.m, "Population size")->capture_default_str()->check(CLI::PositiveNumber);
        s->add_option("--out", o.out, "Output directory");
    };

    auto* pof = app.add_subcommand("pof", "Price of fairness of an instance");
    add_instance(pof, true);
    auto* optimize = app.add_subcommand("optimize", "Optimal threshold and steady-state analytics");
    add_instance(optimize, true);
    auto* simulate = app.add_subcommand("simulate", "Simulate a fixed threshold and write the run record");
    add_instance(simulate, true);
    add_run(simulate);
    simulate->add_option("--n", o.threshold, "Threshold (integer or inf)")->required();
    auto* fit = app.add_subcommand("fit", "Fit purchase models from a (type,tau,x) CSV");
    add_instance(fit, true);
    fit->add_option("--samples", o.samples, "Sample CSV")->required();
    fit->add_option("--method", o.method, "behavioural|glm")->capture_default_str();
    auto* learn = app.add_subcommand("learn", "Run a learning policy end to end and print its metrics");
    add_instance(learn, false);
    add_run(learn);
    learn->add_option("--policy", o.policy, "stable|fair|oracle|none")->capture_default_str();
    learn->add_option("--schedule", o.schedule, "practical|theoretical")->capture_default_str();
    learn->add_option("--config", o.config, "Policy config JSON file (overrides --policy/--schedule)");
    auto* study = app.add_subcommand("study", "Run a batch study (pof|rho|ktier|learning|misspec)");
    study->add_option("name", o.study, "Study name")->required();
    study->add_option("--out", o.out, "Output directory");
    study->add_option("--seed", o.seed, "Master seed");
    study->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    study->add_option("--reps", o.reps, "Replications (default: study default)");
    study->add_option("--t", o.horizons, "Horizon list for learning studies");
    study->add_option("--m", o.m, "Population size");
    study->add_option("--schedule", o.schedule, "practical|theoretical");
    auto* lbpair = app.add_subcommand("lbpair", "Lower-bound instance pair and its revenue gaps");
    lbpair->add_option("--delta", o.delta, "Gap parameter in (0, 1/2]")->capture_default_str();
    auto* bounds = app.add_subcommand("bounds", "Price-of-fairness and mixing-time bounds");
    bounds->add_option("--k", o.k, "Number of types")->capture_default_str();
    bounds->add_option("--n-max", o.n_max, "Largest threshold")->capture_default_str();
    bounds->add_option("--mu-min", o.mu_min, "Smallest purchase probability");
    bounds->add_option("--mu-max", o.mu_max, "Largest purchase probability");

    for (CLI::App* s : {learn, study})
        s->get_option("--schedule")->check(CLI::IsMember({"practical", "theoretical"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*pof) return cmd_pof(o);
        if (*optimize) return cmd_optimize(o);
        if (*simulate) return cmd_simulate(o);
        if (*fit) return cmd_fit(o);
        if (*learn) return cmd_learn(o);
        if (*study) return cmd_study(o, *study);
        if (*lbpair) return cmd_lbpair(o);
        if (*bounds) return cmd_bounds(o, *bounds);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return e.code() == ErrorCode::Io ? kExitIo : kExitValidation;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitValidation;
    }
    return kExitValidation;
}
