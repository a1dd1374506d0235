#include "loyalty/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "loyalty/error.hpp"
#include "loyalty/io.hpp"
#include "loyalty/steady_state.hpp"

namespace loyalty {

namespace {

using ojson = nlohmann::ordered_json;

TypeSpec exp_type(UniformSource& rng, double base_lo, double base_hi, double slope_lo, double slope_hi) {
    TypeSpec t;
    t.link = LinkKind::ExponentialPP;
    t.baseline = rng.uniform(base_lo, base_hi);
    t.b1 = rng.uniform(slope_lo, slope_hi);
    t.b2 = -rng.uniform(slope_lo, slope_hi);
    return t;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / static_cast<long double>(v.size()));
}

double max_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

ojson summary_header(const StudyConfig& c) {
    ojson doc;
    doc["schema"] = "loyalty_lab.study_summary";
    doc["version"] = kStudySummaryVersion;
    doc["study"] = study_name(c.kind);
    doc["replications"] = c.replications;
    doc["master_seed"] = c.master_seed;
    return doc;
}

ojson pof_summary(const std::vector<double>& pofs) {
    ojson s;
    s["count"] = pofs.size();
    s["mean"] = mean_of(pofs);
    s["max"] = max_of(pofs);
    s["min"] = pofs.empty() ? 0.0 : *std::min_element(pofs.begin(), pofs.end());
    return s;
}

// Per-instance analytics shared by the three price-of-fairness studies.
struct PofRow {
    double pof = 0.0;
    ThresholdChoice nonpers;
    PersonalizedOptimum pers;
};

PofRow pof_row(const Instance& inst) {
    PofRow r;
    r.nonpers = optimal_threshold(inst);
    r.pers = optimal_personalized(inst);
    r.pof = price_of_fairness(inst);
    return r;
}

StudyResult run_pof(const StudyConfig& c) {
    const auto rows = parallel_map<PofRow>(static_cast<std::size_t>(c.replications), c.jobs, [&](std::size_t r) {
        CounterRng rng(c.master_seed + r, CounterRng::kInstanceStream);
        return pof_row(gen_two_type(rng));
    });
    std::ostringstream csv;
    csv << "replication,seed,pof,n_star,n_star_1,n_star_2,r_pers,r_nonpers\n";
    std::vector<double> pofs;
    std::map<std::string, std::int64_t> n_star_counts;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const PofRow& row = rows[r];
        pofs.push_back(row.pof);
        ++n_star_counts[row.nonpers.n.to_string()];
        csv << r << ',' << c.master_seed + r << ',' << fmt(row.pof) << ',' << row.nonpers.n.to_string() << ','
            << row.pers.per_type[0].n.to_string() << ',' << row.pers.per_type[1].n.to_string() << ','
            << fmt(row.pers.revenue) << ',' << fmt(row.nonpers.value) << '\n';
    }
    ojson doc = summary_header(c);
    doc["pof"] = pof_summary(pofs);
    doc["pof"]["bound"] = pof_upper_bound(2);
    doc["histogram"] = {{"lo", kPofBinLo}, {"width", kPofBinWidth}, {"counts", pof_histogram(pofs)}};
    ojson ns;
    for (int n = 1; n <= 20; ++n)
        if (n_star_counts.count(std::to_string(n))) ns[std::to_string(n)] = n_star_counts[std::to_string(n)];
    if (n_star_counts.count("inf")) ns["inf"] = n_star_counts["inf"];
    doc["n_star_counts"] = ns;
    return {{{"pof", csv.str()}}, doc.dump(2)};
}

StudyResult run_rho(const StudyConfig& c) {
    std::ostringstream csv;
    csv << "rho1,replication,seed,pof,n_star\n";
    ojson doc = summary_header(c);
    auto& cells = doc["cells"] = ojson::array();
    for (double rho1 : c.rho_grid) {
        const auto rows = parallel_map<PofRow>(static_cast<std::size_t>(c.replications), c.jobs, [&](std::size_t r) {
            CounterRng rng(c.master_seed + r, CounterRng::kInstanceStream);
            return pof_row(gen_rho_sweep(rng, rho1));
        });
        std::vector<double> pofs;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            pofs.push_back(rows[r].pof);
            csv << fmt(rho1) << ',' << r << ',' << c.master_seed + r << ',' << fmt(rows[r].pof) << ','
                << rows[r].nonpers.n.to_string() << '\n';
        }
        ojson cell = pof_summary(pofs);
        cell["rho1"] = rho1;
        cells.push_back(std::move(cell));
    }
    return {{{"rho", csv.str()}}, doc.dump(2)};
}

StudyResult run_ktier(const StudyConfig& c) {
    std::ostringstream csv;
    csv << "k,replication,seed,pof\n";
    ojson doc = summary_header(c);
    auto& cells = doc["cells"] = ojson::array();
    for (int k : c.k_grid) {
        const auto pofs = parallel_map<double>(static_cast<std::size_t>(c.replications), c.jobs, [&](std::size_t r) {
            CounterRng rng(c.master_seed + r, CounterRng::kInstanceStream);
            return price_of_fairness(gen_k_tiers(rng, k));
        });
        for (std::size_t r = 0; r < pofs.size(); ++r)
            csv << k << ',' << r << ',' << c.master_seed + r << ',' << fmt(pofs[r]) << '\n';
        ojson cell = pof_summary(pofs);
        cell["k"] = k;
        cell["bound"] = pof_upper_bound(k);
        cells.push_back(std::move(cell));
    }
    return {{{"ktier", csv.str()}}, doc.dump(2)};
}

// Everything kept from one learning run.
struct LearningRow {
    MetricsRow metrics;
    double identity_error = 0.0;
    std::vector<EpochEvent> epochs;
    std::vector<std::size_t> set_sizes;
    /// Mean counterfactual regret per period within each epoch.
    std::vector<double> epoch_regret;
};

LearningRow learning_row(const Instance& truth, const PolicyConfig& pc, int m, std::int64_t horizon,
                         std::uint64_t seed) {
    auto policy = make_policy(pc, truth, m, horizon);
    RunRecord run = simulate_policy(truth, *policy, m, horizon, seed);
    LearningRow row;
    row.metrics = evaluate_run(run, truth);
    row.identity_error = std::abs(row.metrics.obs_regret - (row.metrics.regret + row.metrics.mixing_loss));
    if (const auto* g = dynamic_cast<const GreedyPolicy*>(policy.get())) row.set_sizes = g->set_sizes();
    const std::vector<double> cum = cumulative_regret(run, truth);
    for (const EpochEvent& e : run.epoch_log) {
        const double before = e.start > 0 ? cum[static_cast<std::size_t>(e.start - 1)] : 0.0;
        const double after = cum[static_cast<std::size_t>(e.start + e.length - 1)];
        row.epoch_regret.push_back((after - before) / static_cast<double>(e.length));
    }
    row.epochs = std::move(run.epoch_log);
    return row;
}

struct Cell {
    std::string policy;
    std::int64_t t = 0;
    std::vector<LearningRow> rows;
};

ojson cell_summary(const Cell& cell) {
    std::vector<double> regret, obs, mix, gamma, changes, increases, rel_change, rel_increase, ident;
    for (const LearningRow& r : cell.rows) {
        const MetricsRow& m = r.metrics;
        regret.push_back(m.regret);
        obs.push_back(m.obs_regret);
        mix.push_back(m.mixing_loss);
        gamma.push_back(m.gamma);
        changes.push_back(m.adaptivity.n_changes);
        increases.push_back(m.adaptivity.n_increases);
        rel_change.push_back(m.adaptivity.mean_abs_rel_change);
        rel_increase.push_back(m.adaptivity.mean_rel_increase);
        ident.push_back(r.identity_error);
    }
    ojson s;
    s["policy"] = cell.policy;
    s["T"] = cell.t;
    s["runs"] = cell.rows.size();
    s["mean_regret"] = mean_of(regret);
    s["mean_regret_per_period"] = mean_of(regret) / static_cast<double>(cell.t);
    s["mean_obs_regret"] = mean_of(obs);
    s["mean_mixing_loss"] = mean_of(mix);
    s["mean_gamma"] = mean_of(gamma);
    s["mean_n_changes"] = mean_of(changes);
    s["mean_n_increases"] = mean_of(increases);
    s["max_n_increases"] = max_of(increases);
    s["mean_rel_change"] = mean_of(rel_change);
    s["mean_rel_increase"] = mean_of(rel_increase);
    s["max_identity_error"] = max_of(ident);
    return s;
}

// Per-epoch means over the replications that reached epoch h.
ojson epoch_profile(const Cell& cell) {
    std::vector<double> regret_sum, size_sum;
    std::vector<int> regret_n, size_n;
    for (const LearningRow& r : cell.rows) {
        for (std::size_t h = 0; h < r.epoch_regret.size(); ++h) {
            if (regret_sum.size() <= h) regret_sum.resize(h + 1), regret_n.resize(h + 1);
            regret_sum[h] += r.epoch_regret[h];
            ++regret_n[h];
        }
        for (std::size_t h = 0; h < r.set_sizes.size(); ++h) {
            if (size_sum.size() <= h) size_sum.resize(h + 1), size_n.resize(h + 1);
            size_sum[h] += static_cast<double>(r.set_sizes[h]);
            ++size_n[h];
        }
    }
    ojson p;
    p["regret_per_period"] = ojson::array();
    for (std::size_t h = 0; h < regret_sum.size(); ++h) p["regret_per_period"].push_back(regret_sum[h] / regret_n[h]);
    if (!size_sum.empty()) {
        p["consideration_set_size"] = ojson::array();
        for (std::size_t h = 0; h < size_sum.size(); ++h) p["consideration_set_size"].push_back(size_sum[h] / size_n[h]);
    }
    return p;
}

StudyResult run_learning(const StudyConfig& c) {
    const Instance truth = regret_instance();
    std::vector<Cell> cells;
    for (const PolicyConfig& pc : c.policies)
        for (std::int64_t t : c.horizons) {
            Cell cell{policy_kind_name(pc.kind), t, {}};
            cell.rows = parallel_map<LearningRow>(static_cast<std::size_t>(c.replications), c.jobs, [&](std::size_t r) {
                return learning_row(truth, pc, c.m, t, c.master_seed + r);
            });
            cells.push_back(std::move(cell));
        }
    std::ostringstream metrics, epochs;
    metrics << metrics_csv_header() << '\n';
    epochs << "policy,T,seed,h,start,length,threshold,terminated,set_size\n";
    ojson doc = summary_header(c);
    doc["m"] = c.m;
    doc["instance"] = ojson::parse(instance_to_json(truth));
    auto& out = doc["cells"] = ojson::array();
    for (const Cell& cell : cells) {
        for (const LearningRow& r : cell.rows) {
            metrics << metrics_csv_line(r.metrics) << '\n';
            for (std::size_t h = 0; h < r.epochs.size(); ++h) {
                const EpochEvent& e = r.epochs[h];
                epochs << cell.policy << ',' << cell.t << ',' << r.metrics.seed << ',' << e.h << ',' << e.start << ','
                       << e.length << ',' << e.threshold.to_string() << ',' << int(e.terminated) << ',';
                if (h < r.set_sizes.size()) epochs << r.set_sizes[h];
                epochs << '\n';
            }
        }
        ojson s = cell_summary(cell);
        s["epochs"] = epoch_profile(cell);
        out.push_back(std::move(s));
    }
    return {{{"metrics", metrics.str()}, {"epochs", epochs.str()}}, doc.dump(2)};
}

StudyResult run_misspec(const StudyConfig& c) {
    std::ostringstream csv;
    csv << "truth,phi_bar," << metrics_csv_header() << '\n';
    ojson doc = summary_header(c);
    doc["m"] = c.m;
    doc["fit_link"] = "linear";
    auto& out = doc["cells"] = ojson::array();
    for (LinkKind truth_link : c.truths)
        for (double phi_bar : c.phi_bars)
            for (std::int64_t t : c.horizons)
                for (PolicyConfig pc : c.policies) {
                    if (!pc.fit_link) pc.fit_link = LinkKind::LinearPP;
                    Cell cell{policy_kind_name(pc.kind), t, {}};
                    cell.rows = parallel_map<LearningRow>(
                        static_cast<std::size_t>(c.replications), c.jobs, [&](std::size_t r) {
                            CounterRng rng(c.master_seed + r, CounterRng::kInstanceStream);
                            const Instance truth = gen_misspec(rng, truth_link, phi_bar);
                            return learning_row(truth, pc, c.m, t, c.master_seed + r);
                        });
                    for (const LearningRow& r : cell.rows)
                        csv << link_name(truth_link) << ',' << fmt(phi_bar) << ',' << metrics_csv_line(r.metrics)
                            << '\n';
                    ojson s = cell_summary(cell);
                    s["truth"] = std::string(link_name(truth_link));
                    s["phi_bar"] = phi_bar;
                    out.push_back(std::move(s));
                }
    return {{{"misspec", csv.str()}}, doc.dump(2)};
}

}  // namespace

Instance gen_two_type(UniformSource& rng) { return gen_rho_sweep(rng, 0.5); }

Instance gen_rho_sweep(UniformSource& rng, double rho1) {
    if (!(rho1 > 0.0 && rho1 < 1.0)) throw Error(ErrorCode::OutOfRange, "rho1 must lie in (0, 1)");
    Instance inst;
    inst.n_max = 20;
    inst.types.push_back(exp_type(rng, 0.05, 0.25, 1.0, 1.5));
    inst.types.push_back(exp_type(rng, 0.5, 0.75, 0.0, 0.5));
    inst.rho = {rho1, 1.0 - rho1};
    return inst;
}

Instance gen_k_tiers(UniformSource& rng, int k) {
    if (k < 2) throw Error(ErrorCode::OutOfRange, "gen_k_tiers needs k >= 2");
    Instance inst;
    inst.n_max = 20;
    const double kk = k;
    for (int i = 0; i < k; ++i)
        inst.types.push_back(exp_type(rng, i / kk, (i + 1) / kk, 3.0 * (1.0 - i / kk), 3.0 * (1.0 - (i - 1) / kk)));
    inst.rho.assign(static_cast<std::size_t>(k), 1.0 / kk);
    return inst;
}

Instance gen_misspec(UniformSource& rng, LinkKind truth, double phi_bar) {
    if (truth == LinkKind::NoPressure) throw Error(ErrorCode::OutOfRange, "misspecification truth needs a pressure link");
    if (!(phi_bar >= 0.0 && phi_bar <= 1.0)) throw Error(ErrorCode::OutOfRange, "phi_bar must lie in [0, 1]");
    Instance inst;
    inst.n_max = 20;
    TypeSpec t;
    t.link = truth;
    t.baseline = phi_bar;
    t.b1 = rng.uniform(1.0, 1.5);
    t.b2 = -rng.uniform(1.0, 1.5);
    inst.types.push_back(t);
    inst.rho = {1.0};
    return inst;
}

LowerBoundPair gen_lower_bound_pair(double delta) {
    if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::OutOfRange, "delta must lie in (0, 1/2]");
    auto make = [](double root) {
        Instance inst;
        inst.n_max = 2;
        TypeSpec t;
        t.link = LinkKind::LinearPP;
        t.baseline = root - 0.25;
        t.b1 = 0.75 - root;
        t.b2 = root - 0.5;
        inst.types.push_back(t);
        inst.rho = {1.0};
        return inst;
    };
    return {make(std::sqrt((1.0 - delta) / 8.0)), make(std::sqrt((1.0 + delta) / 8.0))};
}

double rev_gap_closed_form(double delta, GapSide side) {
    if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::OutOfRange, "delta must lie in (0, 1/2]");
    if (side == GapSide::First) {
        const double s = std::sqrt(1.0 - delta);
        return delta * s / (2.0 * (s + std::sqrt(2.0)) * (std::sqrt(2.0 - 2.0 * delta) - delta));
    }
    const double s = std::sqrt(1.0 + delta);
    return -delta * s / (2.0 * (s + std::sqrt(2.0)) * (delta + std::sqrt(2.0 + 2.0 * delta)));
}

Instance regret_instance() {
    Instance inst;
    inst.n_max = 20;
    inst.types = {{LinkKind::ExponentialPP, 1.5, -1.5, 0.25, {}}, {LinkKind::ExponentialPP, 0.05, -0.05, 0.5, {}}};
    inst.rho = {0.5, 0.5};
    return inst;
}

Instance tight_instance() {
    Instance inst;
    inst.n_max = 1;
    inst.types = {{LinkKind::LinearPP, 1.0, 0.0, 0.0, {}}, {LinkKind::NoPressure, 0.0, 0.0, 1.0, {}}};
    inst.rho = {0.5, 0.5};
    return inst;
}

std::vector<std::int64_t> pof_histogram(const std::vector<double>& values) {
    std::vector<std::int64_t> counts(kPofBins, 0);
    for (double v : values) {
        // Snap values within rounding of an edge onto it before binning.
        const double pos = (v - kPofBinLo) / kPofBinWidth;
        const double snapped = std::abs(pos - std::round(pos)) < 1e-9 ? std::round(pos) : pos;
        const int bin = std::clamp(static_cast<int>(std::floor(snapped)), 0, kPofBins - 1);
        ++counts[static_cast<std::size_t>(bin)];
    }
    return counts;
}

std::string study_name(StudyKind kind) {
    switch (kind) {
        case StudyKind::Pof: return "pof";
        case StudyKind::Rho: return "rho";
        case StudyKind::KTier: return "ktier";
        case StudyKind::Learning: return "learning";
        case StudyKind::Misspec: return "misspec";
    }
    return "pof";
}

StudyKind parse_study(const std::string& name) {
    for (StudyKind k : {StudyKind::Pof, StudyKind::Rho, StudyKind::KTier, StudyKind::Learning, StudyKind::Misspec})
        if (study_name(k) == name) return k;
    throw Error(ErrorCode::InvalidConfig, "unknown study '" + name + "' (pof|rho|ktier|learning|misspec)");
}

StudyConfig default_study_config(StudyKind kind) {
    StudyConfig c;
    c.kind = kind;
    PolicyConfig stable;
    stable.kind = PolicyKind::Stable;
    PolicyConfig fair;
    fair.kind = PolicyKind::Fair;
    switch (kind) {
        case StudyKind::Pof:
            c.replications = 10000;
            c.master_seed = 42;
            break;
        case StudyKind::Rho:
            c.replications = 10000;
            c.master_seed = 42;
            for (int i = 1; i <= 9; ++i) c.rho_grid.push_back(i / 10.0);
            break;
        case StudyKind::KTier:
            c.replications = 10000;
            c.master_seed = 42;
            for (int k = 2; k <= 10; ++k) c.k_grid.push_back(k);
            break;
        case StudyKind::Learning:
            c.replications = 100;
            c.m = 2;
            for (std::int64_t t = 1; t < 5000; t *= 2) c.horizons.push_back(t);
            c.horizons.push_back(5000);
            c.policies = {stable, fair};
            break;
        case StudyKind::Misspec:
            c.replications = 500;
            c.m = 1;
            c.horizons = {1000, 2000, 5000};
            c.policies = {stable, fair};
            c.truths = {LinkKind::LinearPP, LinkKind::ExponentialPP, LinkKind::LogitPP};
            c.phi_bars = {0.05, 0.15, 0.25};
            break;
    }
    return c;
}

void validate_study_config(const StudyConfig& c) {
    if (c.replications < 1) throw Error(ErrorCode::InvalidConfig, "replication count must be >= 1");
    if (c.jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
    if (c.m < 1) throw Error(ErrorCode::InvalidConfig, "M must be >= 1");
    const bool learning = c.kind == StudyKind::Learning || c.kind == StudyKind::Misspec;
    if (learning) {
        if (c.horizons.empty()) throw Error(ErrorCode::InvalidConfig, "horizon list is empty");
        for (std::int64_t t : c.horizons)
            if (t < 1) throw Error(ErrorCode::InvalidConfig, "horizons must be >= 1");
        if (c.policies.empty()) throw Error(ErrorCode::InvalidConfig, "policy list is empty");
    }
    if (c.kind == StudyKind::Rho) {
        if (c.rho_grid.empty()) throw Error(ErrorCode::InvalidConfig, "rho grid is empty");
        for (double r : c.rho_grid)
            if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::InvalidConfig, "rho grid values must lie in (0, 1)");
    }
    if (c.kind == StudyKind::KTier) {
        if (c.k_grid.empty()) throw Error(ErrorCode::InvalidConfig, "K grid is empty");
        for (int k : c.k_grid)
            if (k < 2) throw Error(ErrorCode::InvalidConfig, "K grid values must be >= 2");
    }
    if (c.kind == StudyKind::Misspec) {
        if (c.truths.empty() || c.phi_bars.empty())
            throw Error(ErrorCode::InvalidConfig, "misspecification grid is empty");
        for (LinkKind l : c.truths)
            if (l == LinkKind::NoPressure) throw Error(ErrorCode::InvalidConfig, "truth link cannot be 'none'");
    }
}

StudyResult run_study(const StudyConfig& config) {
    validate_study_config(config);
    StudyResult result;
    switch (config.kind) {
        case StudyKind::Pof: result = run_pof(config); break;
        case StudyKind::Rho: result = run_rho(config); break;
        case StudyKind::KTier: result = run_ktier(config); break;
        case StudyKind::Learning: result = run_learning(config); break;
        case StudyKind::Misspec: result = run_misspec(config); break;
    }
    if (!config.output.empty()) {
        for (const StudyTable& t : result.tables) write_text_file(config.output / (t.name + ".csv"), t.csv);
        write_text_file(config.output / "summary.json", result.summary_json + "\n");
    }
    return result;
}

}  // namespace loyalty
