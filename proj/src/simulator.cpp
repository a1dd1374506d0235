#include "loyalty/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"
#include "loyalty/error.hpp"

namespace loyalty {

CustomerOutcome step_customer(CustomerState& state, Threshold n, const TypeSpec& spec, double u) {
    CustomerOutcome out;
    if (n.is_infinite()) {
        out.x = u < spec.baseline;
        return out;
    }
    out.tau = std::max(0, n.value() - state.stock);
    out.x = u < purchase_prob(spec, out.tau);
    if (out.x) {
        if (out.tau > 0) {
            ++state.stock;
        } else {
            // Redemption consumes the whole balance, even above a lowered goal.
            out.redeemed = true;
            state.stock = 0;
        }
    }
    return out;
}

PeriodOutcome advance_period(std::vector<CustomerState>& states, Threshold n, const Instance& instance,
                             UniformSource& rng) {
    PeriodOutcome out;
    out.threshold = n;
    out.customers.reserve(states.size());
    for (CustomerState& s : states)
        out.customers.push_back(step_customer(s, n, instance.types[static_cast<std::size_t>(s.type_id)], rng.next_uniform()));
    return out;
}

std::vector<int> customer_partition(const Instance& instance, int m) {
    if (m < 1) throw Error(ErrorCode::OutOfRange, "population size must be >= 1");
    std::vector<int> types;
    types.reserve(static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < instance.k(); ++k) {
        const double share = instance.rho[k] * m;
        const double rounded = std::round(share);
        if (std::abs(share - rounded) > 1e-9)
            throw Error(ErrorCode::NonIntegralPartition,
                        "rho_" + std::to_string(k + 1) + " * M = " + std::to_string(share) + " is not an integer");
        types.insert(types.end(), static_cast<std::size_t>(rounded), static_cast<int>(k));
    }
    if (static_cast<int>(types.size()) != m)
        throw Error(ErrorCode::NonIntegralPartition, "type counts do not add up to M");
    return types;
}

PeriodOutcome RunRecord::outcome(std::int64_t t) const {
    PeriodOutcome out;
    out.t = t;
    out.threshold = thresholds[static_cast<std::size_t>(t)];
    for (int j = 0; j < m; ++j) {
        const std::size_t i = index(t, j);
        out.customers.push_back({taus[i], xs[i] != 0, redeemed[i] != 0});
    }
    return out;
}

std::int64_t RunRecord::purchases() const {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] && taus[i] != 0) ++total;
    return total;
}

std::int64_t RunRecord::redemptions() const {
    return std::count(redeemed.begin(), redeemed.end(), std::uint8_t{1});
}

void write_run_csv(std::ostream& os, const RunRecord& run) {
    os << "# loyalty_lab run_record v" << kRunRecordVersion << " seed=" << run.seed << " m=" << run.m
       << " horizon=" << run.horizon << '\n';
    os << "period,threshold,customer,tau,x,redeemed\n";
    for (std::int64_t t = 0; t < run.horizon; ++t) {
        const std::string n = run.thresholds[static_cast<std::size_t>(t)].to_string();
        for (int j = 0; j < run.m; ++j) {
            const std::size_t i = run.index(t, j);
            os << t << ',' << n << ',' << j << ',' << run.taus[i] << ',' << int(run.xs[i]) << ','
               << int(run.redeemed[i]) << '\n';
        }
    }
}

std::string epoch_log_json(const RunRecord& run) {
    nlohmann::ordered_json doc;
    doc["schema"] = "loyalty_lab.epoch_log";
    doc["version"] = kRunRecordVersion;
    doc["policy"] = run.policy;
    doc["seed"] = run.seed;
    doc["m"] = run.m;
    doc["horizon"] = run.horizon;
    auto& epochs = doc["epochs"] = nlohmann::ordered_json::array();
    for (const EpochEvent& e : run.epoch_log) {
        nlohmann::ordered_json row;
        row["h"] = e.h;
        row["start"] = e.start;
        row["length"] = e.length;
        if (e.threshold.is_infinite())
            row["threshold"] = "inf";
        else
            row["threshold"] = e.threshold.value();
        auto& betas = row["beta_hat"] = nlohmann::ordered_json::array();
        for (const Beta& b : e.beta_hat) betas.push_back({b.b1, b.b2});
        row["terminated"] = e.terminated;
        row["fit_fallback"] = e.fit_fallback;
        epochs.push_back(std::move(row));
    }
    return doc.dump(2);
}

namespace {

class Runner {
public:
    Runner(const Instance& instance, int m, std::int64_t horizon, std::uint64_t seed, const SimulationOptions& options)
        : instance_(instance), rng_(seed, CounterRng::kSimulationStream) {
        check_instance_shape(instance);
        if (horizon < 1) throw Error(ErrorCode::OutOfRange, "horizon must be >= 1");
        run_.instance = instance;
        run_.m = m;
        run_.horizon = horizon;
        run_.seed = seed;
        run_.customer_types = customer_partition(instance, m);
        states_.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) states_[static_cast<std::size_t>(j)].type_id = run_.customer_types[static_cast<std::size_t>(j)];
        if (!options.initial_stocks.empty()) {
            if (options.initial_stocks.size() != states_.size())
                throw Error(ErrorCode::OutOfRange, "initial_stocks must have one entry per customer");
            for (std::size_t j = 0; j < states_.size(); ++j) {
                if (options.initial_stocks[j] < 0) throw Error(ErrorCode::OutOfRange, "initial stock must be >= 0");
                states_[j].stock = options.initial_stocks[j];
            }
        }
        slot_.resize(states_.size());
        for (std::size_t j = 0; j < slot_.size(); ++j) slot_[j] = static_cast<int>(j);
        if (!options.draw_slot.empty()) {
            std::vector<int> sorted = options.draw_slot;
            std::sort(sorted.begin(), sorted.end());
            if (sorted != slot_) throw Error(ErrorCode::OutOfRange, "draw_slot must be a permutation of 0..m-1");
            slot_ = options.draw_slot;
        }
        const auto cells = static_cast<std::size_t>(horizon) * static_cast<std::size_t>(m);
        run_.thresholds.reserve(static_cast<std::size_t>(horizon));
        run_.taus.reserve(cells);
        run_.xs.reserve(cells);
        run_.redeemed.reserve(cells);
        epoch_samples_.resize(instance.k());
        pooled_.resize(instance.k());
    }

    std::int64_t now() const { return t_; }

    void run_periods(Threshold n, std::int64_t count) {
        const auto m = static_cast<std::uint64_t>(run_.m);
        for (std::int64_t i = 0; i < count; ++i, ++t_) {
            run_.thresholds.push_back(n);
            for (std::size_t j = 0; j < states_.size(); ++j) {
                const double u = rng_.uniform_at(static_cast<std::uint64_t>(t_) * m + static_cast<std::uint64_t>(slot_[j]));
                CustomerState& s = states_[j];
                const CustomerOutcome o = step_customer(s, n, instance_.types[static_cast<std::size_t>(s.type_id)], u);
                run_.taus.push_back(o.tau);
                run_.xs.push_back(o.x ? 1 : 0);
                run_.redeemed.push_back(o.redeemed ? 1 : 0);
                if (o.tau != kPausedTau) epoch_samples_[static_cast<std::size_t>(s.type_id)].add(o.tau, o.x);
            }
        }
    }

    // Moves the current epoch's samples into the pooled history.
    void close_epoch() {
        previous_ = std::move(epoch_samples_);
        epoch_samples_.assign(instance_.k(), SampleSet{});
        for (std::size_t k = 0; k < pooled_.size(); ++k) pooled_[k].merge(previous_[k]);
    }

    const std::vector<SampleSet>& pooled() const { return pooled_; }
    const std::vector<SampleSet>& previous() const { return previous_; }
    RunRecord& record() { return run_; }

    RunRecord finish() {
        for (const CustomerState& s : states_) run_.final_stocks.push_back(s.stock);
        return std::move(run_);
    }

private:
    const Instance& instance_;
    CounterRng rng_;
    RunRecord run_;
    std::vector<CustomerState> states_;
    std::vector<int> slot_;
    std::vector<SampleSet> epoch_samples_;
    std::vector<SampleSet> previous_;
    std::vector<SampleSet> pooled_;
    std::int64_t t_ = 0;
};

}  // namespace

RunRecord simulate_fixed(const Instance& instance, Threshold n, int m, std::int64_t horizon, std::uint64_t seed,
                         const SimulationOptions& options) {
    Runner runner(instance, m, horizon, seed, options);
    runner.record().policy = "fixed";
    runner.run_periods(n, horizon);
    runner.record().epoch_log.push_back({1, 0, horizon, n, {}, false, false});
    return runner.finish();
}

RunRecord simulate_policy(const Instance& instance, Policy& policy, int m, std::int64_t horizon,
                          std::uint64_t seed, const SimulationOptions& options) {
    const std::int64_t first = policy.epoch_length(1);
    if (first < 1) throw Error(ErrorCode::InvalidConfig, "epoch lengths must be >= 1");
    if (first != Policy::kUnbounded && horizon < first)
        throw Error(ErrorCode::HorizonTooShort,
                    "horizon " + std::to_string(horizon) + " is shorter than epoch 1 (" + std::to_string(first) + ")");
    Runner runner(instance, m, horizon, seed, options);
    RunRecord& rec = runner.record();
    rec.policy = policy.name();

    Threshold current = policy.initial_threshold();
    bool terminated = false;
    for (int h = 1; runner.now() < horizon; ++h) {
        EpochEvent event;
        event.h = h;
        event.start = runner.now();
        if (h > 1) {
            if (!terminated) {
                const EpochContext ctx{h, runner.now(), current, runner.pooled(), runner.previous()};
                EpochDecision d = policy.decide(ctx);
                event.beta_hat = std::move(d.beta_hat);
                event.fit_fallback = d.fit_fallback;
                if (d.decision.terminates()) {
                    terminated = true;
                    current = Threshold::infinite();
                } else {
                    current = d.decision.threshold;
                }
            }
        }
        event.terminated = terminated;
        event.threshold = current;
        const std::int64_t len = policy.epoch_length(h);
        if (len < 1) throw Error(ErrorCode::InvalidConfig, "epoch lengths must be >= 1");
        event.length = std::min(len, horizon - runner.now());
        runner.run_periods(current, event.length);
        runner.close_epoch();
        rec.epoch_log.push_back(std::move(event));
    }
    return runner.finish();
}

}  // namespace loyalty
