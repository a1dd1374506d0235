#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "loyalty/core_model.hpp"
#include "loyalty/estimation.hpp"
#include "loyalty/rng.hpp"
#include "loyalty/threshold.hpp"

namespace loyalty {

struct CustomerState {
    int type_id = 0;
    int stock = 0;
};

/// tau value recorded for a customer in a paused (no-loyalty) period.
inline constexpr int kPausedTau = -1;

struct CustomerOutcome {
    int tau = kPausedTau;
    bool x = false;
    bool redeemed = false;
};

struct PeriodOutcome {
    std::int64_t t = 0;
    Threshold threshold;
    std::vector<CustomerOutcome> customers;
};

/// One customer-period transition given the uniform variate u.
CustomerOutcome step_customer(CustomerState& state, Threshold n, const TypeSpec& spec, double u);

/// Advances every customer by one period, drawing exactly one uniform per
/// customer in index order.
PeriodOutcome advance_period(std::vector<CustomerState>& states, Threshold n, const Instance& instance,
                             UniformSource& rng);

/// Customer type labels for a population of m: the first rho_1*m customers
/// are type 0, and so on. Throws NonIntegralPartition.
std::vector<int> customer_partition(const Instance& instance, int m);

struct EpochEvent {
    int h = 1;
    std::int64_t start = 0;   ///< first period (0-based)
    std::int64_t length = 0;  ///< periods actually run (last epoch is truncated)
    Threshold threshold;
    std::vector<Beta> beta_hat;  ///< empty when no fit was made
    bool terminated = false;
    bool fit_fallback = false;
};

/// Full trajectory of a run. Per-customer arrays are period-major:
/// index t * m + j.
struct RunRecord {
    Instance instance;
    int m = 0;
    std::int64_t horizon = 0;
    std::uint64_t seed = 0;
    std::string policy;
    std::vector<int> customer_types;
    std::vector<Threshold> thresholds;
    std::vector<int> taus;
    std::vector<std::uint8_t> xs;
    std::vector<std::uint8_t> redeemed;
    std::vector<int> final_stocks;
    std::vector<EpochEvent> epoch_log;

    std::size_t index(std::int64_t t, int j) const { return static_cast<std::size_t>(t) * m + j; }
    PeriodOutcome outcome(std::int64_t t) const;
    std::int64_t purchases() const;
    std::int64_t redemptions() const;
};

inline constexpr int kRunRecordVersion = 1;

/// CSV with a versioned comment header, one row per customer-period:
/// period,threshold,customer,tau,x,redeemed (tau = -1 when paused).
void write_run_csv(std::ostream& os, const RunRecord& run);
/// Versioned JSON document with the epoch log.
std::string epoch_log_json(const RunRecord& run);

struct SimulationOptions {
    /// Starting stock per customer; empty means all zero.
    std::vector<int> initial_stocks;
    /// Customer j consumes counter t * m + draw_slot[j]; empty means identity.
    std::vector<int> draw_slot;
};

RunRecord simulate_fixed(const Instance& instance, Threshold n, int m, std::int64_t horizon, std::uint64_t seed,
                         const SimulationOptions& options = {});

struct EpochContext {
    int h = 2;
    std::int64_t start = 0;
    Threshold current;
    /// Per-type samples from every active period before this epoch.
    const std::vector<SampleSet>& pooled;
    /// Per-type samples from epoch h - 1 only.
    const std::vector<SampleSet>& previous_epoch;
};

struct EpochDecision {
    Decision decision;
    std::vector<Beta> beta_hat;
    bool fit_fallback = false;
};

/// A threshold-setting policy driven epoch by epoch.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual Threshold initial_threshold() const = 0;
    static constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

    /// Length of epoch h >= 1; kUnbounded for a single open-ended epoch.
    virtual std::int64_t epoch_length(int h) const = 0;
    /// Called at the start of every epoch h >= 2 until the policy terminates.
    virtual EpochDecision decide(const EpochContext& context) = 0;
};

/// Runs the policy's epochs, truncating the last one at the horizon. After a
/// Terminate decision every remaining period is paused. Throws HorizonTooShort
/// when a bounded epoch 1 is longer than the horizon.
RunRecord simulate_policy(const Instance& instance, Policy& policy, int m, std::int64_t horizon,
                          std::uint64_t seed, const SimulationOptions& options = {});

}  // namespace loyalty
