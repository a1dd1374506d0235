#pragma once

#include <cstdint>

namespace loyalty {

/// Source of U[0, 1) variates. Generators of random instances draw through this
/// so tests can substitute deterministic values.
class UniformSource {
public:
    virtual ~UniformSource() = default;
    virtual double next_uniform() = 0;

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }
};

/// Counter-based generator: the i-th output of stream (seed, stream) is
/// splitmix64_finalize(key + (i + 1) * golden_gamma), with key derived from
/// (seed, stream) by the same finalizer. Outputs are addressable by counter,
/// so a run can be replayed or re-partitioned without carrying state.
///
/// Stream conventions used by the library: stream 0 drives the customer
/// simulation (one draw per customer per period, customer-major within a
/// period), stream 1 drives random instance generation.
class CounterRng final : public UniformSource {
public:
    static constexpr std::uint64_t kSimulationStream = 0;
    static constexpr std::uint64_t kInstanceStream = 1;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = kSimulationStream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t counter) { counter_ = counter; }

    std::uint64_t bits_at(std::uint64_t counter) const;
    double uniform_at(std::uint64_t counter) const;

    std::uint64_t next_bits() { return bits_at(counter_++); }
    double next_uniform() override { return uniform_at(counter_++); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept;

}  // namespace loyalty
