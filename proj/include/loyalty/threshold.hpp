#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace loyalty {

/// A redemption goal N, or the no-loyalty option (N = +infinity).
class Threshold {
public:
    constexpr Threshold() = default;
    constexpr explicit Threshold(int n) : n_(n) {}

    static constexpr Threshold infinite() { return Threshold(kInfinite); }

    constexpr bool is_infinite() const { return n_ == kInfinite; }
    constexpr bool is_finite() const { return n_ != kInfinite; }
    /// Only meaningful when finite.
    constexpr int value() const { return n_; }

    friend constexpr bool operator==(Threshold, Threshold) = default;
    friend constexpr auto operator<=>(Threshold, Threshold) = default;

    std::string to_string() const { return is_infinite() ? "inf" : std::to_string(n_); }

private:
    static constexpr int kInfinite = std::numeric_limits<int>::max();
    int n_ = 1;
};

/// Outcome of an epoch-boundary decision: run the given threshold, or shut the program down.
struct Decision {
    enum class Kind { Set, Terminate };

    Kind kind = Kind::Set;
    Threshold threshold{};

    static Decision set(Threshold t) { return {Kind::Set, t}; }
    static Decision terminate() { return {Kind::Terminate, Threshold::infinite()}; }

    bool terminates() const { return kind == Kind::Terminate; }
};

}  // namespace loyalty
