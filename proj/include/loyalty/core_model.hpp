#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "loyalty/threshold.hpp"

namespace loyalty {

/// Points-pressure families. Each maps the linear index x = b1 + b2*tau to a
/// purchase probability baseline + g(x), clamped above by 1.
enum class LinkKind { NoPressure, LinearPP, ExponentialPP, LogitPP };

std::string_view link_name(LinkKind kind) noexcept;
/// Accepts the JSON spellings "none", "linear", "exp", "logit".
LinkKind parse_link(std::string_view name);

/// Pressure term g(x) as used by the behavioural model (positive part for LinearPP).
double pressure(LinkKind kind, double x) noexcept;

/// Smooth GLM link mu(x) = baseline + g(x) used for likelihood work. LinearPP
/// drops the positive part here; the others coincide with the behavioural map.
/// No clamping.
double glm_mean(LinkKind kind, double baseline, double x) noexcept;
double glm_mean_d1(LinkKind kind, double x) noexcept;
double glm_mean_d2(LinkKind kind, double x) noexcept;

/// Admissible parameter rectangle [b1_lo, b1_hi] x [b2_lo, b2_hi], b2_hi <= 0.
struct ParamBox {
    double b1_lo = -10.0;
    double b1_hi = 10.0;
    double b2_lo = -10.0;
    double b2_hi = 0.0;

    bool contains(double b1, double b2) const {
        return b1 >= b1_lo && b1 <= b1_hi && b2 >= b2_lo && b2 <= b2_hi;
    }
    double b1_center() const { return 0.5 * (b1_lo + b1_hi); }
    double b2_center() const { return 0.5 * (b2_lo + b2_hi); }
};

struct Beta {
    double b1 = 0.0;
    double b2 = 0.0;
};

/// One customer type's purchase-probability model.
struct TypeSpec {
    LinkKind link = LinkKind::NoPressure;
    double b1 = 0.0;
    double b2 = 0.0;
    double baseline = 0.5;
    ParamBox box{};

    Beta beta() const { return {b1, b2}; }
    TypeSpec with_beta(Beta beta) const {
        TypeSpec out = *this;
        out.b1 = beta.b1;
        out.b2 = beta.b2;
        return out;
    }
};

/// phi(tau) = min(1, baseline + g(b1 + b2*tau)).
double purchase_prob(const TypeSpec& spec, int tau) noexcept;

/// phi(0..n) as a dense vector.
std::vector<double> purchase_curve(const TypeSpec& spec, int n);

struct Instance {
    std::vector<TypeSpec> types;
    std::vector<double> rho;
    int n_max = 1;

    std::size_t k() const { return types.size(); }
    double rho_min() const;
    /// Revenue of the no-loyalty option, sum_k rho_k * baseline_k.
    double no_loyalty_revenue() const;
};

/// Throws MalformedInstance on violated structural invariants (rho not a
/// probability vector, b2 > 0, parameters outside the box, empty instance,
/// baseline outside [0, 1], n_max < 1).
void check_instance_shape(const Instance& instance);

struct RegularityReport {
    double mu_min = 0.0;
    double mu_max = 0.0;
    double l_mu = 0.0;
    double kappa = 0.0;
    double g_mu = 0.0;
    bool valid = false;
    /// Human-readable reasons for valid == false (clamp binding, zero probability, ...).
    std::vector<std::string> flags;
};

/// Regularity constants for the instance. Structural violations throw; smoothness
/// problems (clamp binding, zero probabilities, b2 == 0 with pressure) only flag.
RegularityReport validate_instance(const Instance& instance);

}  // namespace loyalty
