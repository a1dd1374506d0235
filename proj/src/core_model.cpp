#include "loyalty/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "loyalty/error.hpp"

namespace loyalty {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedInstance: return "MalformedInstance";
        case ErrorCode::DegenerateChain: return "DegenerateChain";
        case ErrorCode::PeriodicChain: return "PeriodicChain";
        case ErrorCode::IterationCap: return "IterationCap";
        case ErrorCode::ZeroRevenue: return "ZeroRevenue";
        case ErrorCode::NonIntegralPartition: return "NonIntegralPartition";
        case ErrorCode::ProbabilityAtBoundary: return "ProbabilityAtBoundary";
        case ErrorCode::DegenerateDesign: return "DegenerateDesign";
        case ErrorCode::InvalidDelta: return "InvalidDelta";
        case ErrorCode::HorizonTooShort: return "HorizonTooShort";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

std::string_view link_name(LinkKind kind) noexcept {
    switch (kind) {
        case LinkKind::NoPressure: return "none";
        case LinkKind::LinearPP: return "linear";
        case LinkKind::ExponentialPP: return "exp";
        case LinkKind::LogitPP: return "logit";
    }
    return "none";
}

LinkKind parse_link(std::string_view name) {
    if (name == "none") return LinkKind::NoPressure;
    if (name == "linear") return LinkKind::LinearPP;
    if (name == "exp") return LinkKind::ExponentialPP;
    if (name == "logit") return LinkKind::LogitPP;
    throw Error(ErrorCode::MalformedInstance, "unknown link '" + std::string(name) + "'");
}

namespace {

double logistic(double x) noexcept {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double pressure(LinkKind kind, double x) noexcept {
    switch (kind) {
        case LinkKind::NoPressure: return 0.0;
        case LinkKind::LinearPP: return std::max(x, 0.0);
        case LinkKind::ExponentialPP: return std::exp(x);
        case LinkKind::LogitPP: return logistic(x);
    }
    return 0.0;
}

double glm_mean(LinkKind kind, double baseline, double x) noexcept {
    if (kind == LinkKind::LinearPP) return baseline + x;
    return baseline + pressure(kind, x);
}

double glm_mean_d1(LinkKind kind, double x) noexcept {
    switch (kind) {
        case LinkKind::NoPressure: return 0.0;
        case LinkKind::LinearPP: return 1.0;
        case LinkKind::ExponentialPP: return std::exp(x);
        case LinkKind::LogitPP: {
            const double s = logistic(x);
            return s * (1.0 - s);
        }
    }
    return 0.0;
}

double glm_mean_d2(LinkKind kind, double x) noexcept {
    switch (kind) {
        case LinkKind::NoPressure:
        case LinkKind::LinearPP: return 0.0;
        case LinkKind::ExponentialPP: return std::exp(x);
        case LinkKind::LogitPP: {
            const double s = logistic(x);
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
    }
    return 0.0;
}

double purchase_prob(const TypeSpec& spec, int tau) noexcept {
    const double x = spec.b1 + spec.b2 * static_cast<double>(tau);
    return std::min(1.0, spec.baseline + pressure(spec.link, x));
}

std::vector<double> purchase_curve(const TypeSpec& spec, int n) {
    std::vector<double> phi(static_cast<std::size_t>(n) + 1);
    for (int tau = 0; tau <= n; ++tau) phi[static_cast<std::size_t>(tau)] = purchase_prob(spec, tau);
    return phi;
}

double Instance::rho_min() const {
    return rho.empty() ? 0.0 : *std::min_element(rho.begin(), rho.end());
}

double Instance::no_loyalty_revenue() const {
    double total = 0.0;
    for (std::size_t k = 0; k < types.size(); ++k) total += rho[k] * types[k].baseline;
    return total;
}

void check_instance_shape(const Instance& instance) {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::MalformedInstance, msg); };
    if (instance.types.empty()) fail("instance has no customer types");
    if (instance.n_max < 1) fail("n_max must be >= 1");
    if (instance.rho.size() != instance.types.size()) fail("rho length does not match number of types");
    double sum = 0.0;
    for (double r : instance.rho) {
        if (!(r > 0.0)) fail("every rho entry must be > 0");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "rho sums to " << sum << ", expected 1";
        fail(os.str());
    }
    for (std::size_t k = 0; k < instance.types.size(); ++k) {
        const TypeSpec& t = instance.types[k];
        const std::string tag = "type " + std::to_string(k) + ": ";
        if (!std::isfinite(t.b1) || !std::isfinite(t.b2)) fail(tag + "non-finite coefficients");
        if (t.b2 > 0.0) fail(tag + "b2 must be <= 0");
        if (!(t.baseline >= 0.0 && t.baseline <= 1.0)) fail(tag + "baseline must lie in [0, 1]");
        if (t.box.b2_hi > 0.0 || t.box.b1_lo > t.box.b1_hi || t.box.b2_lo > t.box.b2_hi)
            fail(tag + "malformed parameter box");
        if (!t.box.contains(t.b1, t.b2)) fail(tag + "(b1, b2) lies outside the parameter box");
    }
}

namespace {

/// max |f| over [lo, hi] for the three smooth links' first derivative.
double max_d1_on(LinkKind kind, double lo, double hi) {
    switch (kind) {
        case LinkKind::NoPressure: return 0.0;
        case LinkKind::LinearPP: return 1.0;
        case LinkKind::ExponentialPP: return std::exp(hi);
        case LinkKind::LogitPP:
            if (lo <= 0.0 && hi >= 0.0) return 0.25;
            return std::max(glm_mean_d1(kind, lo), glm_mean_d1(kind, hi));
    }
    return 0.0;
}

double max_abs_d2_on(LinkKind kind, double lo, double hi) {
    switch (kind) {
        case LinkKind::NoPressure:
        case LinkKind::LinearPP: return 0.0;
        case LinkKind::ExponentialPP: return std::exp(hi);
        case LinkKind::LogitPP: {
            // |s(1-s)(1-2s)| peaks at x = +-ln(2 + sqrt(3)).
            const double peak = std::log(2.0 + std::sqrt(3.0));
            double best = std::max(std::abs(glm_mean_d2(kind, lo)), std::abs(glm_mean_d2(kind, hi)));
            for (double x : {-peak, peak})
                if (x >= lo && x <= hi) best = std::max(best, std::abs(glm_mean_d2(kind, x)));
            return best;
        }
    }
    return 0.0;
}

}  // namespace

RegularityReport validate_instance(const Instance& instance) {
    check_instance_shape(instance);

    RegularityReport report;
    report.mu_min = std::numeric_limits<double>::infinity();
    report.mu_max = -std::numeric_limits<double>::infinity();
    report.kappa = std::numeric_limits<double>::infinity();
    const int n_max = instance.n_max;
    const double radius = 1.0 / std::sqrt(1.0 + static_cast<double>(n_max) * n_max);

    for (std::size_t k = 0; k < instance.types.size(); ++k) {
        const TypeSpec& t = instance.types[k];
        const std::string tag = "type " + std::to_string(k) + ": ";
        bool clamped = false;
        for (int tau = 0; tau <= n_max; ++tau) {
            const double phi = purchase_prob(t, tau);
            report.mu_min = std::min(report.mu_min, phi);
            report.mu_max = std::max(report.mu_max, phi);
            const double raw = t.baseline + pressure(t.link, t.b1 + t.b2 * tau);
            if (raw > 1.0) clamped = true;
        }
        if (clamped) report.flags.push_back(tag + "clamp at 1 binds inside tau range (non-smooth)");
        if (t.baseline <= 0.0) report.flags.push_back(tag + "zero baseline");
        if (t.link == LinkKind::NoPressure) continue;
        if (t.b2 == 0.0) report.flags.push_back(tag + "b2 == 0: no decay toward baseline");

        // x-range reachable from the box over tau in [0, n_max].
        const double x_lo = t.box.b1_lo + t.box.b2_lo * n_max;
        const double x_hi = t.box.b1_hi;
        report.l_mu = std::max(report.l_mu, max_d1_on(t.link, x_lo, x_hi));
        report.g_mu = std::max(report.g_mu, max_abs_d2_on(t.link, x_lo, x_hi));

        // Over the ball ||beta' - beta|| <= radius, x' = b1' + b2' tau spans
        // x +- radius * sqrt(1 + tau^2); the derivative is monotone or unimodal
        // on that interval, so its infimum sits at an endpoint.
        for (int tau = 0; tau <= n_max; ++tau) {
            const double x = t.b1 + t.b2 * tau;
            const double half = radius * std::sqrt(1.0 + static_cast<double>(tau) * tau);
            report.kappa = std::min({report.kappa, glm_mean_d1(t.link, x - half), glm_mean_d1(t.link, x + half)});
        }
    }

    if (report.mu_min <= 0.0) report.flags.push_back("a purchase probability equals 0");
    if (!(report.kappa > 0.0)) report.flags.push_back("kappa is not positive");
    report.valid = report.flags.empty();
    return report;
}

}  // namespace loyalty
