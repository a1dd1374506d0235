#include "loyalty/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "loyalty/error.hpp"

namespace loyalty {

void SampleSet::add(int tau, bool x, std::int64_t count) {
    if (tau < 0) throw Error(ErrorCode::OutOfRange, "tau must be non-negative");
    if (count <= 0) return;
    const auto idx = static_cast<std::size_t>(tau);
    if (idx >= trials_.size()) {
        trials_.resize(idx + 1, 0);
        successes_.resize(idx + 1, 0);
    }
    trials_[idx] += count;
    if (x) successes_[idx] += count;
    total_ += count;
}

void SampleSet::merge(const SampleSet& other) {
    for (int tau = 0; tau <= other.max_tau(); ++tau) {
        const std::int64_t s = other.successes(tau);
        add(tau, true, s);
        add(tau, false, other.trials(tau) - s);
    }
}

void SampleSet::clear() {
    trials_.clear();
    successes_.clear();
    total_ = 0;
}

std::int64_t SampleSet::trials(int tau) const {
    if (tau < 0 || tau > max_tau()) return 0;
    return trials_[static_cast<std::size_t>(tau)];
}

std::int64_t SampleSet::successes(int tau) const {
    if (tau < 0 || tau > max_tau()) return 0;
    return successes_[static_cast<std::size_t>(tau)];
}

int SampleSet::distinct_taus() const {
    return static_cast<int>(std::count_if(trials_.begin(), trials_.end(), [](std::int64_t n) { return n > 0; }));
}

int SampleSet::min_observed_tau() const {
    for (int tau = 0; tau <= max_tau(); ++tau)
        if (trials(tau) > 0) return tau;
    return -1;
}

int SampleSet::max_observed_tau() const {
    for (int tau = max_tau(); tau >= 0; --tau)
        if (trials(tau) > 0) return tau;
    return -1;
}

namespace {

// Per-bin contribution of s successes in n trials, as a function of the linear
// index x. Returns value and its first two derivatives in x.
struct BinTerms {
    double value;
    double d1;
    double d2;
};

BinTerms bin_terms(LinkKind link, double baseline, double x, double n, double s, double clip) {
    double mu = glm_mean(link, baseline, x);
    if (clip > 0.0) mu = std::clamp(mu, clip, 1.0 - clip);
    const double f = n - s;
    const double m1 = glm_mean_d1(link, x);
    const double m2 = glm_mean_d2(link, x);
    BinTerms t{};
    t.value = (s > 0 ? s * std::log(mu) : 0.0) + (f > 0 ? f * std::log1p(-mu) : 0.0);
    const double score = s / mu - f / (1.0 - mu);
    t.d1 = m1 * score;
    t.d2 = m2 * score - m1 * m1 * (s / (mu * mu) + f / ((1.0 - mu) * (1.0 - mu)));
    return t;
}

LikelihoodDerivatives accumulate(const SampleSet& samples, const GlmModel& model, Beta beta, double clip) {
    LikelihoodDerivatives out;
    for (int tau = 0; tau <= samples.max_tau(); ++tau) {
        const auto n = static_cast<double>(samples.trials(tau));
        if (n <= 0) continue;
        const auto s = static_cast<double>(samples.successes(tau));
        const double t = static_cast<double>(tau);
        const BinTerms bt = bin_terms(model.link, model.baseline, beta.b1 + beta.b2 * t, n, s, clip);
        out.value += bt.value;
        out.gradient[0] += bt.d1;
        out.gradient[1] += bt.d1 * t;
        out.hessian[0] += bt.d2;
        out.hessian[1] += bt.d2 * t;
        out.hessian[2] += bt.d2 * t * t;
    }
    return out;
}

void require_interior(const SampleSet& samples, const GlmModel& model, Beta beta) {
    for (int tau = 0; tau <= samples.max_tau(); ++tau) {
        if (samples.trials(tau) == 0) continue;
        const double mu = glm_mean(model.link, model.baseline, beta.b1 + beta.b2 * tau);
        if (!(mu > 0.0 && mu < 1.0))
            throw Error(ErrorCode::ProbabilityAtBoundary,
                        "mean " + std::to_string(mu) + " outside (0, 1) at tau = " + std::to_string(tau));
    }
}

}  // namespace

double log_likelihood(const SampleSet& samples, const GlmModel& model, Beta beta) {
    require_interior(samples, model, beta);
    return accumulate(samples, model, beta, 0.0).value;
}

LikelihoodDerivatives log_likelihood_derivatives(const SampleSet& samples, const GlmModel& model, Beta beta) {
    require_interior(samples, model, beta);
    return accumulate(samples, model, beta, 0.0);
}

namespace {

struct LinearConstraint {
    double a1;
    double a2;
    double c;  // a . beta <= c

    double slack(Beta b) const { return c - (a1 * b.b1 + a2 * b.b2); }
    double dot(double d1, double d2) const { return a1 * d1 + a2 * d2; }
    double norm() const { return std::hypot(a1, a2); }
};

// Inverse of the smooth link on the pressure term: the x at which glm_mean == target.
// Empty optional means every x satisfies glm_mean <= target (upper) or >= target (lower).
std::optional<double> x_at_mean(LinkKind link, double baseline, double target, bool upper) {
    const double y = target - baseline;
    switch (link) {
        case LinkKind::LinearPP: return y;
        case LinkKind::ExponentialPP:
            if (y <= 0.0) return upper ? std::optional<double>(-std::numeric_limits<double>::infinity())
                                       : std::nullopt;
            return std::log(y);
        case LinkKind::LogitPP:
            if (y <= 0.0) return upper ? std::optional<double>(-std::numeric_limits<double>::infinity())
                                       : std::nullopt;
            if (y >= 1.0) return upper ? std::nullopt : std::optional<double>(std::numeric_limits<double>::infinity());
            return std::log(y / (1.0 - y));
        case LinkKind::NoPressure: return std::nullopt;
    }
    return std::nullopt;
}

std::vector<LinearConstraint> feasible_region(const SampleSet& samples, const GlmModel& model, double eps,
                                              std::vector<int>& ids) {
    const ParamBox& box = model.box;
    std::vector<LinearConstraint> cons = {
        {1.0, 0.0, box.b1_hi}, {-1.0, 0.0, -box.b1_lo}, {0.0, 1.0, box.b2_hi}, {0.0, -1.0, -box.b2_lo}};
    ids = {0, 1, 2, 3};
    if (model.link == LinkKind::NoPressure) return cons;
    // b2 <= 0, so the largest index sits at the smallest observed tau and vice versa.
    const double tau_lo = samples.min_observed_tau();
    const double tau_hi = samples.max_observed_tau();
    if (auto u = x_at_mean(model.link, model.baseline, 1.0 - eps, true)) {
        if (!std::isfinite(*u)) throw Error(ErrorCode::DegenerateDesign, "baseline leaves no room below 1");
        cons.push_back({1.0, tau_lo, *u});
        ids.push_back(4);
    }
    if (auto l = x_at_mean(model.link, model.baseline, eps, false)) {
        if (!std::isfinite(*l)) throw Error(ErrorCode::DegenerateDesign, "baseline leaves no room above 0");
        cons.push_back({-1.0, -tau_hi, -*l});
        ids.push_back(5);
    }
    return cons;
}

// Most interior point of the polygon (Chebyshev center) by vertex enumeration
// of the 3-variable LP max s s.t. a.beta + s |a| <= c.
std::optional<Beta> chebyshev_center(const std::vector<LinearConstraint>& cons) {
    std::optional<Beta> best;
    double best_s = 0.0;
    const std::size_t m = cons.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k) {
                const LinearConstraint* r[3] = {&cons[i], &cons[j], &cons[k]};
                double a[3][4];
                for (int q = 0; q < 3; ++q) {
                    a[q][0] = r[q]->a1;
                    a[q][1] = r[q]->a2;
                    a[q][2] = r[q]->norm();
                    a[q][3] = r[q]->c;
                }
                // Gaussian elimination with partial pivoting on the 3x3 system.
                bool singular = false;
                for (int col = 0; col < 3 && !singular; ++col) {
                    int piv = col;
                    for (int q = col + 1; q < 3; ++q)
                        if (std::abs(a[q][col]) > std::abs(a[piv][col])) piv = q;
                    if (std::abs(a[piv][col]) < 1e-14) {
                        singular = true;
                        break;
                    }
                    std::swap(a[col], a[piv]);
                    for (int q = 0; q < 3; ++q) {
                        if (q == col) continue;
                        const double f = a[q][col] / a[col][col];
                        for (int w = col; w < 4; ++w) a[q][w] -= f * a[col][w];
                    }
                }
                if (singular) continue;
                const Beta b{a[0][3] / a[0][0], a[1][3] / a[1][1]};
                const double s = a[2][3] / a[2][2];
                if (!(s > best_s)) continue;
                bool ok = true;
                for (const auto& con : cons)
                    if (con.slack(b) < s * con.norm() - 1e-12) {
                        ok = false;
                        break;
                    }
                if (ok) {
                    best_s = s;
                    best = b;
                }
            }
    return best;
}

}  // namespace

FitResult fit_mle(const SampleSet& samples, const GlmModel& model, const FitOptions& options) {
    if (samples.empty()) throw Error(ErrorCode::DegenerateDesign, "no samples to fit");
    FitResult result;
    if (samples.distinct_taus() < 2) {
        if (!options.allow_ridge)
            throw Error(ErrorCode::DegenerateDesign, "all samples share one tau; the design is rank-deficient");
        result.ridge_applied = true;
    }

    const double eps = options.probability_margin;
    std::vector<int> ids;
    const std::vector<LinearConstraint> cons = feasible_region(samples, model, eps, ids);
    const Beta center{model.box.b1_center(), model.box.b2_center()};
    const double ridge = result.ridge_applied ? 1e-8 : 0.0;

    auto objective = [&](Beta b) {
        LikelihoodDerivatives d = accumulate(samples, model, b, 0.5 * eps);
        if (ridge > 0.0) {
            const double u = b.b1 - center.b1;
            const double v = b.b2 - center.b2;
            d.value -= ridge * (u * u + v * v);
            d.gradient[0] -= 2.0 * ridge * u;
            d.gradient[1] -= 2.0 * ridge * v;
            d.hessian[0] -= 2.0 * ridge;
            d.hessian[2] -= 2.0 * ridge;
        }
        return d;
    };

    Beta beta = center;
    bool interior = std::all_of(cons.begin(), cons.end(), [&](const LinearConstraint& c) { return c.slack(beta) > 0.0; });
    if (!interior) {
        auto start = chebyshev_center(cons);
        if (!start) throw Error(ErrorCode::DegenerateDesign, "no parameters in the box keep probabilities inside (0, 1)");
        beta = *start;
    }

    const double tol = options.gradient_tolerance * std::max<double>(1.0, static_cast<double>(samples.size()));
    std::vector<std::size_t> working;  // active constraint indices, at most 2
    std::optional<std::size_t> just_dropped;

    LikelihoodDerivatives cur = objective(beta);
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const double g1 = cur.gradient[0];
        const double g2 = cur.gradient[1];
        const double h11 = cur.hessian[0], h12 = cur.hessian[1], h22 = cur.hessian[2];

        // Projected gradient on the face defined by the working set.
        double pg1 = g1, pg2 = g2;
        double e1 = 0.0, e2 = 0.0;
        if (working.size() == 1) {
            const LinearConstraint& c = cons[working[0]];
            const double nrm = c.norm();
            e1 = -c.a2 / nrm;
            e2 = c.a1 / nrm;
            const double ge = g1 * e1 + g2 * e2;
            pg1 = ge * e1;
            pg2 = ge * e2;
        } else if (working.size() == 2) {
            pg1 = pg2 = 0.0;
        }

        if (std::hypot(pg1, pg2) <= tol) {
            // Stationary on the face: check the multipliers g = sum lambda_i a_i.
            if (working.empty()) {
                result.converged = true;
                break;
            }
            std::vector<double> lambda(working.size());
            if (working.size() == 1) {
                const LinearConstraint& c = cons[working[0]];
                lambda[0] = (g1 * c.a1 + g2 * c.a2) / (c.a1 * c.a1 + c.a2 * c.a2);
            } else {
                const LinearConstraint& p = cons[working[0]];
                const LinearConstraint& q = cons[working[1]];
                const double det = p.a1 * q.a2 - p.a2 * q.a1;
                lambda[0] = (g1 * q.a2 - g2 * q.a1) / det;
                lambda[1] = (p.a1 * g2 - p.a2 * g1) / det;
            }
            const auto worst = std::min_element(lambda.begin(), lambda.end());
            if (*worst >= -tol) {
                result.converged = true;
                break;
            }
            const std::size_t drop = static_cast<std::size_t>(worst - lambda.begin());
            just_dropped = working[drop];
            working.erase(working.begin() + static_cast<std::ptrdiff_t>(drop));
            continue;
        }

        // Ascent direction on the current face.
        double d1 = pg1, d2 = pg2;
        if (working.empty()) {
            const double det = h11 * h22 - h12 * h12;
            const double tr = h11 + h22;
            const double disc = std::sqrt(std::max(0.0, 0.25 * (h11 - h22) * (h11 - h22) + h12 * h12));
            const double ev_hi = 0.5 * tr + disc;  // both eigenvalues negative <=> ev_hi < 0
            const double ev_lo = 0.5 * tr - disc;
            if (ev_hi < 0.0 && ev_lo / ev_hi <= 1e12 && det > 0.0) {
                d1 = -(h22 * g1 - h12 * g2) / det;
                d2 = -(-h12 * g1 + h11 * g2) / det;
            }
        } else if (working.size() == 1) {
            const double he = e1 * (h11 * e1 + h12 * e2) + e2 * (h12 * e1 + h22 * e2);
            const double ge = g1 * e1 + g2 * e2;
            if (he < 0.0) {
                d1 = -(ge / he) * e1;
                d2 = -(ge / he) * e2;
            }
        }
        if (d1 * g1 + d2 * g2 <= 0.0) {
            d1 = pg1;
            d2 = pg2;
        }
        if (just_dropped) {
            const LinearConstraint& c = cons[*just_dropped];
            if (c.dot(d1, d2) > 0.0 && c.slack(beta) <= 1e-14 * (1.0 + std::abs(c.c))) {
                d1 = pg1;
                d2 = pg2;
            }
        }

        // Ratio test against constraints outside the working set.
        double alpha_max = std::numeric_limits<double>::infinity();
        std::optional<std::size_t> blocking;
        for (std::size_t i = 0; i < cons.size(); ++i) {
            if (std::find(working.begin(), working.end(), i) != working.end()) continue;
            const double ad = cons[i].dot(d1, d2);
            if (ad <= 0.0) continue;
            const double a = std::max(0.0, cons[i].slack(beta)) / ad;
            if (a < alpha_max) {
                alpha_max = a;
                blocking = i;
            }
        }

        const double slope = d1 * g1 + d2 * g2;
        double alpha = std::min(1.0, alpha_max);
        LikelihoodDerivatives trial{};
        bool accepted = false;
        for (int halvings = 0; halvings < 80; ++halvings) {
            trial = objective({beta.b1 + alpha * d1, beta.b2 + alpha * d2});
            if (trial.value >= cur.value + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        just_dropped.reset();
        if (!accepted) {
            // No representable ascent left; accept as converged only if nearly stationary.
            result.converged = std::hypot(pg1, pg2) <= 1e3 * tol;
            break;
        }
        const bool hit_boundary = blocking && alpha == alpha_max && alpha_max <= 1.0;
        beta = {beta.b1 + alpha * d1, beta.b2 + alpha * d2};
        cur = trial;
        if (hit_boundary) {
            const LinearConstraint& nb = cons[*blocking];
            bool parallel = false;
            for (std::size_t w : working) {
                const double cross = cons[w].a1 * nb.a2 - cons[w].a2 * nb.a1;
                if (std::abs(cross) < 1e-12 * cons[w].norm() * nb.norm()) parallel = true;
            }
            if (!parallel && working.size() < 2) working.push_back(*blocking);
        }
    }

    result.beta = beta;
    result.iterations = iter;
    result.log_likelihood = accumulate(samples, model, beta, 0.5 * eps).value;
    for (std::size_t w : working) result.active_constraints.push_back(ids[w]);
    std::sort(result.active_constraints.begin(), result.active_constraints.end());
    return result;
}

namespace {

// Behavioural likelihood and its derivatives in (b1, b2). Bins where the
// probability is clamped or the linear pressure is cut at zero contribute no
// curvature; the derivative is the one-sided value of the active piece.
LikelihoodDerivatives behavioural_terms(const SampleSet& samples, const GlmModel& model, Beta beta, double floor) {
    LikelihoodDerivatives out;
    for (int tau = 0; tau <= samples.max_tau(); ++tau) {
        const auto n = static_cast<double>(samples.trials(tau));
        if (n <= 0) continue;
        const auto s = static_cast<double>(samples.successes(tau));
        const double f = n - s;
        const double t = static_cast<double>(tau);
        const double x = beta.b1 + beta.b2 * t;
        const double raw = model.baseline + pressure(model.link, x);
        const double p = std::clamp(std::min(1.0, raw), floor, 1.0 - floor);
        out.value += (s > 0 ? s * std::log(p) : 0.0) + (f > 0 ? f * std::log1p(-p) : 0.0);
        if (raw >= 1.0 - floor || raw <= floor) continue;
        if (model.link == LinkKind::LinearPP && x <= 0.0) continue;
        if (model.link == LinkKind::NoPressure) continue;
        const double m1 = glm_mean_d1(model.link, x);
        const double m2 = glm_mean_d2(model.link, x);
        const double score = s / p - f / (1.0 - p);
        const double d1 = m1 * score;
        const double d2 = m2 * score - m1 * m1 * (s / (p * p) + f / ((1.0 - p) * (1.0 - p)));
        out.gradient[0] += d1;
        out.gradient[1] += d1 * t;
        out.hessian[0] += d2;
        out.hessian[1] += d2 * t;
        out.hessian[2] += d2 * t * t;
    }
    return out;
}

Beta clamp_to_box(Beta b, const ParamBox& box) {
    return {std::clamp(b.b1, box.b1_lo, box.b1_hi), std::clamp(b.b2, box.b2_lo, box.b2_hi)};
}

}  // namespace

double behavioural_log_likelihood(const SampleSet& samples, const GlmModel& model, Beta beta, double floor) {
    return behavioural_terms(samples, model, beta, floor).value;
}

FitResult fit_behavioural(const SampleSet& samples, const GlmModel& model, const BehaviouralFitOptions& options) {
    if (samples.empty()) throw Error(ErrorCode::DegenerateDesign, "no samples to fit");
    if (!(options.grid_step > 0.0) || options.starts < 1)
        throw Error(ErrorCode::OutOfRange, "grid_step must be positive and starts >= 1");
    const ParamBox& box = model.box;
    const Beta center{box.b1_center(), box.b2_center()};
    const auto penalty = [&](Beta b) {
        const double u = b.b1 - center.b1;
        const double v = b.b2 - center.b2;
        return options.ridge * (u * u + v * v);
    };
    const auto objective = [&](Beta b) {
        LikelihoodDerivatives d = behavioural_terms(samples, model, b, options.floor);
        const double loglik = d.value;
        d.value -= penalty(b);
        d.gradient[0] -= 2.0 * options.ridge * (b.b1 - center.b1);
        d.gradient[1] -= 2.0 * options.ridge * (b.b2 - center.b2);
        d.hessian[0] -= 2.0 * options.ridge;
        d.hessian[2] -= 2.0 * options.ridge;
        return std::pair{d, loglik};
    };

    struct Point {
        double loglik;
        double value;
        Beta beta;
    };
    std::vector<Point> grid;
    const int n1 = static_cast<int>(std::floor((box.b1_hi - box.b1_lo) / options.grid_step + 1e-9));
    const int n2 = static_cast<int>(std::floor((box.b2_hi - box.b2_lo) / options.grid_step + 1e-9));
    grid.reserve(static_cast<std::size_t>((n1 + 1) * (n2 + 1)));
    for (int i = 0; i <= n1; ++i)
        for (int j = 0; j <= n2; ++j) {
            const Beta b{box.b1_lo + i * options.grid_step, box.b2_lo + j * options.grid_step};
            const double ll = behavioural_terms(samples, model, b, options.floor).value;
            grid.push_back({ll, ll - penalty(b), b});
        }
    std::stable_sort(grid.begin(), grid.end(), [](const Point& a, const Point& b) { return a.value > b.value; });

    // Best representative of each of the top distinct likelihood levels; a
    // plateau of equivalent grid points counts once.
    std::vector<Point> starts;
    for (const Point& g : grid) {
        const bool seen = std::any_of(starts.begin(), starts.end(), [&](const Point& q) {
            return std::abs(q.loglik - g.loglik) <= 1e-9 * (1.0 + std::abs(g.loglik));
        });
        if (!seen) starts.push_back(g);
        if (static_cast<int>(starts.size()) >= options.starts) break;
    }

    FitResult best;
    double best_value = -std::numeric_limits<double>::infinity();
    int total_iterations = 0;
    for (const Point& start : starts) {
        // A local grid at a quarter of the spacing, then Newton with a
        // gradient fallback and backtracking, projected onto the box.
        Beta beta = start.beta;
        double value = start.value;
        const double fine = 0.25 * options.grid_step;
        for (int i = -4; i <= 4; ++i)
            for (int j = -4; j <= 4; ++j) {
                const Beta q = clamp_to_box({start.beta.b1 + i * fine, start.beta.b2 + j * fine}, box);
                const double v = objective(q).first.value;
                if (v > value) {
                    value = v;
                    beta = q;
                }
            }
        bool converged = false;
        int iter = 0;
        double polish = fine;
        const auto try_direction = [&](double d1, double d2) {
            const double len = std::hypot(d1, d2);
            if (len == 0.0) return false;
            // Trial steps never exceed one grid cell so the search stays local.
            double alpha = std::min(1.0, options.grid_step / len);
            for (int k = 0; k < 40; ++k, alpha *= 0.5) {
                const Beta q = clamp_to_box({beta.b1 + alpha * d1, beta.b2 + alpha * d2}, box);
                const double v = objective(q).first.value;
                if (v > value) {
                    const bool real_gain = v - value > 1e-10 * (1.0 + std::abs(value));
                    beta = q;
                    value = v;
                    return real_gain;
                }
            }
            return false;
        };
        for (; iter < options.max_iterations; ++iter) {
            const LikelihoodDerivatives d = objective(beta).first;
            // A coordinate on a bound with the gradient pointing outward is held.
            const bool free1 = !((beta.b1 <= box.b1_lo && d.gradient[0] < 0) || (beta.b1 >= box.b1_hi && d.gradient[0] > 0));
            const bool free2 = !((beta.b2 <= box.b2_lo && d.gradient[1] < 0) || (beta.b2 >= box.b2_hi && d.gradient[1] > 0));
            const double g1 = free1 ? d.gradient[0] : 0.0;
            const double g2 = free2 ? d.gradient[1] : 0.0;
            const double h11 = d.hessian[0], h12 = d.hessian[1], h22 = d.hessian[2];
            double n1 = 0.0, n2 = 0.0;
            if (free1 && free2) {
                const double det = h11 * h22 - h12 * h12;
                if (h11 < 0.0 && det > 0.0) {
                    n1 = -(h22 * g1 - h12 * g2) / det;
                    n2 = -(-h12 * g1 + h11 * g2) / det;
                }
            } else if (free1 && h11 < 0.0) {
                n1 = -g1 / h11;
            } else if (free2 && h22 < 0.0) {
                n2 = -g2 / h22;
            }
            if (n1 * g1 + n2 * g2 > 0.0 && try_direction(n1, n2)) continue;
            if (try_direction(g1, g2)) continue;
            // Derivatives stall on kinks of the clamp; fall back to a compass search.
            bool moved = false;
            for (const auto& [u, v] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) {
                const Beta q = clamp_to_box({beta.b1 + u * polish, beta.b2 + v * polish}, box);
                const double val = objective(q).first.value;
                if (val > value) {
                    beta = q;
                    value = val;
                    moved = true;
                    break;
                }
            }
            polish = moved ? std::min(2.0 * polish, fine) : 0.5 * polish;
            if (polish < 1e-7) {
                converged = true;
                break;
            }
        }
        total_iterations += iter;
        if (value > best_value) {
            best_value = value;
            best.beta = beta;
            best.converged = converged;
            best.log_likelihood = objective(beta).second;
        }
    }
    best.iterations = total_iterations;
    best.ridge_applied = samples.distinct_taus() < 2;
    return best;
}

DesignMatrix design_matrix(const SampleSet& samples) {
    DesignMatrix v;
    for (int tau = 0; tau <= samples.max_tau(); ++tau) {
        const auto n = static_cast<double>(samples.trials(tau));
        const double t = static_cast<double>(tau);
        v.a += n;
        v.b += n * t;
        v.d += n * t * t;
    }
    return v;
}

double lambda_min(const DesignMatrix& v) {
    const double half_gap = 0.5 * (v.a - v.d);
    const double value = 0.5 * (v.a + v.d) - std::sqrt(half_gap * half_gap + v.b * v.b);
    if (value < 0.0 && value > -1e-12) return 0.0;
    return value;
}

double information_constant(const RegularityReport& report, int n_max) {
    constexpr double sigma = 0.5;
    const double n2 = static_cast<double>(n_max) * n_max;
    const double k2 = report.kappa * report.kappa;
    return 512.0 * report.g_mu * report.g_mu * sigma * sigma * (1.0 + n2) / (k2 * k2);
}

bool info_gate(const DesignMatrix& v, double delta, const RegularityReport& report, int n_max) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 1)");
    return lambda_min(v) >= information_constant(report, n_max) * (4.0 + std::log(1.0 / delta));
}

}  // namespace loyalty
