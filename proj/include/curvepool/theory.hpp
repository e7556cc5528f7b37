#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/kernel.hpp"

namespace curvepool {

// Analytic description of the two-sample model: sampling densities, mean
// function, true warp and noise variances. Derivative slots may be left
// empty; central finite differences with step 1e-5*(b-a) fill in.
struct ModelSpec {
    std::function<double(double)> f1;
    std::function<double(double)> f2;
    std::function<double(double)> f1_prime;
    std::function<double(double)> f2_prime;
    Interval support1{0.0, 1.0}; // [a, b]
    Interval support2{0.0, 1.0}; // [c, d]

    std::function<double(double)> mean;
    std::function<double(double)> mean_prime;
    std::function<double(double)> mean_second;

    std::function<double(double)> warp;                 // g0
    std::function<double(double)> warp_inverse;         // g0^{-1}
    std::function<double(double)> warp_inverse_prime;   // (g0^{-1})'
    std::function<double(double)> warp_inverse_second;  // (g0^{-1})''

    double sigma1_sq = 1.0;
    double sigma2_sq = 1.0;
    double xi = 0.5; // first-sample fraction; xi = 1 is the single-sample limit

    double fd_step() const { return 1e-5 * support1.length(); }
};

namespace detail {

template <class Fn>
double central_diff(const Fn& f, double x, double step) {
    return (f(x + step) - f(x - step)) / (2.0 * step);
}

// Simpson's rule with enough panels that smooth densities integrate to
// their analytic value well within the stated 1e-6 tolerance
template <class Fn>
double simpson(const Fn& f, Interval iv, int panels = 400) {
    const double h = iv.length() / panels;
    double acc = f(iv.lo) + f(iv.hi);
    for (int i = 1; i < panels; ++i) acc += f(iv.lo + h * i) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

inline void validate_model(const ModelSpec& spec) {
    if (!(spec.xi > 0.0 && spec.xi <= 1.0)) throw InvalidArgument("model: xi must lie in (0, 1]");
    if (!spec.f1 || !spec.mean) throw InvalidArgument("model: f1 and mean are required");
    if (spec.xi < 1.0 && (!spec.f2 || !spec.warp_inverse))
        throw InvalidArgument("model: f2 and warp inverse are required when xi < 1");
    if (!(spec.sigma1_sq >= 0.0) || !(spec.sigma2_sq >= 0.0))
        throw InvalidArgument("model: variances must be nonnegative");
    if (std::abs(simpson(spec.f1, spec.support1) - 1.0) > 1e-6)
        throw InvalidArgument("model: f1 does not integrate to 1 on its support");
    if (spec.xi < 1.0 && std::abs(simpson(spec.f2, spec.support2) - 1.0) > 1e-6)
        throw InvalidArgument("model: f2 does not integrate to 1 on its support");
    if (spec.xi < 1.0 && spec.warp) {
        double prev = spec.warp(spec.support2.lo);
        for (int i = 1; i <= 32; ++i) {
            const double t = spec.support2.lo + spec.support2.length() * i / 32.0;
            const double v = spec.warp(t);
            if (!(v > prev)) throw InvalidArgument("model: g0 is not strictly increasing");
            prev = v;
        }
    }
}

} // namespace detail

inline double warp_inverse_prime(const ModelSpec& spec, double t) {
    if (spec.warp_inverse_prime) return spec.warp_inverse_prime(t);
    return detail::central_diff(spec.warp_inverse, t, spec.fd_step());
}

inline double mean_prime(const ModelSpec& spec, double t) {
    if (spec.mean_prime) return spec.mean_prime(t);
    return detail::central_diff(spec.mean, t, spec.fd_step());
}

inline double mean_second(const ModelSpec& spec, double t) {
    if (spec.mean_second) return spec.mean_second(t);
    const double s = spec.fd_step();
    return (spec.mean(t + s) - 2.0 * spec.mean(t) + spec.mean(t - s)) / (s * s);
}

// second-sample density transported to the first time scale
inline double transported_f2(const ModelSpec& spec, double t) {
    if (spec.xi >= 1.0) return 0.0;
    return spec.f2(spec.warp_inverse(t)) * warp_inverse_prime(spec, t);
}

// f_{g0}(t) = xi f1(t) + (1-xi) f2(g0^{-1}(t)) (g0^{-1})'(t)
inline double mixture_density(const ModelSpec& spec, double t) {
    return spec.xi * spec.f1(t) + (1.0 - spec.xi) * transported_f2(spec, t);
}

inline double mixture_density_prime(const ModelSpec& spec, double t) {
    const bool analytic =
        spec.f1_prime && (spec.xi >= 1.0 || (spec.f2_prime && spec.warp_inverse_prime &&
                                             spec.warp_inverse_second));
    if (analytic) {
        double d = spec.xi * spec.f1_prime(t);
        if (spec.xi < 1.0) {
            const double u = spec.warp_inverse(t);
            const double up = spec.warp_inverse_prime(t);
            d += (1.0 - spec.xi) *
                 (spec.f2_prime(u) * up * up + spec.f2(u) * spec.warp_inverse_second(t));
        }
        return d;
    }
    return detail::central_diff([&](double x) { return mixture_density(spec, x); }, t,
                                spec.fd_step());
}

struct MseTerms {
    double variance_term = 0.0;
    double bias_sq_term = 0.0;
    double total = 0.0;
};

// Leading mean-squared-error terms of the pooled estimator under the true
// warp: variance (xi f1 s1^2 + (1-xi) f2.g0inv (g0inv)' s2^2) ||K||_2^2 /
// (n h f_g0^2) and squared bias (h^4/4) [m'' + 2 m' f_g0'/f_g0]^2 mu_2^2(K).
inline MseTerms asymptotic_mse(const ModelSpec& spec, const KernelConstants& kc, double t,
                               std::size_t n, double h) {
    detail::validate_model(spec);
    if (!(h > 0.0) || n == 0) throw InvalidArgument("asymptotic_mse: need n >= 1 and h > 0");
    const double fg = mixture_density(spec, t);
    if (!(fg > 0.0)) throw DensityZero("asymptotic_mse: f_g0(t) = 0 at t = " + format_full(t));

    const double noise = spec.xi * spec.f1(t) * spec.sigma1_sq +
                         (1.0 - spec.xi) * transported_f2(spec, t) * spec.sigma2_sq;
    MseTerms out;
    out.variance_term = noise * kc.l2_norm_sq / (static_cast<double>(n) * h * fg * fg);

    const double bracket = mean_second(spec, t) + 2.0 * mean_prime(spec, t) *
                                                      mixture_density_prime(spec, t) / fg;
    out.bias_sq_term = 0.25 * h * h * h * h * bracket * bracket * kc.second_moment *
                       kc.second_moment;
    out.total = out.variance_term + out.bias_sq_term;
    return out;
}

struct ImprovementRatios {
    double variance_factor2 = 0.0;       // (1 + rho s2^2/s1^2) / (1 + rho)^2
    double variance_limit_factor1 = 0.0; // xi^(-e) under h ~ n^(-e)
    double bias_factor2 = 0.0;           // bracket ratio squared
    double bias_limit_factor1 = 0.0;     // xi^(4e)
};

// Pointwise ratios of the pooled estimator's leading MSE terms to their
// single-sample values; the first factors are reported at their bandwidth-
// rule limits.
inline ImprovementRatios improvement_ratios(const ModelSpec& spec, double t,
                                            double bandwidth_exponent = 0.2) {
    detail::validate_model(spec);
    const double f1t = spec.f1(t);
    if (!(f1t > 0.0)) throw DensityZero("improvement_ratios: f1(t) = 0 at t = " + format_full(t));

    const double rho = (1.0 - spec.xi) * transported_f2(spec, t) / (spec.xi * f1t);
    ImprovementRatios out;
    const double var_ratio = spec.sigma1_sq > 0.0 ? spec.sigma2_sq / spec.sigma1_sq : 0.0;
    out.variance_factor2 = (1.0 + rho * var_ratio) / ((1.0 + rho) * (1.0 + rho));
    out.variance_limit_factor1 = std::pow(spec.xi, -bandwidth_exponent);
    out.bias_limit_factor1 = std::pow(spec.xi, 4.0 * bandwidth_exponent);

    const double f1p = spec.f1_prime
                           ? spec.f1_prime(t)
                           : detail::central_diff(spec.f1, t, spec.fd_step());
    const double mp = mean_prime(spec, t);
    const double ms = mean_second(spec, t);
    const double denom = ms + 2.0 * mp * f1p / f1t;
    if (denom == 0.0)
        throw DivisionByZero("improvement_ratios: bias bracket vanishes at t = " + format_full(t) +
                             "; ratio undefined at this point");
    const double fg = mixture_density(spec, t);
    if (!(fg > 0.0)) throw DensityZero("improvement_ratios: f_g0(t) = 0");
    const double numer = ms + 2.0 * mp * mixture_density_prime(spec, t) / fg;
    out.bias_factor2 = (numer / denom) * (numer / denom);
    return out;
}

// ---------------------------------------------------------------------------
// identifiability toolkit: the two-segment counterexample warp and the
// constructive machinery around it

// g0(t) = v t on [0, t0), 1 - r (1 - t) on [t0, 1], with v = (1 - r(1-t0))/t0;
// strictly increasing from [0,1] onto [0,1] whenever both slopes are positive
struct SawtoothWarp {
    double t0;
    double r;

    SawtoothWarp(double t0_, double r_) : t0(t0_), r(r_) {
        if (!(t0 > 0.0 && t0 < 1.0)) throw InvalidSawtooth("sawtooth: t0 must lie in (0,1)");
        if (!(r > 0.0)) throw InvalidSawtooth("sawtooth: upper slope r must be positive");
        if (!(lower_slope() > 0.0))
            throw InvalidSawtooth("sawtooth: lower slope (1 - r(1-t0))/t0 must be positive; r = " +
                                  format_full(r) + " is too large for t0 = " + format_full(t0));
    }

    double lower_slope() const { return (1.0 - r * (1.0 - t0)) / t0; }

    double operator()(double t) const {
        return t < t0 ? lower_slope() * t : 1.0 - r * (1.0 - t);
    }

    double inverse(double x) const {
        const double split = lower_slope() * t0; // = g0(t0)
        return x < split ? x / lower_slope() : 1.0 - (1.0 - x) / r;
    }
};

struct LinearMap {
    double intercept = 0.0;
    double slope = 1.0;
    double operator()(double t) const { return intercept + slope * t; }
    double inverse(double x) const { return (x - intercept) / slope; }
};

struct CanonicalPair {
    LinearMap g1;
    LinearMap g2;
    Interval domain; // [t0, 1]
};

// The unique pair on [t0, 1] with g0 = g1^{-1} o g2 and (g1 + g2)/2 = id:
// g1(t) = 1 - 2(1-t)/(1+r), g2(t) = 1 - 2r(1-t)/(1+r).
inline CanonicalPair canonical_upper_pair(const SawtoothWarp& w) {
    CanonicalPair p;
    p.g1 = {(w.r - 1.0) / (1.0 + w.r), 2.0 / (1.0 + w.r)};
    p.g2 = {(1.0 - w.r) / (1.0 + w.r), 2.0 * w.r / (1.0 + w.r)};
    p.domain = {w.t0, 1.0};
    return p;
}

struct SymmetryDiagnostics {
    bool exists = false;        // a symmetric decomposition exists iff r = 1
    double required_g1_t0 = 0;  // continuity forces g1(t0) = 2 t0 w/(1+w)
    double canonical_g1_t0 = 0; // value forced on [t0,1] by the canonical pair
    double gap = 0;             // |canonical - required|
    double v = 0;               // lower-segment slope
    double contraction = 0;     // w = min(v, 1/v), ratio of the iteration toward 0
    double roots[2] = {1.0, 0.0};      // roots of the continuity constraint in r
    bool root_feasible[2] = {false, false};
};

namespace detail {

inline bool sawtooth_feasible_r(double t0, double r) {
    if (!(r > 0.0) || !std::isfinite(r)) return false;
    const double v = (1.0 - r * (1.0 - t0)) / t0;
    if (!(v > 0.0)) return false;
    const double g1_t0 = 1.0 - 2.0 * (1.0 - t0) / (1.0 + r);
    return g1_t0 > 0.0 && g1_t0 < 1.0;
}

} // namespace detail

// Checks whether the two-segment warp admits strictly increasing g1, g2 with
// g0 = g1^{-1} o g2 and (g1+g2)/2 = id on all of [0,1]. Continuity of the
// forced extension at 0 pins g1(t0), which the canonical pair misses unless
// r = 1; the same requirement written as a quadratic in r has roots 1 and
// (1+2 t0)/(1-2 t0), the latter always infeasible.
inline SymmetryDiagnostics symmetric_decomposition_check(const SawtoothWarp& w) {
    SymmetryDiagnostics d;
    d.v = w.lower_slope();
    d.contraction = d.v <= 1.0 ? d.v : 1.0 / d.v;
    d.required_g1_t0 = 2.0 * w.t0 * d.contraction / (1.0 + d.contraction);
    d.canonical_g1_t0 = 1.0 - 2.0 * (1.0 - w.t0) / (1.0 + w.r);
    d.gap = std::abs(d.canonical_g1_t0 - d.required_g1_t0);
    d.exists = d.gap <= 1e-12;
    d.roots[0] = 1.0;
    d.roots[1] = w.t0 == 0.5 ? std::numeric_limits<double>::infinity()
                             : (1.0 + 2.0 * w.t0) / (1.0 - 2.0 * w.t0);
    d.root_feasible[0] = detail::sawtooth_feasible_r(w.t0, d.roots[0]);
    d.root_feasible[1] = detail::sawtooth_feasible_r(w.t0, d.roots[1]);
    return d;
}

struct ExtensionSequence {
    std::vector<double> t;  // t_n = w^n t0 along the contraction toward 0
    std::vector<double> g1; // forced values g1(t_n)
    double limit_gap = 0.0; // limit of |g1(t_n) - g1(t_{n+1})|; 0 iff r = 1
};

// Forced extension of g1 below t0 along t_n = w^n t0 via the recursion
// g1(t_n) = 2 t_n - g1(t_{n-1}). When no decomposition exists the successive
// differences oscillate toward 2|g1(t0) - 2 t0 w/(1+w)| instead of vanishing.
inline ExtensionSequence lower_extension_sequence(const SawtoothWarp& w, std::size_t n_terms) {
    if (n_terms < 1) throw InvalidArgument("lower_extension_sequence: need n_terms >= 1");
    const auto diag = symmetric_decomposition_check(w);
    ExtensionSequence seq;
    seq.t.reserve(n_terms);
    seq.g1.reserve(n_terms);
    double t = w.t0;
    double g1 = diag.canonical_g1_t0;
    seq.t.push_back(t);
    seq.g1.push_back(g1);
    for (std::size_t n = 1; n < n_terms; ++n) {
        t *= diag.contraction;
        g1 = 2.0 * t - g1;
        seq.t.push_back(t);
        seq.g1.push_back(g1);
    }
    seq.limit_gap = 2.0 * diag.gap;
    return seq;
}

} // namespace curvepool
