#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "curvepool/config.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/simulate.hpp"
#include "curvepool/theory.hpp"

namespace curvepool {

namespace detail {

inline std::vector<double> parse_coeffs(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            out.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw ParseError("model: bad coefficient '" + field + "'");
        }
    }
    if (out.empty()) throw ParseError("model: empty coefficient list");
    return out;
}

} // namespace detail

// Builds an analytic ModelSpec from a flat key = value description.
//
//   f1 = uniform                 on [a, b]
//   f2 = uniform | linear        on [c, d]; linear uses f2_intercept, f2_slope
//   m  = quadratic | poly | bumps    poly uses m_coeffs = c0,c1,...
//   g0 = identity | linear | sine | sawtooth
//        linear: g0_intercept, g0_slope; sine: g0_scale; sawtooth: g0_t0, g0_r
//   sigma1, sigma2 = noise standard deviations; xi = first-sample fraction
inline ModelSpec model_from_config(const FlatConfig& cfg) {
    ModelSpec spec;
    spec.support1 = {cfg.get_double("a", 0.0), cfg.get_double("b", 1.0)};
    spec.support2 = {cfg.get_double("c", spec.support1.lo), cfg.get_double("d", spec.support1.hi)};
    if (!(spec.support1.hi > spec.support1.lo) || !(spec.support2.hi > spec.support2.lo))
        throw InvalidArgument("model: supports must have positive length");

    const std::string f1_kind = cfg.get("f1", "uniform");
    if (f1_kind == "uniform") {
        const Interval s = spec.support1;
        spec.f1 = [s](double t) { return s.contains(t) ? 1.0 / s.length() : 0.0; };
        spec.f1_prime = [](double) { return 0.0; };
    } else {
        throw InvalidArgument("model: unknown f1 '" + f1_kind + "'");
    }

    const std::string f2_kind = cfg.get("f2", "uniform");
    const Interval s2 = spec.support2;
    if (f2_kind == "uniform") {
        spec.f2 = [s2](double t) { return s2.contains(t) ? 1.0 / s2.length() : 0.0; };
        spec.f2_prime = [](double) { return 0.0; };
    } else if (f2_kind == "linear") {
        const double ic = cfg.get_double("f2_intercept", 0.5);
        const double sl = cfg.get_double("f2_slope", 1.0);
        if (std::abs(ic + 0.5 * sl - 1.0) > 1e-9)
            throw InvalidArgument("model: linear f2 must normalize (intercept + slope/2 = 1)");
        const double len = s2.length();
        spec.f2 = [s2, ic, sl, len](double t) {
            return s2.contains(t) ? (ic + sl * (t - s2.lo) / len) / len : 0.0;
        };
        spec.f2_prime = [s2, sl, len](double t) {
            return s2.contains(t) ? sl / (len * len) : 0.0;
        };
    } else {
        throw InvalidArgument("model: unknown f2 '" + f2_kind + "'");
    }

    const std::string m_kind = cfg.get("m", "quadratic");
    if (m_kind == "quadratic") {
        spec.mean = [](double t) { return t * t; };
        spec.mean_prime = [](double t) { return 2.0 * t; };
        spec.mean_second = [](double) { return 2.0; };
    } else if (m_kind == "poly") {
        const auto coeffs = detail::parse_coeffs(cfg.get("m_coeffs", ""));
        auto horner = [coeffs](double t) {
            double acc = 0.0;
            for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
            return acc;
        };
        spec.mean = horner;
        spec.mean_prime = [coeffs](double t) {
            double acc = 0.0;
            for (std::size_t i = coeffs.size(); i-- > 1;)
                acc = acc * t + static_cast<double>(i) * coeffs[i];
            return acc;
        };
        spec.mean_second = [coeffs](double t) {
            double acc = 0.0;
            for (std::size_t i = coeffs.size(); i-- > 2;)
                acc = acc * t + static_cast<double>(i * (i - 1)) * coeffs[i];
            return acc;
        };
    } else if (m_kind == "bumps") {
        const auto m = builtin_sim_mean();
        spec.mean = m.value;
        spec.mean_prime = m.prime;
        spec.mean_second = m.second;
    } else {
        throw InvalidArgument("model: unknown m '" + m_kind + "'");
    }

    const std::string g0_kind = cfg.get("g0", "identity");
    if (g0_kind == "identity") {
        spec.warp = [](double t) { return t; };
        spec.warp_inverse = [](double t) { return t; };
        spec.warp_inverse_prime = [](double) { return 1.0; };
        spec.warp_inverse_second = [](double) { return 0.0; };
    } else if (g0_kind == "linear") {
        const double b0 = cfg.get_double("g0_intercept", 0.0);
        const double b1 = cfg.get_double("g0_slope", 1.0);
        if (!(b1 > 0.0)) throw InvalidArgument("model: linear g0 slope must be positive");
        spec.warp = [b0, b1](double t) { return b0 + b1 * t; };
        spec.warp_inverse = [b0, b1](double x) { return (x - b0) / b1; };
        spec.warp_inverse_prime = [b1](double) { return 1.0 / b1; };
        spec.warp_inverse_second = [](double) { return 0.0; };
    } else if (g0_kind == "sine") {
        const double scale = cfg.get_double("g0_scale", s2.hi);
        spec.warp = [scale](double t) { return true_warp_sim(t, scale); };
        // strictly increasing on [0, scale]; invert numerically
        spec.warp_inverse = [scale, s2](double x) {
            double lo = s2.lo, hi = s2.hi;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * scale; ++it) {
                const double mid = 0.5 * (lo + hi);
                (true_warp_sim(mid, scale) < x ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
    } else if (g0_kind == "sawtooth") {
        const SawtoothWarp w(cfg.require_double("g0_t0"), cfg.require_double("g0_r"));
        spec.warp = [w](double t) { return w(t); };
        spec.warp_inverse = [w](double x) { return w.inverse(x); };
        spec.warp_inverse_prime = [w](double x) {
            return x < w.lower_slope() * w.t0 ? 1.0 / w.lower_slope() : 1.0 / w.r;
        };
        spec.warp_inverse_second = [](double) { return 0.0; };
    } else {
        throw InvalidArgument("model: unknown g0 '" + g0_kind + "'");
    }

    const double s1 = cfg.get_double("sigma1", 1.0);
    const double s2v = cfg.get_double("sigma2", s1);
    spec.sigma1_sq = s1 * s1;
    spec.sigma2_sq = s2v * s2v;
    spec.xi = cfg.get_double("xi", 0.5);
    return spec;
}

} // namespace curvepool
