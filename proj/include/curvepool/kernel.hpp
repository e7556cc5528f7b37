#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/rng.hpp"

namespace curvepool {

inline constexpr double inv_sqrt_2pi = 0.3989422804014327;

enum class KernelFamily { gaussian, gaussian_truncated };

// Symmetric nonnegative kernel; the truncated family is cut at +-cutoff
// bandwidth units and deliberately not renormalized (the truncation mass at
// the default +-8 is ~1e-15 and Nadaraya-Watson ratios cancel constants).
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double cutoff = 0.0;

    static KernelSpec gaussian() { return {KernelFamily::gaussian, 0.0}; }
    static KernelSpec truncated(double c = 8.0) {
        if (!(c > 0.0)) throw InvalidArgument("truncation cutoff must be positive");
        return {KernelFamily::gaussian_truncated, c};
    }

    bool truncated_family() const { return family == KernelFamily::gaussian_truncated; }

    // radius R such that K(u) == 0 exactly for |u| > R; for the untruncated
    // gaussian, exp(-u^2/2) underflows to zero past |u| = 39
    double reach() const { return truncated_family() ? cutoff : 39.0; }
};

inline double kernel_eval(const KernelSpec& spec, double u) {
    if (spec.truncated_family() && std::abs(u) > spec.cutoff) return 0.0;
    return inv_sqrt_2pi * std::exp(-0.5 * u * u);
}

// ||K||_2^2 and mu_2(K)
struct KernelConstants {
    double l2_norm_sq = 0.0;
    double second_moment = 0.0;
};

inline KernelConstants kernel_constants(const KernelSpec& spec) {
    constexpr double sqrt_pi = 1.7724538509055160;
    if (!spec.truncated_family()) return {0.5 / sqrt_pi, 1.0};
    const double c = spec.cutoff;
    // int_{-c}^{c} K^2 = erf(c) / (2 sqrt(pi)); int_{-c}^{c} u^2 K = erf(c/sqrt(2)) - 2 c K(c)
    const double l2 = std::erf(c) * 0.5 / sqrt_pi;
    const double mu2 = std::erf(c / std::sqrt(2.0)) - 2.0 * c * inv_sqrt_2pi * std::exp(-0.5 * c * c);
    return {l2, mu2};
}

struct BandwidthPair {
    double time_bw = 0.0;  // h_t
    double value_bw = 0.0; // h_y
};

// Registration bandwidths: h_t is half the mean successive time gap of the
// lesser dense dataset, h_y is 10% of the combined y-range.
inline BandwidthPair rule_bandwidths(const FunctionalDataset& ds1, const FunctionalDataset& ds2) {
    double ylo = std::min(*std::min_element(ds1.values().begin(), ds1.values().end()),
                          *std::min_element(ds2.values().begin(), ds2.values().end()));
    double yhi = std::max(*std::max_element(ds1.values().begin(), ds1.values().end()),
                          *std::max_element(ds2.values().begin(), ds2.values().end()));
    if (!(yhi > ylo)) throw DegenerateRange("combined y-range has zero length");

    if (ds1.size() < 2 || ds2.size() < 2)
        throw InsufficientPoints("the time-bandwidth rule needs at least 2 points per dataset");
    const FunctionalDataset& sparse = ds2.density() < ds1.density() ? ds2 : ds1;
    const double mean_gap = sparse.time_support().length() / static_cast<double>(sparse.size() - 1);
    if (!(mean_gap > 0.0)) throw InsufficientPoints("lesser dense dataset has zero time spread");

    return {0.5 * mean_gap, 0.10 * (yhi - ylo)};
}

namespace detail {

inline double sample_sd(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

struct SortedSample {
    std::vector<double> t;
    std::vector<double> y;
};

inline SortedSample sort_sample(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<std::size_t> order(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
    SortedSample s;
    s.t.resize(t.size());
    s.y.resize(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        s.t[i] = t[order[i]];
        s.y[i] = y[order[i]];
    }
    return s;
}

} // namespace detail

// 20 log-spaced candidates on [0.05x, 4x] of the rule-of-thumb pilot
// 1.06 sd(t) n^(-1/5); see the bandwidth notes in README
inline std::vector<double> default_loocv_grid(const std::vector<double>& times,
                                              std::size_t count = 20) {
    const double sd = detail::sample_sd(times);
    const double n = static_cast<double>(times.size());
    double pilot = 1.06 * sd * std::pow(n, -0.2);
    if (!(pilot > 0.0)) pilot = 1.0;
    const double lo = 0.05 * pilot, hi = 4.0 * pilot;
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = pilot;
        return grid;
    }
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
    return grid;
}

// Leave-one-out CV selection of the smoothing bandwidth: minimizes the sum of
// squared LOO prediction errors of the Nadaraya-Watson fit over the grid.
// Candidates that leave some point with zero kernel mass are inadmissible;
// exact ties prefer the largest bandwidth.
inline double select_bandwidth_loocv(const std::vector<double>& times,
                                     const std::vector<double>& values,
                                     const std::vector<double>& grid, const KernelSpec& kernel) {
    if (times.size() != values.size()) throw InvalidArgument("loocv: length mismatch");
    if (times.size() < 3) throw InsufficientPoints("loocv needs at least 3 observations");
    if (grid.empty()) throw InvalidArgument("loocv: empty bandwidth grid");
    for (double h : grid)
        if (!(h > 0.0)) throw InvalidArgument("loocv: bandwidths must be positive");

    const auto s = detail::sort_sample(times, values);
    const std::size_t n = s.t.size();

    std::vector<double> sorted_grid(grid);
    std::sort(sorted_grid.begin(), sorted_grid.end());

    bool any_admissible = false;
    double best_score = 0.0;
    double best_h = 0.0;
    for (double h : sorted_grid) {
        const double radius = kernel.reach() * h;
        double score = 0.0;
        bool admissible = true;
        for (std::size_t i = 0; i < n && admissible; ++i) {
            const auto lo = std::lower_bound(s.t.begin(), s.t.end(), s.t[i] - radius);
            const auto hi = std::upper_bound(s.t.begin(), s.t.end(), s.t[i] + radius);
            // centered form y_i - sum w y_j / sum w = sum w (y_i - y_j) / sum w:
            // exact zero on constant data, so the tie-break sees true ties
            double num = 0.0, den = 0.0;
            for (auto it = lo; it != hi; ++it) {
                const std::size_t j = static_cast<std::size_t>(it - s.t.begin());
                if (j == i) continue;
                const double w = kernel_eval(kernel, (s.t[i] - s.t[j]) / h);
                num += w * (s.y[i] - s.y[j]);
                den += w;
            }
            if (den == 0.0) {
                admissible = false;
                break;
            }
            const double err = num / den;
            score += err * err;
        }
        if (!admissible) continue;
        if (!any_admissible || score <= best_score) {
            best_score = score;
            best_h = h;
            any_admissible = true;
        }
    }
    if (!any_admissible)
        throw AllPredictionsUndefined(
            "every candidate bandwidth leaves some observation with zero kernel mass");
    return best_h;
}

// Smoothed (kernel) density estimate of a sample, used for bootstrap
// resampling of times and residuals.
struct DensityEstimate {
    std::vector<double> sample;
    double bandwidth = 0.0;
    KernelSpec kernel;
};

// Silverman-type rule 1.06 sd n^(-1/5); a spread-free sample yields
// bandwidth 0, i.e. plain resampling with no smoothing noise
inline DensityEstimate kde_fit(std::vector<double> sample, const KernelSpec& kernel,
                               std::optional<double> bandwidth = std::nullopt) {
    if (sample.empty()) throw EmptyDataset("kde_fit: empty sample");
    DensityEstimate d;
    d.bandwidth = bandwidth ? *bandwidth
                            : 1.06 * detail::sample_sd(sample) *
                                  std::pow(static_cast<double>(sample.size()), -0.2);
    if (!(d.bandwidth >= 0.0)) throw InvalidArgument("kde_fit: negative bandwidth");
    d.sample = std::move(sample);
    d.kernel = kernel;
    return d;
}

// draw = sample point chosen uniformly + bandwidth-scaled kernel noise
inline std::vector<double> kde_sample(const DensityEstimate& d, rng::Stream& stream,
                                      std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double base = d.sample[d.sample.size() == 1 ? 0 : stream.index(d.sample.size())];
        double z = stream.gaussian();
        if (d.kernel.truncated_family())
            while (std::abs(z) > d.kernel.cutoff) z = stream.gaussian();
        out.push_back(base + d.bandwidth * z);
    }
    return out;
}

} // namespace curvepool
