#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/kernel.hpp"

namespace curvepool {

enum class PointFlag { ok, thin_support, outside_range };

inline const char* to_string(PointFlag f) {
    switch (f) {
        case PointFlag::ok: return "ok";
        case PointFlag::thin_support: return "thin_support";
        case PointFlag::outside_range: return "outside_range";
    }
    return "?";
}

// Estimated mean function on an evaluation grid. `mass` is the kernel
// denominator at each point; points below the mass floor carry no estimate.
struct MeanCurve {
    std::vector<double> grid;
    std::vector<double> estimate;
    std::vector<double> mass;
    std::vector<PointFlag> flags;
    double bandwidth = 0.0;             // resolved h_n
    Interval eval_interval{0.0, 0.0};   // interior interval [a+h, b-h]
    std::size_t second_sample_dropped = 0;

    std::size_t ok_count() const {
        std::size_t n = 0;
        for (auto f : flags) n += f == PointFlag::ok;
        return n;
    }
};

struct EstimateConfig {
    std::optional<double> bandwidth;        // unset => leave-one-out CV
    KernelSpec kernel = KernelSpec::truncated(8.0);
    std::size_t grid_size = 512;
    double mass_floor = 1e-12;
    bool loocv_first_only = false;          // select h_n on ds1 only instead of the pooled sample
    std::optional<std::vector<double>> loocv_grid;
};

namespace detail {

// pooled re-warped sample {(t_i, y_1i)} U {(w(s_j), y_2j)}, sorted by time
struct PooledSample {
    std::vector<double> t;
    std::vector<double> y;
    std::size_t n2_out_of_reach = 0;
};

template <class WarpFn>
PooledSample pool_sample(const FunctionalDataset& ds1, const FunctionalDataset* ds2,
                         const WarpFn& warp) {
    PooledSample p;
    const std::size_t n2 = ds2 ? ds2->size() : 0;
    p.t.reserve(ds1.size() + n2);
    p.y.reserve(ds1.size() + n2);
    p.t = ds1.times();
    p.y = ds1.values();
    if (ds2) {
        for (std::size_t j = 0; j < n2; ++j) {
            p.t.push_back(warp(ds2->times()[j]));
            p.y.push_back(ds2->values()[j]);
        }
    }
    auto sorted = sort_sample(p.t, p.y);
    p.t = std::move(sorted.t);
    p.y = std::move(sorted.y);
    return p;
}

inline void nw_point(const PooledSample& s, const KernelSpec& kernel, double h, double t,
                     double& num, double& den) {
    const double radius = kernel.reach() * h;
    const auto lo = std::lower_bound(s.t.begin(), s.t.end(), t - radius);
    const auto hi = std::upper_bound(s.t.begin(), s.t.end(), t + radius);
    num = 0.0;
    den = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const std::size_t j = static_cast<std::size_t>(it - s.t.begin());
        const double w = kernel_eval(kernel, (t - s.t[j]) / h);
        num += w * s.y[j];
        den += w;
    }
}

inline double resolve_bandwidth(const PooledSample& pooled, const FunctionalDataset& ds1,
                                const EstimateConfig& cfg) {
    if (cfg.bandwidth) {
        if (!(*cfg.bandwidth > 0.0)) throw InvalidArgument("bandwidth must be positive");
        return *cfg.bandwidth;
    }
    const std::vector<double>& t = cfg.loocv_first_only ? ds1.times() : pooled.t;
    const std::vector<double>& y = cfg.loocv_first_only ? ds1.values() : pooled.y;
    const auto grid = cfg.loocv_grid ? *cfg.loocv_grid : default_loocv_grid(t);
    return select_bandwidth_loocv(t, y, grid, cfg.kernel);
}

} // namespace detail

// Pooled Nadaraya-Watson estimator evaluated at caller-provided points. The
// second dataset may be null, which gives the classical single-sample
// estimator on ds1 through the same code path.
template <class WarpFn>
MeanCurve pooled_nw_at(const FunctionalDataset& ds1, const FunctionalDataset* ds2,
                       const WarpFn& warp, const EstimateConfig& cfg, std::vector<double> grid) {
    if (cfg.mass_floor <= 0.0) throw InvalidArgument("mass floor must be positive");
    auto pooled = detail::pool_sample(ds1, ds2, warp);
    const double h = detail::resolve_bandwidth(pooled, ds1, cfg);

    const Interval support = ds1.time_support();
    const double reach = cfg.kernel.reach() * h;
    if (ds2) {
        for (std::size_t j = 0; j < ds2->size(); ++j) {
            const double u = warp(ds2->times()[j]);
            if (u < support.lo - reach || u > support.hi + reach) ++pooled.n2_out_of_reach;
        }
    }

    MeanCurve curve;
    curve.bandwidth = h;
    curve.eval_interval = {support.lo + h, support.hi - h};
    curve.second_sample_dropped = pooled.n2_out_of_reach;
    curve.grid = std::move(grid);
    curve.estimate.assign(curve.grid.size(), std::numeric_limits<double>::quiet_NaN());
    curve.mass.assign(curve.grid.size(), 0.0);
    curve.flags.assign(curve.grid.size(), PointFlag::thin_support);

    std::size_t with_mass = 0;
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        const double t = curve.grid[k];
        double num, den;
        detail::nw_point(pooled, cfg.kernel, h, t, num, den);
        curve.mass[k] = den;
        if (den < cfg.mass_floor) {
            curve.flags[k] = PointFlag::thin_support;
            continue;
        }
        ++with_mass;
        curve.estimate[k] = num / den;
        curve.flags[k] = curve.eval_interval.contains(t) ? PointFlag::ok : PointFlag::outside_range;
    }
    if (with_mass == 0) throw AllPointsThin("no evaluation point has kernel mass");
    return curve;
}

// Default evaluation grid: equidistant points on the interior interval
// [a + h_n, b - h_n] of the first dataset's time support.
template <class WarpFn>
MeanCurve pooled_nw(const FunctionalDataset& ds1, const FunctionalDataset* ds2, const WarpFn& warp,
                    const EstimateConfig& cfg) {
    if (cfg.grid_size < 2) throw InvalidArgument("grid size must be at least 2");
    auto pooled = detail::pool_sample(ds1, ds2, warp);
    const double h = detail::resolve_bandwidth(pooled, ds1, cfg);
    const Interval support = ds1.time_support();
    const double lo = support.lo + h, hi = support.hi - h;
    if (!(hi > lo))
        throw AllPointsThin("interior evaluation interval [a+h, b-h] is empty at h = " +
                            format_full(h));
    std::vector<double> grid(cfg.grid_size);
    const double step = (hi - lo) / static_cast<double>(cfg.grid_size - 1);
    for (std::size_t k = 0; k < cfg.grid_size; ++k) grid[k] = lo + step * static_cast<double>(k);
    grid.back() = hi;

    EstimateConfig resolved = cfg;
    resolved.bandwidth = h;
    return pooled_nw_at(ds1, ds2, warp, resolved, std::move(grid));
}

inline MeanCurve single_sample_nw(const FunctionalDataset& ds1, const EstimateConfig& cfg) {
    auto id = [](double t) { return t; };
    return pooled_nw(ds1, nullptr, id, cfg);
}

inline MeanCurve single_sample_nw_at(const FunctionalDataset& ds1, const EstimateConfig& cfg,
                                     std::vector<double> grid) {
    auto id = [](double t) { return t; };
    return pooled_nw_at(ds1, nullptr, id, cfg, std::move(grid));
}

// trapezoid-rule integral of (curve - reference)^2 over the ok points
template <class Fn>
double integrated_squared_error(const MeanCurve& curve, const Fn& reference) {
    double acc = 0.0;
    bool have_prev = false;
    double prev_t = 0.0, prev_sq = 0.0;
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        if (curve.flags[k] != PointFlag::ok) {
            have_prev = false;
            continue;
        }
        const double d = curve.estimate[k] - reference(curve.grid[k]);
        const double sq = d * d;
        if (have_prev) acc += 0.5 * (sq + prev_sq) * (curve.grid[k] - prev_t);
        prev_t = curve.grid[k];
        prev_sq = sq;
        have_prev = true;
    }
    return acc;
}

} // namespace curvepool
