#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/estimator.hpp"
#include "curvepool/kernel.hpp"
#include "curvepool/parallel.hpp"
#include "curvepool/registration.hpp"
#include "curvepool/rng.hpp"

namespace curvepool {

struct BootstrapOptions {
    bool resample_times = true;      // draw times from KDE fits of f1, f2
    bool reestimate_warp = true;     // re-run registration per replicate
    bool reselect_bandwidth = true;  // re-run leave-one-out CV per replicate
    double max_failure_fraction = 0.10;
};

struct BootstrapSummary {
    std::vector<double> grid;
    std::vector<double> estimate; // the fitted curve the replicates vary around
    std::vector<double> se;
    std::vector<double> ci_lo, ci_hi;     // pointwise percentile interval at level alpha
    std::vector<double> band_lo, band_hi; // simultaneous sup-deviation band
    std::vector<std::size_t> replicate_count;
    std::size_t replicates_used = 0;
    std::size_t replicates_failed = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

namespace detail {

// R type-7 quantile of an already sorted vector
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (sorted.size() == 1) return sorted.front();
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

struct FittedModel {
    PooledSample pooled;      // original data under the fitted warp
    double bandwidth = 0.0;
    KernelSpec kernel;
    double mass_floor = 1e-12;

    std::optional<double> value_at(double t) const {
        double num, den;
        nw_point(pooled, kernel, bandwidth, t, num, den);
        if (den < mass_floor) return std::nullopt;
        return num / den;
    }
};

} // namespace detail

// Model-based bootstrap: regenerate both samples from the fitted model
// (mean = fitted curve, warp = registered warp, times from KDE fits of the
// observed times, errors from KDE-smoothed centered residuals), re-run
// registration and estimation per replicate, and summarize the replicate
// curves on the fitted grid. Replicate b uses a stream derived from
// (seed, b), so results are independent of the worker count.
inline BootstrapSummary bootstrap(const FunctionalDataset& ds1, const FunctionalDataset& ds2,
                                  const RegistrationResult& reg, const MeanCurve& fitted,
                                  std::size_t B, double alpha, std::uint64_t seed,
                                  const RegistrationConfig& reg_cfg, const EstimateConfig& est_cfg,
                                  const BootstrapOptions& opts = {}, unsigned threads = 0) {
    if (B < 2) throw InvalidArgument("bootstrap: need B >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("bootstrap: alpha must lie in (0,1)");
    if (fitted.ok_count() == 0) throw AllPointsThin("bootstrap: fitted curve has no ok points");

    detail::FittedModel model{detail::pool_sample(ds1, &ds2, reg.warp), fitted.bandwidth,
                              est_cfg.kernel, est_cfg.mass_floor};

    // centered residuals as error-distribution proxies
    std::vector<double> res1, res2;
    res1.reserve(ds1.size());
    res2.reserve(ds2.size());
    for (std::size_t i = 0; i < ds1.size(); ++i)
        if (auto v = model.value_at(ds1.times()[i])) res1.push_back(ds1.values()[i] - *v);
    for (std::size_t j = 0; j < ds2.size(); ++j)
        if (auto v = model.value_at(reg.warp(ds2.times()[j]))) res2.push_back(ds2.values()[j] - *v);
    if (res1.empty() || res2.empty())
        throw AllPointsThin("bootstrap: could not evaluate the fitted curve at the data points");
    auto center = [](std::vector<double>& r) {
        double mean = 0.0;
        for (double v : r) mean += v;
        mean /= static_cast<double>(r.size());
        for (double& v : r) v -= mean;
    };
    center(res1);
    center(res2);

    const auto kde_t1 = kde_fit(ds1.times(), KernelSpec::gaussian());
    const auto kde_t2 = kde_fit(ds2.times(), KernelSpec::gaussian());
    const auto kde_e1 = kde_fit(std::move(res1), KernelSpec::gaussian());
    const auto kde_e2 = kde_fit(std::move(res2), KernelSpec::gaussian());

    const std::size_t g = fitted.grid.size();
    std::vector<std::vector<double>> rep_est(B);
    std::vector<char> rep_failed(B, 0);

    parallel_for(B, threads, [&](std::size_t b) {
        rep_est[b].assign(g, std::numeric_limits<double>::quiet_NaN());
        try {
            rng::Stream stream(rng::derive_seed(seed, b));

            auto draw_series = [&](const DensityEstimate& kde_t, const std::vector<double>& orig_t,
                                   const DensityEstimate& kde_e, std::size_t n, const auto& locate)
                -> std::pair<std::vector<double>, std::vector<double>> {
                std::vector<double> t(n), y(n);
                for (std::size_t i = 0; i < n; ++i) {
                    double ti = 0.0;
                    std::optional<double> fit;
                    if (opts.resample_times) {
                        int attempts = 0;
                        do {
                            ti = kde_sample(kde_t, stream, 1).front();
                            fit = model.value_at(locate(ti));
                        } while (!fit && ++attempts < 100);
                        if (!fit) throw AllPointsThin("bootstrap: resampled time out of support");
                    } else {
                        ti = orig_t[i];
                        fit = model.value_at(locate(ti));
                        if (!fit) throw AllPointsThin("bootstrap: original time out of support");
                    }
                    t[i] = ti;
                    y[i] = *fit + kde_sample(kde_e, stream, 1).front();
                }
                return {std::move(t), std::move(y)};
            };

            auto [t1, y1] = draw_series(kde_t1, ds1.times(), kde_e1, ds1.size(),
                                        [](double t) { return t; });
            auto [t2, y2] = draw_series(kde_t2, ds2.times(), kde_e2, ds2.size(),
                                        [&](double s) { return reg.warp(s); });

            ParseOptions opt;
            opt.resolve_duplicate_times = true;
            FunctionalDataset b1(ds1.label(), std::move(t1), std::move(y1), opt);
            FunctionalDataset b2(ds2.label(), std::move(t2), std::move(y2), opt);

            EstimateConfig cfg_b = est_cfg;
            if (!opts.reselect_bandwidth) cfg_b.bandwidth = fitted.bandwidth;

            MeanCurve curve;
            if (opts.reestimate_warp) {
                auto reg_b = register_warp(b1, b2, reg_cfg);
                curve = pooled_nw_at(b1, &b2, reg_b.warp, cfg_b, fitted.grid);
            } else {
                curve = pooled_nw_at(b1, &b2, reg.warp, cfg_b, fitted.grid);
            }
            for (std::size_t k = 0; k < g; ++k)
                if (curve.flags[k] != PointFlag::thin_support) rep_est[b][k] = curve.estimate[k];
        } catch (const Error&) {
            rep_failed[b] = 1;
        }
    });

    BootstrapSummary out;
    out.grid = fitted.grid;
    out.estimate = fitted.estimate;
    out.alpha = alpha;
    out.seed = seed;
    for (char f : rep_failed) out.replicates_failed += f != 0;
    out.replicates_used = B - out.replicates_failed;
    if (static_cast<double>(out.replicates_failed) > opts.max_failure_fraction * static_cast<double>(B))
        throw ReplicateFailure("bootstrap: " + std::to_string(out.replicates_failed) + " of " +
                               std::to_string(B) + " replicates failed");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.se.assign(g, nan);
    out.ci_lo.assign(g, nan);
    out.ci_hi.assign(g, nan);
    out.band_lo.assign(g, nan);
    out.band_hi.assign(g, nan);
    out.replicate_count.assign(g, 0);

    std::vector<double> column;
    column.reserve(B);
    for (std::size_t k = 0; k < g; ++k) {
        column.clear();
        for (std::size_t b = 0; b < B; ++b)
            if (!rep_failed[b] && !std::isnan(rep_est[b][k])) column.push_back(rep_est[b][k]);
        out.replicate_count[k] = column.size();
        if (column.size() < 2) continue;
        double mean = 0.0;
        for (double v : column) mean += v;
        mean /= static_cast<double>(column.size());
        double ss = 0.0;
        for (double v : column) ss += (v - mean) * (v - mean);
        out.se[k] = std::sqrt(ss / static_cast<double>(column.size() - 1));
        std::sort(column.begin(), column.end());
        out.ci_lo[k] = detail::quantile_sorted(column, 0.5 * alpha);
        out.ci_hi[k] = detail::quantile_sorted(column, 1.0 - 0.5 * alpha);
    }

    // sup-deviation band over points every used replicate could evaluate
    std::vector<double> sup_devs;
    sup_devs.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
        if (rep_failed[b]) continue;
        double dev = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            if (fitted.flags[k] != PointFlag::ok) continue;
            if (out.replicate_count[k] != out.replicates_used || std::isnan(rep_est[b][k])) continue;
            dev = std::max(dev, std::abs(rep_est[b][k] - fitted.estimate[k]));
        }
        sup_devs.push_back(dev);
    }
    std::sort(sup_devs.begin(), sup_devs.end());
    const double q = detail::quantile_sorted(sup_devs, 1.0 - alpha);
    for (std::size_t k = 0; k < g; ++k) {
        if (fitted.flags[k] != PointFlag::ok || out.replicate_count[k] < 2) continue;
        out.band_lo[k] = fitted.estimate[k] - q;
        out.band_hi[k] = fitted.estimate[k] + q;
        // the band is defined to contain the pointwise interval
        if (out.ci_lo[k] < out.band_lo[k]) out.band_lo[k] = out.ci_lo[k];
        if (out.ci_hi[k] > out.band_hi[k]) out.band_hi[k] = out.ci_hi[k];
    }
    return out;
}

enum class CvMode { exact, fast };

inline const char* to_string(CvMode m) { return m == CvMode::exact ? "exact" : "fast"; }

// Leave-one-out comparison of pooling vs the first sample alone.
struct CvReport {
    double cv_first_only = 0.0;         // ds1-only estimator over ds1 deletions
    double cv_pooled = 0.0;             // pooled estimator over deletions from either set
    double cv_pooled_first_scale = 0.0; // pooled estimator over the same ds1 deletions
    bool pooling_useful = false;        // cv_pooled < cv_first_only
    CvMode mode = CvMode::fast;
    std::size_t deletions = 0;
    std::size_t skipped = 0;
    double bandwidth_first = 0.0;
    double bandwidth_pooled = 0.0;
};

// Mean squared leave-one-out prediction errors: every observation from either
// data set is deleted in turn; in exact mode the warp is re-estimated after
// each deletion, in fast mode it is held fixed. Smoothing and registration
// bandwidths are selected once on the full data and held fixed throughout.
// cv_first_only and cv_pooled_first_scale are averaged over the identical
// set of ds1 deletions, so they are directly comparable.
inline CvReport cv_usefulness(const FunctionalDataset& ds1, const FunctionalDataset& ds2,
                              const RegistrationConfig& reg_cfg, const EstimateConfig& est_cfg,
                              CvMode mode = CvMode::fast, std::size_t max_deletions = 0,
                              unsigned threads = 0) {
    const auto full_reg = register_warp(ds1, ds2, reg_cfg);

    double h_first, h_pooled;
    if (est_cfg.bandwidth) {
        h_first = h_pooled = *est_cfg.bandwidth;
    } else {
        const auto grid1 = est_cfg.loocv_grid ? *est_cfg.loocv_grid
                                              : default_loocv_grid(ds1.times());
        h_first = select_bandwidth_loocv(ds1.times(), ds1.values(), grid1, est_cfg.kernel);
        const auto pooled_full = detail::pool_sample(ds1, &ds2, full_reg.warp);
        const auto gridp = est_cfg.loocv_grid ? *est_cfg.loocv_grid
                                              : default_loocv_grid(pooled_full.t);
        h_pooled = select_bandwidth_loocv(pooled_full.t, pooled_full.y, gridp, est_cfg.kernel);
    }

    RegistrationConfig del_cfg = reg_cfg;
    del_cfg.time_bw = full_reg.time_bw;
    del_cfg.value_bw = full_reg.value_bw;

    const std::size_t total = ds1.size() + ds2.size();
    std::vector<std::size_t> items;
    if (max_deletions > 0 && max_deletions < total) {
        items.reserve(max_deletions);
        for (std::size_t d = 0; d < max_deletions; ++d) items.push_back(d * total / max_deletions);
    } else {
        items.resize(total);
        for (std::size_t d = 0; d < total; ++d) items[d] = d;
    }

    struct ItemResult {
        bool is_first = false;
        bool first_defined = false;
        bool pooled_defined = false;
        double sq_first = 0.0;
        double sq_pooled = 0.0;
    };
    std::vector<ItemResult> results(items.size());

    auto id = [](double t) { return t; };
    parallel_for(items.size(), threads, [&](std::size_t w) {
        const std::size_t d = items[w];
        ItemResult& r = results[w];
        if (d < ds1.size()) {
            r.is_first = true;
            const double t_target = ds1.times()[d];
            const double y_target = ds1.values()[d];
            const auto ds1_minus = ds1.without(d);

            const auto own = detail::pool_sample(ds1_minus, nullptr, id);
            double num, den;
            detail::nw_point(own, est_cfg.kernel, h_first, t_target, num, den);
            if (den >= est_cfg.mass_floor) {
                const double e = y_target - num / den;
                r.first_defined = true;
                r.sq_first = e * e;
            }

            try {
                const auto* warp = &full_reg.warp;
                std::optional<RegistrationResult> reg_d;
                if (mode == CvMode::exact) {
                    reg_d = register_warp(ds1_minus, ds2, del_cfg);
                    warp = &reg_d->warp;
                }
                const auto pooled = detail::pool_sample(ds1_minus, &ds2, *warp);
                detail::nw_point(pooled, est_cfg.kernel, h_pooled, t_target, num, den);
                if (den >= est_cfg.mass_floor) {
                    const double e = y_target - num / den;
                    r.pooled_defined = true;
                    r.sq_pooled = e * e;
                }
            } catch (const Error&) {
                // deletion made the pooled fit infeasible; skip and count
            }
        } else {
            const std::size_t j = d - ds1.size();
            const double y_target = ds2.values()[j];
            const auto ds2_minus = ds2.without(j);
            try {
                const auto* warp = &full_reg.warp;
                std::optional<RegistrationResult> reg_d;
                if (mode == CvMode::exact) {
                    reg_d = register_warp(ds1, ds2_minus, del_cfg);
                    warp = &reg_d->warp;
                }
                const double t_target = (*warp)(ds2.times()[j]);
                const auto pooled = detail::pool_sample(ds1, &ds2_minus, *warp);
                double num, den;
                detail::nw_point(pooled, est_cfg.kernel, h_pooled, t_target, num, den);
                if (den >= est_cfg.mass_floor) {
                    const double e = y_target - num / den;
                    r.pooled_defined = true;
                    r.sq_pooled = e * e;
                }
            } catch (const Error&) {
            }
        }
    });

    CvReport report;
    report.mode = mode;
    report.deletions = items.size();
    report.bandwidth_first = h_first;
    report.bandwidth_pooled = h_pooled;

    double sum_first = 0.0, sum_pooled_fs = 0.0, sum_pooled = 0.0;
    std::size_t n_first = 0, n_pooled = 0;
    for (const auto& r : results) {
        if (r.pooled_defined) {
            sum_pooled += r.sq_pooled;
            ++n_pooled;
        }
        if (r.is_first && r.first_defined && r.pooled_defined) {
            sum_first += r.sq_first;
            sum_pooled_fs += r.sq_pooled;
            ++n_first;
        }
        if (!r.pooled_defined || (r.is_first && !r.first_defined)) ++report.skipped;
    }
    if (n_first == 0 || n_pooled == 0)
        throw AllPredictionsUndefined("cv_usefulness: no deletion produced a defined prediction");
    report.cv_first_only = sum_first / static_cast<double>(n_first);
    report.cv_pooled_first_scale = sum_pooled_fs / static_cast<double>(n_first);
    report.cv_pooled = sum_pooled / static_cast<double>(n_pooled);
    report.pooling_useful = report.cv_pooled < report.cv_first_only;
    return report;
}

} // namespace curvepool
