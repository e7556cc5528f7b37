#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/estimator.hpp"
#include "curvepool/parallel.hpp"
#include "curvepool/registration.hpp"
#include "curvepool/rng.hpp"

namespace curvepool {

// true warp of the simulation design: g0(t) = t + 0.05 t sin(4 pi t / 415)
inline double true_warp_sim(double t, double t_max = 415.0) {
    constexpr double four_pi = 12.566370614359172;
    return t + 0.05 * t * std::sin(four_pi * t / t_max);
}

struct MeanFunction {
    std::function<double(double)> value;
    std::function<double(double)> prime;  // optional
    std::function<double(double)> second; // optional
};

// Synthetic mean on [0, 415]: five Gaussian bumps of unequal height and
// width over a base of 195, peak-to-trough ~ 95 units. The heterogeneity
// matters: interchangeable bumps would leave the alignment ambiguous.
inline MeanFunction builtin_sim_mean() {
    struct Bump {
        double center, amplitude, width;
    };
    static const std::vector<Bump> bumps = {{10.0, 95.0, 15.0},
                                            {128.0, 60.0, 24.0},
                                            {242.0, 85.0, 13.0},
                                            {335.0, 55.0, 20.0},
                                            {408.0, 90.0, 17.0}};
    MeanFunction m;
    m.value = [](double t) {
        double acc = 195.0;
        for (const auto& b : bumps) {
            const double z = (t - b.center) / b.width;
            acc += b.amplitude * std::exp(-0.5 * z * z);
        }
        return acc;
    };
    m.prime = [](double t) {
        double acc = 0.0;
        for (const auto& b : bumps) {
            const double z = (t - b.center) / b.width;
            acc += b.amplitude * std::exp(-0.5 * z * z) * (-z / b.width);
        }
        return acc;
    };
    m.second = [](double t) {
        double acc = 0.0;
        for (const auto& b : bumps) {
            const double z = (t - b.center) / b.width;
            acc += b.amplitude * std::exp(-0.5 * z * z) * (z * z - 1.0) / (b.width * b.width);
        }
        return acc;
    };
    return m;
}

// linear sampling density f(t) = (intercept + slope * t/T) / T on [0, T],
// normalized when intercept + slope/2 = 1; the simulation default is the
// design f2(t) = (t/415 + 1/2)/415
struct LinearDensity {
    double intercept = 0.5;
    double slope = 1.0;
    double t_max = 415.0;

    void validate() const {
        if (!(t_max > 0.0)) throw InvalidArgument("linear density: T must be positive");
        if (std::abs(intercept + 0.5 * slope - 1.0) > 1e-9)
            throw InvalidArgument("linear density: intercept + slope/2 must equal 1");
        if (intercept < 0.0 || intercept + slope < 0.0)
            throw InvalidArgument("linear density: negative on its support");
    }

    double pdf(double t) const {
        if (t < 0.0 || t > t_max) return 0.0;
        return (intercept + slope * t / t_max) / t_max;
    }

    double cdf(double t) const {
        const double x = std::clamp(t / t_max, 0.0, 1.0);
        return intercept * x + 0.5 * slope * x * x;
    }

    double inverse_cdf(double u) const {
        if (slope == 0.0) return t_max * u / intercept;
        const double x =
            (-intercept + std::sqrt(intercept * intercept + 2.0 * slope * u)) / slope;
        return t_max * x;
    }
};

struct SimSpec {
    std::size_t n1 = 500;
    std::size_t n2 = 500;
    Interval t_range{0.0, 415.0};
    MeanFunction mean = builtin_sim_mean();
    double noise_frac = 0.10; // noise SD as a fraction of sd({m(t_j)})
    std::function<double(double)> warp = [](double t) { return true_warp_sim(t); };
    LinearDensity f2;
    std::uint64_t seed = 0;
};

// One synthetic pair: first-sample times uniform on the range, second-sample
// times from the linear density via inverse CDF, values from the two-sample
// model with the true warp; both noise SDs equal noise_frac * sd({m(t_i)})
// computed from the realized first-sample times.
inline std::pair<FunctionalDataset, FunctionalDataset> generate_pair(const SimSpec& spec,
                                                                     rng::Stream& stream) {
    spec.f2.validate();
    if (!(spec.noise_frac >= 0.0)) throw InvalidArgument("noise fraction must be nonnegative");

    std::vector<double> t1(spec.n1), m1(spec.n1);
    for (std::size_t i = 0; i < spec.n1; ++i) {
        t1[i] = stream.uniform(spec.t_range.lo, spec.t_range.hi);
        m1[i] = spec.mean.value(t1[i]);
    }
    const double noise_sd = spec.noise_frac * detail::sample_sd(m1);

    std::vector<double> y1(spec.n1);
    for (std::size_t i = 0; i < spec.n1; ++i) y1[i] = m1[i] + noise_sd * stream.gaussian();

    std::vector<double> t2(spec.n2), y2(spec.n2);
    for (std::size_t j = 0; j < spec.n2; ++j) {
        t2[j] = spec.f2.inverse_cdf(stream.uniform());
        y2[j] = spec.mean.value(spec.warp(t2[j])) + noise_sd * stream.gaussian();
    }

    ParseOptions opt;
    opt.resolve_duplicate_times = true;
    return {FunctionalDataset("sim1", std::move(t1), std::move(y1), opt),
            FunctionalDataset("sim2", std::move(t2), std::move(y2), opt)};
}

struct EstimatorStats {
    std::string name;
    std::vector<double> bias;
    std::vector<double> sd;   // pointwise SD across runs
    std::vector<double> mse;  // pointwise mean of (estimate - m)^2
    double imse = 0.0;        // trapezoid rule over grid points ok in every run
};

struct SimulationReport {
    std::vector<double> grid;
    std::vector<bool> common_ok; // grid points usable in every run for every estimator
    EstimatorStats nw_first;     // first sample only
    EstimatorStats plugin;       // estimated warp
    EstimatorStats oracle;       // true warp
    std::size_t runs = 0;
    std::size_t failed = 0;
    std::uint64_t seed = 0;
};

namespace detail {

struct RunCurves {
    std::vector<double> est[3]; // nw_first, plugin, oracle
    std::vector<bool> ok[3];
    bool failed = false;
};

inline void finalize_stats(EstimatorStats& stats, const std::vector<detail::RunCurves>& runs,
                           const std::vector<double>& grid, const std::vector<bool>& common_ok,
                           const std::vector<double>& truth, int which) {
    const std::size_t g = grid.size();
    stats.bias.assign(g, 0.0);
    stats.sd.assign(g, 0.0);
    stats.mse.assign(g, 0.0);
    std::size_t used = 0;
    for (const auto& r : runs) used += !r.failed;
    if (used == 0) return;
    for (std::size_t k = 0; k < g; ++k) {
        if (!common_ok[k]) continue;
        double mean = 0.0;
        for (const auto& r : runs)
            if (!r.failed) mean += r.est[which][k];
        mean /= static_cast<double>(used);
        double ss = 0.0, se = 0.0;
        for (const auto& r : runs) {
            if (r.failed) continue;
            const double d = r.est[which][k] - mean;
            ss += d * d;
            const double e = r.est[which][k] - truth[k];
            se += e * e;
        }
        stats.bias[k] = mean - truth[k];
        stats.sd[k] = std::sqrt(ss / static_cast<double>(used));
        stats.mse[k] = se / static_cast<double>(used);
    }
    double imse = 0.0;
    bool have_prev = false;
    double prev_t = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
        if (!common_ok[k]) {
            have_prev = false;
            continue;
        }
        if (have_prev) imse += 0.5 * (stats.mse[k] + prev) * (grid[k] - prev_t);
        prev_t = grid[k];
        prev = stats.mse[k];
        have_prev = true;
    }
    stats.imse = imse;
}

} // namespace detail

// Monte Carlo comparison of the first-sample estimator, the plug-in
// estimator with the registered warp, and the oracle estimator with the true
// warp. Per-run seeds derive from (spec.seed, run), so results do not depend
// on the worker count. Runs that fail are dropped and counted; more than 5%
// drops is an error.
inline SimulationReport monte_carlo(const SimSpec& spec, std::size_t runs,
                                    const EstimateConfig& est_cfg,
                                    const RegistrationConfig& reg_cfg, unsigned threads = 0,
                                    std::size_t grid_size = 256) {
    if (runs < 2) throw InvalidArgument("monte_carlo: need at least 2 runs");

    SimulationReport report;
    report.seed = spec.seed;
    report.runs = runs;
    report.grid.resize(grid_size);
    const double span = spec.t_range.length();
    for (std::size_t k = 0; k < grid_size; ++k)
        report.grid[k] =
            spec.t_range.lo + span * static_cast<double>(k + 1) / static_cast<double>(grid_size + 1);

    std::vector<detail::RunCurves> all(runs);
    parallel_for(runs, threads, [&](std::size_t r) {
        auto& out = all[r];
        for (auto& e : out.est) e.assign(grid_size, 0.0);
        for (auto& o : out.ok) o.assign(grid_size, false);
        try {
            rng::Stream stream(rng::derive_seed(spec.seed, r));
            auto [ds1, ds2] = generate_pair(spec, stream);

            auto record = [&](int which, const MeanCurve& c) {
                for (std::size_t k = 0; k < grid_size; ++k) {
                    out.est[which][k] = c.estimate[k];
                    out.ok[which][k] = c.flags[k] == PointFlag::ok;
                }
            };
            record(0, single_sample_nw_at(ds1, est_cfg, report.grid));

            auto reg = register_warp(ds1, ds2, reg_cfg);
            record(1, pooled_nw_at(ds1, &ds2, reg.warp, est_cfg, report.grid));
            record(2, pooled_nw_at(ds1, &ds2, spec.warp, est_cfg, report.grid));
        } catch (const Error&) {
            out.failed = true;
        }
    });

    for (const auto& r : all) report.failed += r.failed;
    if (report.failed * 20 > runs)
        throw ReplicateFailure("monte_carlo: more than 5% of runs failed (" +
                               std::to_string(report.failed) + "/" + std::to_string(runs) + ")");

    report.common_ok.assign(grid_size, true);
    for (std::size_t k = 0; k < grid_size; ++k)
        for (const auto& r : all) {
            if (r.failed) continue;
            for (const auto& o : r.ok)
                if (!o[k]) {
                    report.common_ok[k] = false;
                    break;
                }
        }

    std::vector<double> truth(grid_size);
    for (std::size_t k = 0; k < grid_size; ++k) truth[k] = spec.mean.value(report.grid[k]);

    report.nw_first.name = "nw_first";
    report.plugin.name = "plugin";
    report.oracle.name = "oracle";
    detail::finalize_stats(report.nw_first, all, report.grid, report.common_ok, truth, 0);
    detail::finalize_stats(report.plugin, all, report.grid, report.common_ok, truth, 1);
    detail::finalize_stats(report.oracle, all, report.grid, report.common_ok, truth, 2);
    return report;
}

} // namespace curvepool
