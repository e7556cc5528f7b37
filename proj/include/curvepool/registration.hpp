#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/estimator.hpp"
#include "curvepool/kernel.hpp"
#include "curvepool/warp.hpp"

namespace curvepool {

struct RegistrationConfig {
    std::size_t knot_count = 30;
    std::size_t rounds = 5;
    std::optional<double> window;            // default: one knot spacing, (d-c)/knot_count
    std::size_t steps = 11;                  // grid points per coefficient, symmetric around current
    double refine = 0.5;                     // window shrink factor per round
    std::optional<double> time_bw;           // h_t; unset => rule bandwidth
    std::optional<double> value_bw;          // h_y; unset => rule bandwidth
    KernelSpec time_kernel = KernelSpec::gaussian();
    KernelSpec value_kernel = KernelSpec::gaussian();
    double min_rel_improvement = 1e-10;      // early stop when a full sweep gains less
    // continuation: the first round smooths the criterion with anneal_start * h_t,
    // later rounds decay the factor geometrically to 1 (1.0 = no annealing)
    double anneal_start = 8.0;
    double anneal_decay = 0.5;
    std::size_t sweeps_per_level = 1;
    // knot values are searched within the first dataset's time support padded
    // by this many knot spacings; beyond it the warp carries no information
    double range_margin = 0.25;
    // midpoint smoothing of plateau knots after the final round: a knot moves
    // to its neighbours' midpoint when the criterion gives up no more than
    // this relative amount (criterion differences this small are noise-level)
    double polish_tolerance = 3e-3;
};

struct RegistrationResult {
    PiecewiseLinearWarp warp;
    std::vector<double> criterion_trace;     // best criterion after each round
    std::size_t evaluations = 0;
    double criterion = 0.0;
    double time_bw = 0.0;
    double value_bw = 0.0;
};

namespace detail {

constexpr double time_mass_floor = 1e-300;

// contribution of one second-sample point at warped position g to the
// criterion sums: a (time kernel x value kernel / h_y) and b (time kernel)
struct PairSums {
    double a = 0.0;
    double b = 0.0;
};

inline PairSums pair_sums(const std::vector<double>& t1, const std::vector<double>& y1, double g,
                          double y2, double ht, double hy, const KernelSpec& k1,
                          const KernelSpec& k2) {
    PairSums s;
    const double radius = k1.reach() * ht;
    const auto lo = std::lower_bound(t1.begin(), t1.end(), g - radius);
    const auto hi = std::upper_bound(t1.begin(), t1.end(), g + radius);
    for (auto it = lo; it != hi; ++it) {
        const std::size_t i = static_cast<std::size_t>(it - t1.begin());
        const double w1 = kernel_eval(k1, (t1[i] - g) / ht);
        s.a += w1 * kernel_eval(k2, (y1[i] - y2) / hy) / hy;
        s.b += w1;
    }
    return s;
}

} // namespace detail

// Kernel-matched registration criterion: the ratio of the double sum with
// both time and value kernels to the double sum with the time kernel alone,
// at warped second-sample times.
template <class WarpFn>
double km_criterion(const FunctionalDataset& ds1, const FunctionalDataset& ds2, const WarpFn& warp,
                    double time_bw, double value_bw, const KernelSpec& k1 = KernelSpec::gaussian(),
                    const KernelSpec& k2 = KernelSpec::gaussian()) {
    if (!(time_bw > 0.0) || !(value_bw > 0.0))
        throw InvalidArgument("km_criterion: bandwidths must be positive");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < ds2.size(); ++j) {
        const auto s = detail::pair_sums(ds1.times(), ds1.values(), warp(ds2.times()[j]),
                                         ds2.values()[j], time_bw, value_bw, k1, k2);
        num += s.a;
        den += s.b;
    }
    if (den < detail::time_mass_floor)
        throw ZeroTimeMass("km_criterion: time-kernel mass below 1e-300; warp is inadmissible");
    return num / den;
}

namespace detail {

class SweepState {
public:
    SweepState(const FunctionalDataset& ds1, const FunctionalDataset& ds2,
               const RegistrationConfig& cfg, double ht, double hy)
        : t1_(ds1.times()),
          y1_(ds1.values()),
          s2_(ds2.times()),
          y2_(ds2.values()),
          cfg_(cfg),
          ht_(ht),
          hy_(hy) {
        knots_ = PiecewiseLinearWarp::equidistant(ds2.time_support(),
                                                  std::max<std::size_t>(cfg.knot_count, 2));
        values_ = knots_; // identity start
        step_ = (knots_.back() - knots_.front()) / static_cast<double>(knots_.size() - 1);
        value_lo_ = ds1.time_support().lo - cfg.range_margin * step_;
        value_hi_ = ds1.time_support().hi + cfg.range_margin * step_;
        a_.resize(s2_.size());
        b_.resize(s2_.size());
        refresh();
        if (den_ < time_mass_floor)
            throw ZeroTimeMass("registration: time-kernel mass below 1e-300 at the identity start");
    }

    void set_time_bandwidth(double ht) {
        ht_ = ht;
        refresh();
    }

    double criterion() const { return num_ / den_; }
    std::size_t evaluations() const { return evaluations_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

    // one left-to-right pass over the knots with the given search window
    void sweep(double window) {
        for (std::size_t k = 0; k < knots_.size(); ++k) update_knot(k, window);
    }

    // plateau smoothing: move each interior knot to its neighbours' midpoint
    // wherever that costs at most `tolerance` relative criterion. Flat
    // stretches of the criterion leave single-knot spikes behind; within the
    // tolerance band the midpoint is as good a maximizer and stays closest
    // to the smooth warps the space approximates.
    void polish(double tolerance) {
        for (std::size_t pass = 0; pass < 2; ++pass) {
            bool changed = false;
            for (std::size_t k = 1; k + 1 < knots_.size(); ++k) {
                const double mid = 0.5 * (values_[k - 1] + values_[k + 1]);
                if (mid == values_[k]) continue;
                const double score = try_value(k, mid);
                if (std::isnan(score)) continue;
                const double current = num_ / den_;
                if (score >= current - tolerance * std::abs(current)) {
                    apply_value(k, mid);
                    changed = true;
                }
            }
            if (!changed) break;
        }
    }

private:
    // criterion value with values_[k] replaced by v, or NaN when v is
    // inadmissible (mass floor); state is untouched
    double try_value(std::size_t k, double v) {
        const double seg_lo = knots_[k == 0 ? 0 : k - 1];
        const double seg_hi = knots_[std::min(k + 1, knots_.size() - 1)];
        const std::size_t j_lo = static_cast<std::size_t>(
            std::lower_bound(s2_.begin(), s2_.end(), seg_lo) - s2_.begin());
        const std::size_t j_hi = static_cast<std::size_t>(
            std::upper_bound(s2_.begin(), s2_.end(), seg_hi) - s2_.begin());
        double base_a = 0.0, base_b = 0.0, new_a = 0.0, new_b = 0.0;
        std::vector<double> cand_values = values_;
        cand_values[k] = v;
        for (std::size_t j = j_lo; j < j_hi; ++j) {
            base_a += a_[j];
            base_b += b_[j];
            const auto s = pair_sums(t1_, y1_, warp_eval(cand_values, s2_[j]), y2_[j], ht_, hy_,
                                     cfg_.time_kernel, cfg_.value_kernel);
            new_a += s.a;
            new_b += s.b;
        }
        ++evaluations_;
        const double cand_den = den_ - base_b + new_b;
        if (cand_den < time_mass_floor) return std::numeric_limits<double>::quiet_NaN();
        return (num_ - base_a + new_a) / cand_den;
    }

    void apply_value(std::size_t k, double v) {
        const double seg_lo = knots_[k == 0 ? 0 : k - 1];
        const double seg_hi = knots_[std::min(k + 1, knots_.size() - 1)];
        const std::size_t j_lo = static_cast<std::size_t>(
            std::lower_bound(s2_.begin(), s2_.end(), seg_lo) - s2_.begin());
        const std::size_t j_hi = static_cast<std::size_t>(
            std::upper_bound(s2_.begin(), s2_.end(), seg_hi) - s2_.begin());
        values_[k] = v;
        for (std::size_t j = j_lo; j < j_hi; ++j) {
            num_ -= a_[j];
            den_ -= b_[j];
            const auto s = pair_sums(t1_, y1_, warp_eval(values_, s2_[j]), y2_[j], ht_, hy_,
                                     cfg_.time_kernel, cfg_.value_kernel);
            a_[j] = s.a;
            b_[j] = s.b;
            num_ += s.a;
            den_ += s.b;
        }
    }

    void refresh() {
        num_ = 0.0;
        den_ = 0.0;
        for (std::size_t j = 0; j < s2_.size(); ++j) {
            const auto s = pair_sums(t1_, y1_, warp_eval(values_, s2_[j]), y2_[j], ht_, hy_,
                                     cfg_.time_kernel, cfg_.value_kernel);
            a_[j] = s.a;
            b_[j] = s.b;
            num_ += s.a;
            den_ += s.b;
        }
        ++evaluations_;
    }

    double warp_eval(const std::vector<double>& vals, double t) const {
        std::size_t i;
        if (t <= knots_.front())
            i = 0;
        else if (t >= knots_.back())
            i = knots_.size() - 2;
        else {
            i = static_cast<std::size_t>((t - knots_.front()) / step_);
            if (i > knots_.size() - 2) i = knots_.size() - 2;
            while (i > 0 && t < knots_[i]) --i;
            while (i < knots_.size() - 2 && t >= knots_[i + 1]) ++i;
        }
        return vals[i] + (vals[i + 1] - vals[i]) * (t - knots_[i]) / step_;
    }

    void update_knot(std::size_t k, double window) {
        // second-sample points whose warped position depends on values_[k]
        const double seg_lo = knots_[k == 0 ? 0 : k - 1];
        const double seg_hi = knots_[std::min(k + 1, knots_.size() - 1)];
        const std::size_t j_lo = static_cast<std::size_t>(
            std::lower_bound(s2_.begin(), s2_.end(), seg_lo) - s2_.begin());
        const std::size_t j_hi = static_cast<std::size_t>(
            std::upper_bound(s2_.begin(), s2_.end(), seg_hi) - s2_.begin());

        double base_a = 0.0, base_b = 0.0;
        for (std::size_t j = j_lo; j < j_hi; ++j) {
            base_a += a_[j];
            base_b += b_[j];
        }

        const double current = values_[k];
        const double current_score = num_ / den_;
        bool any_admissible = false;
        bool improved = false;
        double best_v = current, best_score = current_score;
        double best_num = num_, best_den = den_;

        std::vector<double> cand_values = values_;
        for (std::size_t c = 0; c < cfg_.steps; ++c) {
            // (2c - (steps-1)) is integral, so the middle of an odd grid is
            // exactly zero and the current value is always a candidate
            const double offset =
                cfg_.steps == 1
                    ? 0.0
                    : window * (2.0 * static_cast<double>(c) -
                                static_cast<double>(cfg_.steps - 1)) /
                          static_cast<double>(cfg_.steps - 1);
            const double v = current + offset;
            if (k > 0 && !(v > values_[k - 1])) continue;
            if (k + 1 < values_.size() && !(v < values_[k + 1])) continue;
            if ((v < value_lo_ || v > value_hi_) && v != current) continue;
            any_admissible = true;
            if (v == current) continue; // no change; score is current_score

            cand_values[k] = v;
            double new_a = 0.0, new_b = 0.0;
            for (std::size_t j = j_lo; j < j_hi; ++j) {
                const auto s = pair_sums(t1_, y1_, warp_eval(cand_values, s2_[j]), y2_[j], ht_,
                                         hy_, cfg_.time_kernel, cfg_.value_kernel);
                new_a += s.a;
                new_b += s.b;
            }
            ++evaluations_;
            const double cand_num = num_ - base_a + new_a;
            const double cand_den = den_ - base_b + new_b;
            if (cand_den < time_mass_floor) continue;
            const double score = cand_num / cand_den;
            if (score > best_score) {
                best_score = score;
                best_v = v;
                best_num = cand_num;
                best_den = cand_den;
                improved = true;
            }
        }

        if (!any_admissible)
            throw NoAdmissibleCandidate("registration: no admissible candidate for knot " +
                                        std::to_string(k) + " (search window too large?)");
        if (!improved) return;

        values_[k] = best_v;
        for (std::size_t j = j_lo; j < j_hi; ++j) {
            const auto s = pair_sums(t1_, y1_, warp_eval(values_, s2_[j]), y2_[j], ht_, hy_,
                                     cfg_.time_kernel, cfg_.value_kernel);
            a_[j] = s.a;
            b_[j] = s.b;
        }
        num_ = best_num;
        den_ = best_den;
    }

    const std::vector<double>& t1_;
    const std::vector<double>& y1_;
    const std::vector<double>& s2_;
    const std::vector<double>& y2_;
    const RegistrationConfig& cfg_;
    double ht_, hy_;
    std::vector<double> knots_, values_;
    double step_ = 0.0;
    double value_lo_ = 0.0, value_hi_ = 0.0;
    std::vector<double> a_, b_;
    double num_ = 0.0, den_ = 0.0;
    std::size_t evaluations_ = 0;
};

} // namespace detail

// Maximizes the kernel-matched criterion over the monotone piecewise-linear
// warps by multiple rounds of sequential grid search of the knot values in
// left-to-right order, starting from the identity map. Candidates that break
// strict monotonicity are skipped; each round shrinks the search window.
inline RegistrationResult register_warp(const FunctionalDataset& ds1, const FunctionalDataset& ds2,
                                        const RegistrationConfig& cfg = {}) {
    if (ds1.size() < 2 || ds2.size() < 2)
        throw InsufficientPoints("registration needs at least 2 points per dataset");
    if (cfg.rounds < 1) throw InvalidArgument("registration: rounds must be >= 1");
    if (!(cfg.refine > 0.0 && cfg.refine < 1.0))
        throw InvalidArgument("registration: refinement factor must lie in (0,1)");
    if (cfg.window && !(*cfg.window > 0.0))
        throw InvalidArgument("registration: window must be positive");

    double ht, hy;
    if (cfg.time_bw && cfg.value_bw) {
        ht = *cfg.time_bw;
        hy = *cfg.value_bw;
    } else {
        const auto rule = rule_bandwidths(ds1, ds2);
        ht = cfg.time_bw.value_or(rule.time_bw);
        hy = cfg.value_bw.value_or(rule.value_bw);
    }
    if (!(ht > 0.0) || !(hy > 0.0))
        throw InvalidArgument("registration: bandwidths must be positive");

    const double span = ds2.time_support().length();
    const double window0 = cfg.window.value_or(span / static_cast<double>(cfg.knot_count));

    // warm-up sweeps at coarsened time bandwidths pull the warp into the
    // right basin before the rule-bandwidth rounds refine it
    detail::SweepState state(ds1, ds2, cfg, ht * std::max(cfg.anneal_start, 1.0), hy);
    for (double mult = cfg.anneal_start; mult > 1.0 + 1e-12; mult *= cfg.anneal_decay) {
        for (std::size_t s = 0; s < cfg.sweeps_per_level; ++s) state.sweep(window0);
        state.set_time_bandwidth(ht * std::max(cfg.anneal_decay * mult, 1.0));
    }

    double window = window0;
    std::vector<double> trace;
    trace.reserve(cfg.rounds);
    double prev = state.criterion();
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        state.sweep(window);
        const double now = state.criterion();
        trace.push_back(now);
        window *= cfg.refine;
        if (now - prev < cfg.min_rel_improvement * std::max(1.0, std::abs(prev))) break;
        prev = now;
    }
    if (cfg.polish_tolerance > 0.0) state.polish(cfg.polish_tolerance);

    RegistrationResult result{PiecewiseLinearWarp(state.knots(), state.values()),
                              std::move(trace),
                              state.evaluations(),
                              state.criterion(),
                              ht,
                              hy};
    return result;
}

// registration followed by the pooled estimator with the estimated warp
inline std::pair<RegistrationResult, MeanCurve> plugin_estimate(const FunctionalDataset& ds1,
                                                                const FunctionalDataset& ds2,
                                                                const RegistrationConfig& reg_cfg,
                                                                const EstimateConfig& est_cfg) {
    auto reg = register_warp(ds1, ds2, reg_cfg);
    auto curve = pooled_nw(ds1, &ds2, reg.warp, est_cfg);
    return {std::move(reg), std::move(curve)};
}

} // namespace curvepool
