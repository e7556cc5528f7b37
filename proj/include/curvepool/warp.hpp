#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"

namespace curvepool {

// Strictly increasing continuous piecewise-linear time transformation on
// equidistant knots; linear continuation with the boundary slopes outside the
// knot span. Immutable after construction.
class PiecewiseLinearWarp {
public:
    PiecewiseLinearWarp(std::vector<double> knots, std::vector<double> values)
        : knots_(std::move(knots)), values_(std::move(values)) {
        validate();
        step_ = (knots_.back() - knots_.front()) / static_cast<double>(knots_.size() - 1);
    }

    static PiecewiseLinearWarp identity(Interval domain, std::size_t knot_count = 2) {
        auto k = equidistant(domain, knot_count);
        auto v = k;
        return PiecewiseLinearWarp(std::move(k), std::move(v));
    }

    template <class Fn>
    static PiecewiseLinearWarp from_function(Interval domain, std::size_t knot_count, Fn&& fn) {
        auto k = equidistant(domain, knot_count);
        std::vector<double> v(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) v[i] = fn(k[i]);
        return PiecewiseLinearWarp(std::move(k), std::move(v));
    }

    static std::vector<double> equidistant(Interval domain, std::size_t count) {
        if (count < 2) throw InvalidArgument("warp needs at least 2 knots");
        if (!(domain.hi > domain.lo)) throw InvalidArgument("warp domain must have positive length");
        std::vector<double> k(count);
        const double step = domain.length() / static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i) k[i] = domain.lo + step * static_cast<double>(i);
        k.back() = domain.hi;
        return k;
    }

    double operator()(double t) const {
        const std::size_t i = segment_of(t);
        return values_[i] + (values_[i + 1] - values_[i]) * (t - knots_[i]) / step_;
    }

    // exact for piecewise-linear maps; the inverse exists by monotonicity
    double inverse(double x) const {
        std::size_t i;
        if (x <= values_.front())
            i = 0;
        else if (x >= values_.back())
            i = values_.size() - 2;
        else {
            i = static_cast<std::size_t>(
                    std::upper_bound(values_.begin(), values_.end(), x) - values_.begin()) -
                1;
            if (i > values_.size() - 2) i = values_.size() - 2;
        }
        return knots_[i] + (x - values_[i]) * step_ / (values_[i + 1] - values_[i]);
    }

    // segment slope; at a knot, the right-hand slope
    double derivative(double t) const {
        const std::size_t i = segment_of(t);
        return (values_[i + 1] - values_[i]) / step_;
    }

    Interval domain() const { return {knots_.front(), knots_.back()}; }
    Interval range() const { return {values_.front(), values_.back()}; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t knot_count() const { return knots_.size(); }
    double knot_step() const { return step_; }

private:
    std::size_t segment_of(double t) const {
        if (t <= knots_.front()) return 0;
        if (t >= knots_.back()) return knots_.size() - 2;
        auto i = static_cast<std::size_t>((t - knots_.front()) / step_);
        if (i > knots_.size() - 2) i = knots_.size() - 2;
        // guard against rounding in the division
        while (i > 0 && t < knots_[i]) --i;
        while (i < knots_.size() - 2 && t >= knots_[i + 1]) ++i;
        return i;
    }

    void validate() const {
        if (knots_.size() < 2) throw InvalidArgument("warp needs at least 2 knots");
        if (values_.size() != knots_.size())
            throw InvalidArgument("warp knots and values differ in length");
        const double span = knots_.back() - knots_.front();
        if (!(span > 0.0)) throw InvalidArgument("warp knots must ascend");
        const double step = span / static_cast<double>(knots_.size() - 1);
        const double tol = 1e-9 * std::max(std::abs(span), 1.0);
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            const double expected = knots_.front() + step * static_cast<double>(i);
            if (std::abs(knots_[i] - expected) > tol)
                throw InvalidArgument("warp knots are not equidistant");
        }
        for (std::size_t i = 1; i < values_.size(); ++i)
            if (!(values_[i] > values_[i - 1]))
                throw InvalidArgument("warp values must be strictly increasing");
        for (double v : values_)
            if (!std::isfinite(v)) throw NonFiniteValue("warp value not finite");
    }

    std::vector<double> knots_;
    std::vector<double> values_;
    double step_ = 0.0;
};

struct WarpMetric {
    double delta = 0.0;
};

// sup |w1 - w2| over an equidistant grid of at least `grid_points` points on
// the comparison interval; for piecewise-linear arguments every knot of both
// warps is also checked, which makes the sup exact.
template <class Fn1, class Fn2>
WarpMetric sup_distance(const Fn1& w1, const Fn2& w2, Interval interval,
                        std::size_t grid_points = 2048) {
    if (!(interval.hi > interval.lo)) throw InvalidArgument("sup_distance: empty interval");
    if (grid_points < 2) grid_points = 2;
    double best = 0.0;
    const double step = interval.length() / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double t = i + 1 == grid_points ? interval.hi : interval.lo + step * static_cast<double>(i);
        best = std::max(best, std::abs(w1(t) - w2(t)));
    }
    auto visit_knots = [&](const auto& w) {
        if constexpr (std::is_same_v<std::decay_t<decltype(w)>, PiecewiseLinearWarp>) {
            for (double k : w.knots())
                if (interval.contains(k)) best = std::max(best, std::abs(w1(k) - w2(k)));
        }
    };
    visit_knots(w1);
    visit_knots(w2);
    return {best};
}

inline WarpMetric sup_distance(const PiecewiseLinearWarp& w1, const PiecewiseLinearWarp& w2,
                               std::size_t grid_points = 2048) {
    Interval iv{std::min(w1.domain().lo, w2.domain().lo), std::max(w1.domain().hi, w2.domain().hi)};
    return sup_distance(w1, w2, iv, grid_points);
}

inline nlohmann::json warp_to_json(const PiecewiseLinearWarp& w, const std::string& label = "") {
    nlohmann::json j;
    j["domain"] = {w.domain().lo, w.domain().hi};
    j["knots"] = w.knots();
    j["values"] = w.values();
    j["label"] = label;
    return j;
}

// loader re-validates monotonicity via the warp constructor
inline PiecewiseLinearWarp warp_from_json(const nlohmann::json& j) {
    if (!j.contains("knots") || !j.contains("values"))
        throw ParseError("warp json: missing 'knots' or 'values'");
    return PiecewiseLinearWarp(j.at("knots").get<std::vector<double>>(),
                               j.at("values").get<std::vector<double>>());
}

inline void save_warp(const PiecewiseLinearWarp& w, const std::filesystem::path& path,
                      const std::string& label = "") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << warp_to_json(w, label).dump(2) << '\n';
}

inline PiecewiseLinearWarp load_warp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("warp json '" + path.string() + "': " + e.what());
    }
    return warp_from_json(j);
}

} // namespace curvepool
