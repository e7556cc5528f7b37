#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>

#include "curvepool/rng.hpp"
#include "curvepool/simulate.hpp"
#include "curvepool/warp.hpp"

using namespace curvepool;

namespace {

PiecewiseLinearWarp random_warp(rng::Stream& stream, std::size_t knots = 12) {
    const double lo = stream.uniform(-5.0, 0.0);
    const double hi = lo + stream.uniform(1.0, 10.0);
    auto k = PiecewiseLinearWarp::equidistant({lo, hi}, knots);
    std::vector<double> v(knots);
    double acc = stream.uniform(-3.0, 3.0);
    for (std::size_t i = 0; i < knots; ++i) {
        acc += stream.uniform(0.05, 1.5);
        v[i] = acc;
    }
    return PiecewiseLinearWarp(std::move(k), std::move(v));
}

} // namespace

TEST_CASE("warp evaluation: identity, interpolation, extrapolation") {
    const auto id = PiecewiseLinearWarp::identity({0.0, 10.0}, 5);
    CHECK(id(3.7) == Approx(3.7).margin(1e-12));
    CHECK(id(-2.0) == Approx(-2.0).margin(1e-12));

    const PiecewiseLinearWarp w({0.0, 1.0}, {0.0, 2.0});
    CHECK(w(0.5) == Approx(1.0).margin(0));
    CHECK(w(2.0) == Approx(4.0).margin(0)); // boundary-slope extrapolation
}

TEST_CASE("warp inverse: closed form and identity") {
    const PiecewiseLinearWarp w({0.0, 1.0}, {0.0, 2.0});
    CHECK(w.inverse(1.0) == Approx(0.5).margin(0));
    const auto id = PiecewiseLinearWarp::identity({0.0, 10.0}, 3);
    CHECK(id.inverse(3.7) == Approx(3.7).margin(1e-12));
}

TEST_CASE("warp round trip on random monotone warps") {
    rng::Stream stream(314);
    for (int rep = 0; rep < 100; ++rep) {
        const auto w = random_warp(stream);
        for (int i = 0; i < 100; ++i) {
            const double x = stream.uniform(w.range().lo, w.range().hi);
            CHECK(std::abs(w(w.inverse(x)) - x) <= 1e-10);
            const double t = stream.uniform(w.domain().lo, w.domain().hi);
            CHECK(std::abs(w.inverse(w(t)) - t) <= 1e-10);
        }
    }
}

TEST_CASE("warp derivative: slopes and the inverse-function rule") {
    const auto id = PiecewiseLinearWarp::identity({0.0, 1.0}, 4);
    CHECK(id.derivative(0.3) == Approx(1.0));

    const PiecewiseLinearWarp w2({0.0, 1.0}, {0.0, 2.0});
    CHECK(w2.derivative(0.5) == Approx(2.0));

    rng::Stream stream(2718);
    const auto w = random_warp(stream);
    for (int i = 0; i < 100; ++i) {
        // derivative of the inverse at x equals 1/derivative at inverse(x)
        const double x = stream.uniform(w.range().lo, w.range().hi);
        const double t = w.inverse(x);
        const double eps = 1e-7;
        const double numeric = (w.inverse(x + eps) - w.inverse(x - eps)) / (2.0 * eps);
        CHECK(numeric == Approx(1.0 / w.derivative(t)).epsilon(1e-3));
    }
}

TEST_CASE("monotonicity of outputs on sorted inputs") {
    rng::Stream stream(99);
    const auto w = random_warp(stream);
    double prev_t = w.domain().lo - 1.0;
    double prev_v = w(prev_t);
    for (int i = 0; i < 500; ++i) {
        const double t = prev_t + stream.uniform(1e-3, 0.05);
        const double v = w(t);
        CHECK(v > prev_v);
        prev_t = t;
        prev_v = v;
    }
}

TEST_CASE("sup distance of a warp against itself is zero") {
    rng::Stream stream(1);
    const auto w = random_warp(stream);
    CHECK(sup_distance(w, w).delta == 0.0);
}

TEST_CASE("sup distance against the simulation warp") {
    const auto id = [](double t) { return t; };
    const auto g0 = [](double t) { return true_warp_sim(t); };
    const double delta = sup_distance(id, g0, {0.0, 415.0}, 4096).delta;

    // dense-grid maximization oracle
    double oracle = 0.0, arg = 0.0;
    const int n = 1000000;
    for (int i = 0; i <= n; ++i) {
        const double t = 415.0 * i / n;
        const double d = std::abs(true_warp_sim(t) - t);
        if (d > oracle) {
            oracle = d;
            arg = t;
        }
    }
    CHECK(delta == Approx(oracle).margin(1e-3));
    CHECK(delta == Approx(18.2).margin(0.1));
    CHECK(arg > 360.0);
    CHECK(arg < 372.0);
}

TEST_CASE("piecewise-linear sup distance agrees with brute force") {
    rng::Stream stream(77);
    for (int rep = 0; rep < 5; ++rep) {
        const auto w1 = random_warp(stream, 7);
        const auto w2 = random_warp(stream, 9);
        const Interval iv{std::min(w1.domain().lo, w2.domain().lo),
                          std::max(w1.domain().hi, w2.domain().hi)};
        const double ours = sup_distance(w1, w2, iv, 4096).delta;
        double brute = 0.0;
        const int n = 1000000;
        for (int i = 0; i <= n; ++i) {
            const double t = iv.lo + iv.length() * i / n;
            brute = std::max(brute, std::abs(w1(t) - w2(t)));
        }
        CHECK(ours == Approx(brute).margin(1e-6));
    }
}

TEST_CASE("sup distance is symmetric and satisfies the triangle inequality") {
    rng::Stream stream(31337);
    for (int rep = 0; rep < 20; ++rep) {
        auto k = PiecewiseLinearWarp::equidistant({0.0, 1.0}, 6);
        auto mk = [&] {
            std::vector<double> v(6);
            double acc = stream.uniform(-1.0, 1.0);
            for (auto& x : v) {
                acc += stream.uniform(0.05, 0.6);
                x = acc;
            }
            return PiecewiseLinearWarp(k, v);
        };
        const auto a = mk(), b = mk(), c = mk();
        const Interval iv{0.0, 1.0};
        const double ab = sup_distance(a, b, iv).delta;
        const double ba = sup_distance(b, a, iv).delta;
        const double ac = sup_distance(a, c, iv).delta;
        const double cb = sup_distance(c, b, iv).delta;
        CHECK(ab == Approx(ba).margin(0));
        CHECK(ab <= ac + cb + 1e-12);
    }
}

TEST_CASE("warp json round trip re-validates") {
    rng::Stream stream(55);
    const auto w = random_warp(stream);
    const auto path = std::filesystem::temp_directory_path() / "cp_warp.json";
    save_warp(w, path, "test");
    const auto w2 = load_warp(path);
    REQUIRE(w2.knot_count() == w.knot_count());
    for (std::size_t i = 0; i < w.knot_count(); ++i) {
        CHECK(w2.knots()[i] == w.knots()[i]);
        CHECK(w2.values()[i] == w.values()[i]);
    }

    auto j = warp_to_json(w);
    j["values"][0] = j["values"][2]; // break monotonicity
    CHECK_THROWS_AS(warp_from_json(j), InvalidArgument);

    auto j2 = warp_to_json(w);
    j2["knots"][1] = j2["knots"][1].get<double>() + 0.3; // break equidistance
    CHECK_THROWS_AS(warp_from_json(j2), InvalidArgument);
}

TEST_CASE("non-equidistant knots are rejected") {
    CHECK_THROWS_AS(PiecewiseLinearWarp({0.0, 0.4, 1.0}, {0.0, 0.5, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(PiecewiseLinearWarp({0.0, 0.5, 1.0}, {0.0, 0.5, 0.5}), InvalidArgument);
}
