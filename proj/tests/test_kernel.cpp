#include <catch2/catch.hpp>

#include <cmath>

#include "curvepool/dataset.hpp"
#include "curvepool/kernel.hpp"
#include "curvepool/rng.hpp"

using namespace curvepool;

TEST_CASE("gaussian kernel values") {
    const auto k = KernelSpec::gaussian();
    CHECK(kernel_eval(k, 0.0) == Approx(0.3989422804014327).epsilon(1e-14));
    // exp(-1/2)/sqrt(2 pi), recomputed independently
    CHECK(kernel_eval(k, 1.0) == Approx(std::exp(-0.5) / std::sqrt(2.0 * 3.14159265358979323846))
                                     .epsilon(1e-14));
}

TEST_CASE("truncated kernel vanishes beyond the cutoff") {
    const auto k = KernelSpec::truncated(8.0);
    CHECK(kernel_eval(k, 9.0) == 0.0);
    CHECK(kernel_eval(k, -8.5) == 0.0);
    CHECK(kernel_eval(k, 7.9) > 0.0);
}

TEST_CASE("kernel symmetry on random arguments") {
    rng::Stream stream(42);
    const auto g = KernelSpec::gaussian();
    const auto t = KernelSpec::truncated(3.0);
    for (int i = 0; i < 1000; ++i) {
        const double u = stream.uniform(-20.0, 20.0);
        CHECK(kernel_eval(g, u) == kernel_eval(g, -u));
        CHECK(kernel_eval(t, u) == kernel_eval(t, -u));
    }
}

TEST_CASE("gaussian integrates to one") {
    // Simpson's rule on [-10, 10]
    const auto k = KernelSpec::gaussian();
    const int n = 2000;
    const double a = -10.0, b = 10.0, h = (b - a) / n;
    double acc = kernel_eval(k, a) + kernel_eval(k, b);
    for (int i = 1; i < n; ++i) acc += kernel_eval(k, a + i * h) * (i % 2 ? 4.0 : 2.0);
    acc *= h / 3.0;
    CHECK(acc == Approx(1.0).margin(1e-6));
}

TEST_CASE("kernel constants match quadrature") {
    for (const auto& k : {KernelSpec::gaussian(), KernelSpec::truncated(8.0),
                          KernelSpec::truncated(1.5)}) {
        const auto kc = kernel_constants(k);
        const double lim = k.truncated_family() ? k.cutoff : 12.0;
        const int n = 4000;
        const double h = 2.0 * lim / n;
        double l2 = 0.0, mu2 = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double u = -lim + i * h;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double kv = kernel_eval(k, u);
            l2 += w * kv * kv;
            mu2 += w * u * u * kv;
        }
        l2 *= h / 3.0;
        mu2 *= h / 3.0;
        CHECK(kc.l2_norm_sq == Approx(l2).margin(1e-8));
        CHECK(kc.second_moment == Approx(mu2).margin(1e-6));
    }
    CHECK(kernel_constants(KernelSpec::gaussian()).l2_norm_sq == Approx(0.28209479177387814));
    CHECK(kernel_constants(KernelSpec::gaussian()).second_moment == 1.0);
}

TEST_CASE("rule bandwidths follow the half-gap and 10% range rules") {
    const FunctionalDataset sparse("sparse", {0.0, 2.0, 4.0, 6.0}, {183.8, 200.0, 250.0, 298.6});
    const FunctionalDataset dense("dense", {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0,
                                            5.5, 6.0},
                                  {182.2, 190, 200, 210, 220, 230, 240, 250, 260, 270, 280, 290,
                                   298.7});
    const auto bw = rule_bandwidths(dense, sparse);
    CHECK(bw.time_bw == Approx(1.0));
    // 0.1 * (298.7 - 182.2), arithmetic on the two ranges
    CHECK(bw.value_bw == Approx(11.65).epsilon(1e-12));
}

TEST_CASE("degenerate combined y-range is an error") {
    const FunctionalDataset a("a", {0.0}, {5.0});
    const FunctionalDataset b("b", {1.0}, {5.0});
    CHECK_THROWS_AS(rule_bandwidths(a, b), DegenerateRange);
}

TEST_CASE("lesser-dense singleton is an error") {
    const FunctionalDataset a("a", {0.0, 1.0, 2.0}, {1.0, 2.0, 3.0});
    const FunctionalDataset b("b", {0.5}, {9.0});
    CHECK_THROWS_AS(rule_bandwidths(a, b), InsufficientPoints);
}

TEST_CASE("loocv picks the largest bandwidth on constant data") {
    std::vector<double> t, y;
    for (int i = 0; i < 30; ++i) {
        t.push_back(0.1 * i);
        y.push_back(4.2);
    }
    const double h = select_bandwidth_loocv(t, y, {0.5, 1.0, 2.0}, KernelSpec::gaussian());
    CHECK(h == 2.0);
}

TEST_CASE("loocv singleton grid returns that bandwidth") {
    std::vector<double> t{0.0, 1.0, 2.0}, y{0.0, 1.0, 0.0};
    CHECK(select_bandwidth_loocv(t, y, {0.7}, KernelSpec::gaussian()) == 0.7);
}

TEST_CASE("loocv matches a brute-force oracle on sin data") {
    rng::Stream stream(2024);
    std::vector<double> t(200), y(200);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = stream.uniform(0.0, 6.283185307179586);
        y[i] = std::sin(t[i]) + 0.2 * stream.gaussian();
    }
    std::vector<double> grid(10);
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid[g] = 0.05 * std::pow(40.0, static_cast<double>(g) / 9.0); // 0.05 .. 2.0

    const auto kernel = KernelSpec::gaussian();
    const double chosen = select_bandwidth_loocv(t, y, grid, kernel);

    // independent O(n^2) CV curve
    double best = 0.0, best_score = 1e300;
    for (double h : grid) {
        double score = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < t.size(); ++j) {
                if (j == i) continue;
                const double w = kernel_eval(kernel, (t[i] - t[j]) / h);
                num += w * y[j];
                den += w;
            }
            const double e = y[i] - num / den;
            score += e * e;
        }
        if (score < best_score) {
            best_score = score;
            best = h;
        }
    }
    CHECK(chosen == best);
}

TEST_CASE("loocv under a hard truncation can leave points uncovered") {
    // isolated point far from the others: every tiny candidate fails
    std::vector<double> t{0.0, 0.01, 0.02, 100.0}, y{1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_AS(select_bandwidth_loocv(t, y, {0.005, 0.01}, KernelSpec::truncated(2.0)),
                    AllPredictionsUndefined);
}

TEST_CASE("loocv output is a member of the grid") {
    rng::Stream stream(5);
    std::vector<double> t(50), y(50);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = stream.uniform(0.0, 1.0);
        y[i] = t[i] * t[i] + 0.05 * stream.gaussian();
    }
    const auto grid = default_loocv_grid(t);
    const double h = select_bandwidth_loocv(t, y, grid, KernelSpec::truncated(8.0));
    CHECK(std::count(grid.begin(), grid.end(), h) == 1);
}

TEST_CASE("kde sampling: empty draw, moments, and determinism") {
    rng::Stream s0(11);
    const auto d = kde_fit(std::vector<double>{0.0}, KernelSpec::gaussian(), 1.0);
    CHECK(kde_sample(d, s0, 0).empty());

    rng::Stream s1(11);
    const std::size_t n = 40000;
    const auto draws = kde_sample(d, s1, n);
    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : draws) var += (v - mean) * (v - mean);
    var /= n;
    const double tol = 3.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean) < tol);
    CHECK(std::abs(std::sqrt(var) - 1.0) < tol);

    rng::Stream s2(11);
    CHECK(kde_sample(d, s2, 0).empty());
    const auto again = kde_sample(d, s2, n);
    REQUIRE(again.size() == draws.size());
    for (std::size_t i = 0; i < n; ++i) CHECK(again[i] == draws[i]);
}

TEST_CASE("kde bandwidth follows the Silverman-type rule") {
    std::vector<double> sample{1.0, 2.0, 3.0, 4.0, 5.0};
    const auto d = kde_fit(sample, KernelSpec::gaussian());
    const double sd = std::sqrt(2.5); // sample variance of 1..5
    CHECK(d.bandwidth == Approx(1.06 * sd * std::pow(5.0, -0.2)).epsilon(1e-14));

    // spread-free sample degnerates to zero bandwidth: resampling is exact
    const auto flat = kde_fit(std::vector<double>{2.0, 2.0, 2.0}, KernelSpec::gaussian());
    CHECK(flat.bandwidth == 0.0);
    rng::Stream s(3);
    for (double v : kde_sample(flat, s, 10)) CHECK(v == 2.0);
}
