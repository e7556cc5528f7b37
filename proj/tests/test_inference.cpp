#include <catch2/catch.hpp>

#include <cmath>

#include "curvepool/inference.hpp"
#include "curvepool/rng.hpp"
#include "curvepool/simulate.hpp"

using namespace curvepool;

namespace {

struct Fitted {
    FunctionalDataset ds1;
    FunctionalDataset ds2;
    RegistrationResult reg;
    MeanCurve curve;
};

Fitted small_fit(std::uint64_t seed, std::size_t n = 60) {
    SimSpec spec;
    spec.n1 = n;
    spec.n2 = n;
    spec.seed = seed;
    rng::Stream stream(seed);
    auto [a, b] = generate_pair(spec, stream);
    RegistrationConfig reg_cfg;
    reg_cfg.knot_count = 6;
    reg_cfg.rounds = 2;
    EstimateConfig est_cfg;
    est_cfg.bandwidth = 15.0;
    est_cfg.grid_size = 48;
    auto reg = register_warp(a, b, reg_cfg);
    auto curve = pooled_nw(a, &b, reg.warp, est_cfg);
    return {std::move(a), std::move(b), std::move(reg), std::move(curve)};
}

RegistrationConfig small_reg_cfg() {
    RegistrationConfig cfg;
    cfg.knot_count = 6;
    cfg.rounds = 2;
    return cfg;
}

EstimateConfig small_est_cfg() {
    EstimateConfig cfg;
    cfg.bandwidth = 15.0;
    cfg.grid_size = 48;
    return cfg;
}

} // namespace

TEST_CASE("bootstrap with a fixed seed is reproducible and thread-independent") {
    const auto fit = small_fit(11);
    const auto run = [&](unsigned threads) {
        return bootstrap(fit.ds1, fit.ds2, fit.reg, fit.curve, 8, 0.10, 321, small_reg_cfg(),
                         small_est_cfg(), {}, threads);
    };
    const auto s1 = run(1);
    const auto s2 = run(2);
    const auto s3 = run(1);
    REQUIRE(s1.grid.size() == s2.grid.size());
    for (std::size_t k = 0; k < s1.grid.size(); ++k) {
        if (std::isnan(s1.se[k])) {
            CHECK(std::isnan(s2.se[k]));
            continue;
        }
        CHECK(s1.se[k] == s2.se[k]);
        CHECK(s1.se[k] == s3.se[k]);
        CHECK(s1.ci_lo[k] == s2.ci_lo[k]);
        CHECK(s1.ci_hi[k] == s2.ci_hi[k]);
        CHECK(s1.band_lo[k] == s2.band_lo[k]);
        CHECK(s1.band_hi[k] == s2.band_hi[k]);
    }
}

TEST_CASE("bootstrap summary invariants") {
    const auto fit = small_fit(17);
    const auto s = bootstrap(fit.ds1, fit.ds2, fit.reg, fit.curve, 16, 0.10, 99, small_reg_cfg(),
                             small_est_cfg());
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        if (std::isnan(s.se[k])) continue;
        CHECK(s.se[k] >= 0.0);
        CHECK(s.ci_lo[k] <= s.ci_hi[k]);
        if (!std::isnan(s.band_lo[k])) {
            CHECK(s.band_lo[k] <= s.ci_lo[k]);
            CHECK(s.band_hi[k] >= s.ci_hi[k]);
        }
    }
    CHECK(s.replicates_used + s.replicates_failed == 16);
}

TEST_CASE("degenerate resampling: zero residuals and fixed times give zero se") {
    // constant data: the fit reproduces the constant, so residuals vanish
    // (to rounding) and the replicate curves collapse onto the fit
    rng::Stream stream(23);
    std::vector<double> t1(50), y1(50, 42.0), t2(50), y2(50, 42.0);
    for (auto& t : t1) t = stream.uniform(0.0, 100.0);
    for (auto& t : t2) t = stream.uniform(0.0, 100.0);
    const FunctionalDataset a("a", t1, y1);
    const FunctionalDataset b("b", t2, y2);

    RegistrationConfig reg_cfg = small_reg_cfg();
    reg_cfg.time_bw = 2.0;  // the rule bandwidths are undefined on a flat y-range
    reg_cfg.value_bw = 1.0;
    EstimateConfig est_cfg = small_est_cfg();
    auto reg = register_warp(a, b, reg_cfg);
    auto curve = pooled_nw(a, &b, reg.warp, est_cfg);

    BootstrapOptions opts;
    opts.resample_times = false;
    opts.reestimate_warp = false;
    opts.reselect_bandwidth = false;

    const auto s = bootstrap(a, b, reg, curve, 6, 0.10, 7, reg_cfg, est_cfg, opts);
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        if (std::isnan(s.se[k])) continue;
        CHECK(s.se[k] <= 1e-10 * std::abs(s.estimate[k]));
    }

    // with registration re-enabled on identical data the warp search is
    // deterministic, so the replicates still coincide
    opts.reestimate_warp = true;
    const auto s2 = bootstrap(a, b, reg, curve, 6, 0.10, 7, reg_cfg, est_cfg, opts);
    for (std::size_t k = 0; k < s2.grid.size(); ++k) {
        if (std::isnan(s2.se[k])) continue;
        CHECK(s2.se[k] <= 1e-10 * std::abs(s2.estimate[k]));
    }
}

TEST_CASE("cv: fast mode equals exact mode when deletions cannot move the warp") {
    // datasets identical => the registered warp is the identity fixed point
    // of the sweep; deleting one point keeps the spacing dense enough that
    // the grid search returns the same warp, making fast == exact
    std::vector<double> t, y;
    for (int i = 0; i < 20; ++i) {
        t.push_back(0.5 * i);
        y.push_back(std::sin(0.5 * i));
    }
    const FunctionalDataset a("a", t, y);
    const FunctionalDataset b("b", t, y);
    RegistrationConfig reg_cfg;
    reg_cfg.knot_count = 4;
    reg_cfg.rounds = 1;
    reg_cfg.steps = 3;
    EstimateConfig est_cfg;
    est_cfg.bandwidth = 1.0;

    const auto fast = cv_usefulness(a, b, reg_cfg, est_cfg, CvMode::fast);
    const auto exact = cv_usefulness(a, b, reg_cfg, est_cfg, CvMode::exact);
    CHECK(fast.cv_first_only == Approx(exact.cv_first_only).margin(1e-12));
    CHECK(fast.cv_pooled == Approx(exact.cv_pooled).margin(1e-9));
    CHECK(fast.deletions == exact.deletions);
}

TEST_CASE("cv on a compatible pair prefers pooling; an incompatible shift flips it") {
    std::size_t useful = 0, harmful = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        SimSpec spec;
        spec.n1 = 200;
        spec.n2 = 200;
        spec.seed = 4000 + s;
        rng::Stream stream(spec.seed);
        auto [a, b] = generate_pair(spec, stream);

        const auto compatible = cv_usefulness(a, b, {}, {}, CvMode::fast, 0, 2);
        useful += compatible.cv_pooled < compatible.cv_first_only;

        // shift the second sample by 3 noise SDs (the generator's recipe):
        // pooling should now hurt
        std::vector<double> mvals(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) mvals[i] = spec.mean.value(a.times()[i]);
        double sd = 0.0, mean = 0.0;
        for (double v : mvals) mean += v;
        mean /= static_cast<double>(mvals.size());
        for (double v : mvals) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / static_cast<double>(mvals.size() - 1));
        const double noise_sd = spec.noise_frac * sd;
        std::vector<double> shifted(b.values());
        for (auto& v : shifted) v += 3.0 * noise_sd;
        const FunctionalDataset b_shift("shift", b.times(), shifted);
        const auto broken = cv_usefulness(a, b_shift, {}, {}, CvMode::fast, 0, 2);
        harmful += broken.cv_pooled > broken.cv_first_only;
    }
    CHECK(useful >= 16);  // >= 80% of seeds
    CHECK(harmful >= 16);
}

TEST_CASE("cv reports cover the identical first-scale deletion set") {
    const auto fit = small_fit(77);
    const auto r = cv_usefulness(fit.ds1, fit.ds2, small_reg_cfg(), small_est_cfg(),
                                 CvMode::fast);
    CHECK(r.deletions == fit.ds1.size() + fit.ds2.size());
    CHECK(r.cv_first_only >= 0.0);
    CHECK(r.cv_pooled >= 0.0);
    CHECK(r.cv_pooled_first_scale >= 0.0);
    CHECK(r.pooling_useful == (r.cv_pooled < r.cv_first_only));
}

TEST_CASE("cv max deletions caps the processed set") {
    const auto fit = small_fit(78);
    const auto r = cv_usefulness(fit.ds1, fit.ds2, small_reg_cfg(), small_est_cfg(), CvMode::fast,
                                 20);
    CHECK(r.deletions == 20);
}

TEST_CASE("table 2 qualitative verdicts reproduce when the ice-core files are present") {
    const char* dir = std::getenv("CURVEPOOL_DATA_DIR");
    if (!dir) {
        WARN("CURVEPOOL_DATA_DIR not set; skipping Table 2 checks");
        return;
    }
    namespace fs = std::filesystem;
    const fs::path ec = fs::path(dir) / "co2_epica.csv";
    const fs::path vc = fs::path(dir) / "co2_vostok.csv";
    if (!fs::exists(ec) || !fs::exists(vc)) {
        WARN("ice-core CSVs not found; skipping");
        return;
    }
    const auto epica = load_dataset(ec);
    const auto vostok = load_dataset(vc);
    const auto r = cv_usefulness(epica, vostok, {}, {}, CvMode::fast, 0, 0);
    CHECK(r.pooling_useful); // CO2: pooling helps (38.2 -> 18.1 in the reference analysis)
    CHECK(r.cv_first_only == Approx(38.2).epsilon(0.25));
    CHECK(r.cv_pooled == Approx(18.1).epsilon(0.25));
}
