// Command-line front end: registration, estimation, inference and the
// theory/simulation calculators as reproducible subcommands.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "curvepool/curvepool.hpp"

namespace cp = curvepool;
namespace fs = std::filesystem;

namespace {

std::optional<double> parse_auto(const std::string& text, const std::string& flag) {
    if (text.empty() || text == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw CLI::ValidationError(flag, "expected 'auto' or a number, got '" + text + "'");
    }
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            out.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "bad number '" + field + "'");
        }
    }
    return out;
}

struct ManifestBuilder {
    nlohmann::json j;

    ManifestBuilder(const std::string& command, unsigned threads) {
        j["command"] = command;
        j["version"] = cp::library_version;
        j["threads"] = threads;
        j["inputs"] = nlohmann::json::object();
        j["tuning"] = nlohmann::json::object();
    }
    void input(const std::string& key, const std::string& path) { j["inputs"][key] = path; }
    void seed(std::uint64_t s) { j["seed"] = s; }
    template <class T>
    void tuning(const std::string& key, const T& v) {
        j["tuning"][key] = v;
    }
    void write_for(const fs::path& output) const {
        nlohmann::json full = j;
        full["output"] = output.string();
        cp::write_file_atomic(output.string() + ".manifest.json", full.dump(2) + "\n");
    }
};

struct SharedEstimateFlags {
    std::string hn = "auto";
    std::string hn_grid;
    bool hn_first_only = false;
    std::string kernel = "truncated";
    double cutoff = 8.0;
    std::size_t grid = 512;
    double mass_floor = 1e-12;

    void attach(CLI::App* cmd) {
        cmd->add_option("--hn", hn, "smoothing bandwidth ('auto' = leave-one-out CV)");
        cmd->add_option("--hn-grid", hn_grid, "comma-separated CV bandwidth grid");
        cmd->add_flag("--hn-first-only", hn_first_only, "run bandwidth CV on the first sample only");
        cmd->add_option("--kernel", kernel, "estimation kernel: gaussian | truncated")
            ->check(CLI::IsMember({"gaussian", "truncated"}));
        cmd->add_option("--cutoff", cutoff, "truncation cutoff in bandwidth units");
        cmd->add_option("--grid", grid, "evaluation grid size");
        cmd->add_option("--mass-floor", mass_floor, "minimum kernel mass per grid point");
    }

    cp::EstimateConfig build() const {
        cp::EstimateConfig cfg;
        cfg.bandwidth = parse_auto(hn, "--hn");
        if (!hn_grid.empty()) cfg.loocv_grid = parse_list(hn_grid, "--hn-grid");
        cfg.loocv_first_only = hn_first_only;
        cfg.kernel = kernel == "gaussian" ? cp::KernelSpec::gaussian()
                                          : cp::KernelSpec::truncated(cutoff);
        cfg.grid_size = grid;
        cfg.mass_floor = mass_floor;
        return cfg;
    }

    void record(ManifestBuilder& m) const {
        m.tuning("hn", hn);
        if (!hn_grid.empty()) m.tuning("hn_grid", hn_grid);
        m.tuning("hn_first_only", hn_first_only);
        m.tuning("kernel", kernel);
        m.tuning("cutoff", cutoff);
        m.tuning("grid", grid);
        m.tuning("mass_floor", mass_floor);
    }
};

struct SharedRegisterFlags {
    std::size_t knots = 30;
    std::size_t rounds = 5;
    std::string window = "auto";
    std::size_t steps = 11;
    double refine = 0.5;
    std::string ht = "auto";
    std::string hy = "auto";
    double anneal = 8.0;
    double range_margin = 0.25;
    double polish_tol = 3e-3;

    void attach(CLI::App* cmd) {
        cmd->add_option("--knots", knots, "warp knot count");
        cmd->add_option("--rounds", rounds, "grid-search rounds");
        cmd->add_option("--window", window, "per-knot search window ('auto' = one knot spacing)");
        cmd->add_option("--steps", steps, "candidates per knot");
        cmd->add_option("--refine", refine, "window shrink factor per round");
        cmd->add_option("--ht", ht, "time bandwidth ('auto' = half mean gap rule)");
        cmd->add_option("--hy", hy, "value bandwidth ('auto' = 10% combined range rule)");
        cmd->add_option("--anneal", anneal, "warm-up time-bandwidth factor (1 = off)");
        cmd->add_option("--range-margin", range_margin,
                        "searchable warp range beyond ds1 support, in knot spacings");
        cmd->add_option("--polish-tol", polish_tol,
                        "relative criterion slack for plateau smoothing (0 = off)");
    }

    cp::RegistrationConfig build() const {
        cp::RegistrationConfig cfg;
        cfg.knot_count = knots;
        cfg.rounds = rounds;
        cfg.window = parse_auto(window, "--window");
        cfg.steps = steps;
        cfg.refine = refine;
        cfg.time_bw = parse_auto(ht, "--ht");
        cfg.value_bw = parse_auto(hy, "--hy");
        cfg.anneal_start = anneal;
        cfg.range_margin = range_margin;
        cfg.polish_tolerance = polish_tol;
        return cfg;
    }

    void record(ManifestBuilder& m) const {
        m.tuning("knots", knots);
        m.tuning("rounds", rounds);
        m.tuning("window", window);
        m.tuning("steps", steps);
        m.tuning("refine", refine);
        m.tuning("ht", ht);
        m.tuning("hy", hy);
        m.tuning("anneal", anneal);
        m.tuning("range_margin", range_margin);
        m.tuning("polish_tol", polish_tol);
    }
};

int run(int argc, char** argv) {
    CLI::App app{"curve registration and pooled mean estimation for misaligned series pairs"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may appear after the subcommand
    app.set_config("--config", "", "flat key = value configuration file");

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = all cores)")->configurable(true);

    bool allow_ties = false;
    app.add_flag("--allow-ties", allow_ties,
                 "resolve duplicate time stamps by minimal jitter instead of rejecting");

    auto load = [&](const std::string& path) {
        cp::ParseOptions opt;
        opt.resolve_duplicate_times = allow_ties;
        return cp::load_dataset(path, opt);
    };

    // ---- summarize ----
    auto* cmd_sum = app.add_subcommand("summarize", "descriptive statistics of a dataset");
    std::string sum_input;
    cmd_sum->add_option("--input", sum_input, "input CSV (t,y)")->required();
    cmd_sum->callback([&] {
        const auto ds = load(sum_input);
        const auto s = cp::summarize(ds);
        std::cout << "label: " << ds.label() << "\n"
                  << "size: " << s.size << "\n"
                  << "t_range: [" << cp::format_full(s.t_range.lo) << ", "
                  << cp::format_full(s.t_range.hi) << "]\n"
                  << "y_range: [" << cp::format_full(s.y_range.lo) << ", "
                  << cp::format_full(s.y_range.hi) << "]\n"
                  << "dropped_blank_rows: " << ds.diagnostics().dropped_blank_rows << "\n"
                  << "jittered_times: " << ds.diagnostics().jittered_times << "\n";
    });

    // ---- register ----
    auto* cmd_reg = app.add_subcommand("register", "estimate the warp aligning ds2 onto ds1");
    std::string reg_ds1, reg_ds2, reg_out;
    SharedRegisterFlags reg_flags;
    cmd_reg->add_option("--ds1", reg_ds1, "first dataset CSV")->required();
    cmd_reg->add_option("--ds2", reg_ds2, "second dataset CSV")->required();
    cmd_reg->add_option("--out", reg_out, "output warp JSON")->required();
    reg_flags.attach(cmd_reg);
    cmd_reg->callback([&] {
        const auto ds1 = load(reg_ds1);
        const auto ds2 = load(reg_ds2);
        const auto result = cp::register_warp(ds1, ds2, reg_flags.build());
        cp::write_file_atomic(reg_out,
                              cp::warp_to_json(result.warp, "registered:" + ds2.label() + "->" +
                                                                ds1.label())
                                      .dump(2) +
                                  "\n");
        ManifestBuilder m("register", threads);
        m.input("ds1", reg_ds1);
        m.input("ds2", reg_ds2);
        reg_flags.record(m);
        m.tuning("resolved_ht", result.time_bw);
        m.tuning("resolved_hy", result.value_bw);
        m.write_for(reg_out);
        std::cout << "criterion: " << cp::format_full(result.criterion) << "\n"
                  << "evaluations: " << result.evaluations << "\n"
                  << "rounds_run: " << result.criterion_trace.size() << "\n"
                  << "wrote: " << reg_out << "\n";
    });

    // ---- estimate ----
    auto* cmd_est = app.add_subcommand("estimate", "pooled Nadaraya-Watson mean curve");
    std::string est_ds1, est_ds2, est_warp, est_out;
    bool est_auto = false;
    SharedEstimateFlags est_flags;
    SharedRegisterFlags est_reg_flags;
    cmd_est->add_option("--ds1", est_ds1, "first dataset CSV")->required();
    cmd_est->add_option("--ds2", est_ds2, "second dataset CSV (omit for single-sample)");
    cmd_est->add_option("--warp", est_warp, "warp JSON produced by 'register'");
    cmd_est->add_flag("--auto", est_auto, "register ds2 onto ds1 first");
    cmd_est->add_option("--out", est_out, "output curve CSV")->required();
    est_flags.attach(cmd_est);
    est_reg_flags.attach(cmd_est);
    cmd_est->callback([&] {
        const auto ds1 = load(est_ds1);
        const auto cfg = est_flags.build();
        cp::MeanCurve curve;
        ManifestBuilder m("estimate", threads);
        m.input("ds1", est_ds1);
        est_flags.record(m);
        if (est_ds2.empty()) {
            curve = cp::single_sample_nw(ds1, cfg);
        } else {
            const auto ds2 = load(est_ds2);
            m.input("ds2", est_ds2);
            if (est_auto) {
                auto [reg, c] = cp::plugin_estimate(ds1, ds2, est_reg_flags.build(), cfg);
                est_reg_flags.record(m);
                m.tuning("resolved_ht", reg.time_bw);
                m.tuning("resolved_hy", reg.value_bw);
                curve = std::move(c);
            } else if (!est_warp.empty()) {
                m.input("warp", est_warp);
                curve = cp::pooled_nw(ds1, &ds2, cp::load_warp(est_warp), cfg);
            } else {
                throw CLI::ValidationError("estimate", "--ds2 given: need --warp FILE or --auto");
            }
        }
        m.tuning("resolved_hn", curve.bandwidth);
        cp::write_file_atomic(est_out, cp::csv_of_curve(curve));
        m.write_for(est_out);
        std::cout << "resolved_hn: " << cp::format_full(curve.bandwidth) << "\n"
                  << "ok_points: " << curve.ok_count() << "/" << curve.grid.size() << "\n"
                  << "wrote: " << est_out << "\n";
    });

    // ---- bootstrap ----
    auto* cmd_boot = app.add_subcommand("bootstrap", "model-based bootstrap bands for the curve");
    std::string boot_ds1, boot_ds2, boot_out;
    std::size_t boot_B = 1000;
    double boot_alpha = 0.05;
    std::uint64_t boot_seed = 0;
    bool boot_fixed_times = false, boot_freeze_warp = false, boot_freeze_bw = false;
    SharedEstimateFlags boot_est_flags;
    SharedRegisterFlags boot_reg_flags;
    cmd_boot->add_option("--ds1", boot_ds1, "first dataset CSV")->required();
    cmd_boot->add_option("--ds2", boot_ds2, "second dataset CSV")->required();
    cmd_boot->add_option("--B", boot_B, "bootstrap replicates");
    cmd_boot->add_option("--alpha", boot_alpha, "interval/band level");
    cmd_boot->add_option("--seed", boot_seed, "master seed")->required();
    cmd_boot->add_option("--out", boot_out, "output band CSV")->required();
    cmd_boot->add_flag("--fixed-times", boot_fixed_times, "reuse observed times per replicate");
    cmd_boot->add_flag("--freeze-warp", boot_freeze_warp, "skip per-replicate registration");
    cmd_boot->add_flag("--freeze-bandwidth", boot_freeze_bw, "skip per-replicate bandwidth CV");
    boot_est_flags.attach(cmd_boot);
    boot_reg_flags.attach(cmd_boot);
    cmd_boot->callback([&] {
        const auto ds1 = load(boot_ds1);
        const auto ds2 = load(boot_ds2);
        const auto reg_cfg = boot_reg_flags.build();
        const auto est_cfg = boot_est_flags.build();
        auto [reg, fitted] = cp::plugin_estimate(ds1, ds2, reg_cfg, est_cfg);
        cp::BootstrapOptions opts;
        opts.resample_times = !boot_fixed_times;
        opts.reestimate_warp = !boot_freeze_warp;
        opts.reselect_bandwidth = !boot_freeze_bw;
        const auto summary = cp::bootstrap(ds1, ds2, reg, fitted, boot_B, boot_alpha, boot_seed,
                                           reg_cfg, est_cfg, opts, threads);
        cp::write_file_atomic(boot_out, cp::csv_of_bootstrap(summary));
        ManifestBuilder m("bootstrap", threads);
        m.input("ds1", boot_ds1);
        m.input("ds2", boot_ds2);
        m.seed(boot_seed);
        boot_est_flags.record(m);
        boot_reg_flags.record(m);
        m.tuning("B", boot_B);
        m.tuning("alpha", boot_alpha);
        m.tuning("fixed_times", boot_fixed_times);
        m.tuning("freeze_warp", boot_freeze_warp);
        m.tuning("freeze_bandwidth", boot_freeze_bw);
        m.tuning("resolved_hn", fitted.bandwidth);
        m.write_for(boot_out);
        std::cout << "replicates_used: " << summary.replicates_used << "\n"
                  << "replicates_failed: " << summary.replicates_failed << "\n"
                  << "wrote: " << boot_out << "\n";
    });

    // ---- cv ----
    auto* cmd_cv = app.add_subcommand("cv", "leave-one-out usefulness comparison of pooling");
    std::string cv_ds1, cv_ds2, cv_mode = "fast", cv_out;
    std::size_t cv_max_deletions = 0;
    SharedEstimateFlags cv_est_flags;
    SharedRegisterFlags cv_reg_flags;
    cmd_cv->add_option("--ds1", cv_ds1, "first dataset CSV")->required();
    cmd_cv->add_option("--ds2", cv_ds2, "second dataset CSV")->required();
    cmd_cv->add_option("--mode", cv_mode, "exact (re-register per deletion) | fast")
        ->check(CLI::IsMember({"exact", "fast"}));
    cmd_cv->add_option("--cv-max-deletions", cv_max_deletions,
                       "process at most this many deletions (0 = all)");
    cmd_cv->add_option("--out", cv_out, "output report JSON")->required();
    cv_est_flags.attach(cmd_cv);
    cv_reg_flags.attach(cmd_cv);
    cmd_cv->callback([&] {
        const auto ds1 = load(cv_ds1);
        const auto ds2 = load(cv_ds2);
        const auto report = cp::cv_usefulness(ds1, ds2, cv_reg_flags.build(), cv_est_flags.build(),
                                              cv_mode == "exact" ? cp::CvMode::exact
                                                                 : cp::CvMode::fast,
                                              cv_max_deletions, threads);
        cp::write_file_atomic(cv_out, cp::json_of_cv(report).dump(2) + "\n");
        ManifestBuilder m("cv", threads);
        m.input("ds1", cv_ds1);
        m.input("ds2", cv_ds2);
        cv_est_flags.record(m);
        cv_reg_flags.record(m);
        m.tuning("mode", cv_mode);
        m.tuning("cv_max_deletions", cv_max_deletions);
        m.write_for(cv_out);
        std::cout << "cv_first_only: " << cp::format_full(report.cv_first_only) << "\n"
                  << "cv_pooled: " << cp::format_full(report.cv_pooled) << "\n"
                  << "pooling_useful: " << (report.pooling_useful ? "yes" : "no") << "\n"
                  << "wrote: " << cv_out << "\n";
    });

    // ---- simulate ----
    auto* cmd_sim = app.add_subcommand("simulate", "Monte Carlo comparison of the estimators");
    std::string sim_mean = "builtin", sim_out;
    std::size_t sim_runs = 1000, sim_n1 = 500, sim_n2 = 500, sim_grid = 256;
    double sim_noise = 0.10;
    std::uint64_t sim_seed = 0;
    SharedEstimateFlags sim_est_flags;
    SharedRegisterFlags sim_reg_flags;
    cmd_sim->add_option("--runs", sim_runs, "simulation runs");
    cmd_sim->add_option("--n1", sim_n1, "first sample size");
    cmd_sim->add_option("--n2", sim_n2, "second sample size");
    cmd_sim->add_option("--noise-frac", sim_noise, "noise SD as fraction of sd(m(t))");
    cmd_sim->add_option("--mean", sim_mean, "'builtin' or a CSV whose (t,y) rows define m");
    cmd_sim->add_option("--imse-grid", sim_grid, "IMSE evaluation grid size");
    cmd_sim->add_option("--seed", sim_seed, "master seed")->required();
    cmd_sim->add_option("--out", sim_out, "output report CSV")->required();
    sim_est_flags.attach(cmd_sim);
    sim_reg_flags.attach(cmd_sim);
    cmd_sim->callback([&] {
        cp::SimSpec spec;
        spec.n1 = sim_n1;
        spec.n2 = sim_n2;
        spec.noise_frac = sim_noise;
        spec.seed = sim_seed;
        if (sim_mean != "builtin") {
            // interpolate the file's (t,y) rows as a piecewise-linear mean
            const auto ds = load(sim_mean);
            auto times = ds.times();
            auto values = ds.values();
            spec.mean.value = [times, values](double t) {
                auto it = std::upper_bound(times.begin(), times.end(), t);
                if (it == times.begin()) return values.front();
                if (it == times.end()) return values.back();
                const std::size_t i = static_cast<std::size_t>(it - times.begin());
                const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                return values[i - 1] + w * (values[i] - values[i - 1]);
            };
            spec.mean.prime = nullptr;
            spec.mean.second = nullptr;
        }
        const auto report = cp::monte_carlo(spec, sim_runs, sim_est_flags.build(),
                                            sim_reg_flags.build(), threads, sim_grid);
        cp::write_file_atomic(sim_out, cp::csv_of_simulation(report));
        ManifestBuilder m("simulate", threads);
        m.seed(sim_seed);
        sim_est_flags.record(m);
        sim_reg_flags.record(m);
        m.tuning("runs", sim_runs);
        m.tuning("n1", sim_n1);
        m.tuning("n2", sim_n2);
        m.tuning("noise_frac", sim_noise);
        m.tuning("mean", sim_mean);
        m.tuning("imse_grid", sim_grid);
        m.write_for(sim_out);
        std::cout << "IMSE nw_first: " << cp::format_full(report.nw_first.imse) << "\n"
                  << "IMSE plugin: " << cp::format_full(report.plugin.imse) << "\n"
                  << "IMSE oracle: " << cp::format_full(report.oracle.imse) << "\n"
                  << "failed_runs: " << report.failed << "/" << report.runs << "\n"
                  << "wrote: " << sim_out << "\n";
    });

    // ---- asymptotics ----
    auto* cmd_asy = app.add_subcommand("asymptotics", "leading MSE terms and improvement ratios");
    std::string asy_model, asy_kernel = "gaussian", asy_out;
    double asy_t = 0.5, asy_h = 0.1, asy_cutoff = 8.0;
    std::size_t asy_n = 1000;
    cmd_asy->set_help_flag("--help", "print help");
    cmd_asy->add_option("--model", asy_model, "model description (flat key = value)")->required();
    cmd_asy->add_option("--t", asy_t, "evaluation point")->required();
    cmd_asy->add_option("--n", asy_n, "total sample size")->required();
    cmd_asy->add_option("--h", asy_h, "bandwidth")->required();
    cmd_asy->add_option("--kernel", asy_kernel, "gaussian | truncated")
        ->check(CLI::IsMember({"gaussian", "truncated"}));
    cmd_asy->add_option("--cutoff", asy_cutoff, "truncation cutoff");
    cmd_asy->add_option("--out", asy_out, "optional JSON output");
    cmd_asy->callback([&] {
        const auto spec = cp::model_from_config(cp::FlatConfig::load(asy_model));
        const auto kernel = asy_kernel == "gaussian" ? cp::KernelSpec::gaussian()
                                                     : cp::KernelSpec::truncated(asy_cutoff);
        const auto kc = cp::kernel_constants(kernel);
        const auto mse = cp::asymptotic_mse(spec, kc, asy_t, asy_n, asy_h);
        nlohmann::json j;
        j["variance_term"] = mse.variance_term;
        j["bias_sq_term"] = mse.bias_sq_term;
        j["total"] = mse.total;
        std::cout << "variance_term: " << cp::format_full(mse.variance_term) << "\n"
                  << "bias_sq_term: " << cp::format_full(mse.bias_sq_term) << "\n"
                  << "total: " << cp::format_full(mse.total) << "\n";
        try {
            const auto ratios = cp::improvement_ratios(spec, asy_t);
            j["variance_factor2"] = ratios.variance_factor2;
            j["variance_limit_factor1"] = ratios.variance_limit_factor1;
            j["bias_factor2"] = ratios.bias_factor2;
            j["bias_limit_factor1"] = ratios.bias_limit_factor1;
            std::cout << "variance_factor2: " << cp::format_full(ratios.variance_factor2) << "\n"
                      << "variance_limit_factor1: "
                      << cp::format_full(ratios.variance_limit_factor1) << "\n"
                      << "bias_factor2: " << cp::format_full(ratios.bias_factor2) << "\n"
                      << "bias_limit_factor1: " << cp::format_full(ratios.bias_limit_factor1)
                      << "\n";
        } catch (const cp::DivisionByZero&) {
            j["ratios"] = "undefined-at-t";
            std::cout << "improvement ratios: undefined at t (bias bracket vanishes)\n";
        }
        if (!asy_out.empty()) {
            cp::write_file_atomic(asy_out, j.dump(2) + "\n");
            ManifestBuilder m("asymptotics", threads);
            m.input("model", asy_model);
            m.tuning("t", asy_t);
            m.tuning("n", asy_n);
            m.tuning("h", asy_h);
            m.tuning("kernel", asy_kernel);
            m.write_for(asy_out);
        }
    });

    // ---- symmetry ----
    auto* cmd_sym = app.add_subcommand("symmetry",
                                       "symmetric-decomposition check for a two-segment warp");
    double sym_t0 = 0.25, sym_r = 1.2;
    std::size_t sym_terms = 50;
    std::string sym_out;
    cmd_sym->add_option("--t0", sym_t0, "breakpoint in (0,1)")->required();
    cmd_sym->add_option("--r", sym_r, "upper segment slope")->required();
    cmd_sym->add_option("--terms", sym_terms, "extension sequence length");
    cmd_sym->add_option("--out", sym_out, "optional JSON output");
    cmd_sym->callback([&] {
        const cp::SawtoothWarp warp(sym_t0, sym_r);
        const auto diag = cp::symmetric_decomposition_check(warp);
        const auto seq = cp::lower_extension_sequence(warp, sym_terms);

        std::cout << "warp: lower slope v = " << cp::format_full(diag.v)
                  << ", upper slope r = " << cp::format_full(sym_r) << "\n"
                  << "symmetric decomposition exists: " << (diag.exists ? "yes" : "no") << "\n"
                  << "continuity requires g1(t0) = " << cp::format_full(diag.required_g1_t0) << "\n"
                  << "canonical pair forces g1(t0) = " << cp::format_full(diag.canonical_g1_t0)
                  << "\n"
                  << "gap: " << cp::format_full(diag.gap) << "\n"
                  << "constraint roots in r: " << cp::format_full(diag.roots[0])
                  << (diag.root_feasible[0] ? " (feasible)" : " (infeasible)") << ", "
                  << cp::format_full(diag.roots[1])
                  << (diag.root_feasible[1] ? " (feasible)" : " (infeasible)") << "\n"
                  << "extension sequence: " << seq.t.size() << " terms, last |g1 gap| = "
                  << cp::format_full(seq.g1.size() > 1
                                         ? std::abs(seq.g1[seq.g1.size() - 1] -
                                                    seq.g1[seq.g1.size() - 2])
                                         : 0.0)
                  << ", limit " << cp::format_full(seq.limit_gap) << "\n";

        nlohmann::json j;
        j["t0"] = sym_t0;
        j["r"] = sym_r;
        j["v"] = diag.v;
        j["exists"] = diag.exists;
        j["required_g1_t0"] = diag.required_g1_t0;
        j["canonical_g1_t0"] = diag.canonical_g1_t0;
        j["gap"] = diag.gap;
        j["roots"] = {diag.roots[0], diag.roots[1]};
        j["root_feasible"] = {diag.root_feasible[0], diag.root_feasible[1]};
        j["sequence_t"] = seq.t;
        j["sequence_g1"] = seq.g1;
        j["limit_gap"] = seq.limit_gap;
        std::cout << j.dump(2) << "\n";
        if (!sym_out.empty()) {
            cp::write_file_atomic(sym_out, j.dump(2) + "\n");
            ManifestBuilder m("symmetry", threads);
            m.tuning("t0", sym_t0);
            m.tuning("r", sym_r);
            m.tuning("terms", sym_terms);
            m.write_for(sym_out);
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const cp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
