#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "curvepool/config.hpp"
#include "curvepool/dataset.hpp"

using namespace curvepool;
namespace fs = std::filesystem;

namespace {

const std::string cli = CURVEPOOL_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path make_pair_csv(const std::string& stem, double shift) {
    const fs::path p = fs::temp_directory_path() / (stem + ".csv");
    std::ofstream out(p);
    out << "t,y\n";
    for (int i = 0; i < 60; ++i) {
        const double t = 0.25 * i;
        out << t << ',' << std::sin(0.6 * (t + shift)) * 10.0 + 20.0 << '\n';
    }
    return p;
}

} // namespace

TEST_CASE("flat config parser") {
    std::stringstream in("# comment\nalpha = 0.5\nname= grid search \nempty =\n");
    const auto cfg = FlatConfig::parse(in);
    CHECK(cfg.get_double("alpha", 0.0) == 0.5);
    CHECK(cfg.get("name") == "grid search");
    CHECK(cfg.has("empty"));
    CHECK_FALSE(cfg.has("missing"));
    std::stringstream bad("novalue\n");
    CHECK_THROWS_AS(FlatConfig::parse(bad), ParseError);
}

TEST_CASE("cli: unknown flag exits 2 and writes nothing") {
    const fs::path out = fs::temp_directory_path() / "cp_cli_nothing.csv";
    fs::remove(out);
    CHECK(run_cli("summarize --definitely-not-a-flag x --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli: summarize prints a table") {
    const auto a = make_pair_csv("cp_cli_a", 0.0);
    CHECK(run_cli("summarize --input " + a.string()) == 0);
    CHECK(run_cli("summarize --input /nonexistent.csv") == 1);
}

TEST_CASE("cli: register then estimate round trip with manifests") {
    const auto a = make_pair_csv("cp_cli_ds1", 0.0);
    const auto b = make_pair_csv("cp_cli_ds2", 0.4);
    const fs::path warp = fs::temp_directory_path() / "cp_cli_warp.json";
    const fs::path curve = fs::temp_directory_path() / "cp_cli_curve.csv";

    CHECK(run_cli("register --ds1 " + a.string() + " --ds2 " + b.string() + " --out " +
                  warp.string() + " --knots 6 --rounds 2") == 0);
    REQUIRE(fs::exists(warp));
    REQUIRE(fs::exists(warp.string() + ".manifest.json"));
    const auto manifest = nlohmann::json::parse(slurp(warp.string() + ".manifest.json"));
    CHECK(manifest["command"] == "register");
    CHECK(manifest["inputs"]["ds1"] == a.string());

    CHECK(run_cli("estimate --ds1 " + a.string() + " --ds2 " + b.string() + " --warp " +
                  warp.string() + " --hn 1.5 --grid 32 --out " + curve.string()) == 0);
    REQUIRE(fs::exists(curve));
    const std::string text = slurp(curve);
    CHECK(text.rfind("t,estimate,mass,flag\n", 0) == 0);

    // re-running reproduces byte-identical output
    const std::string first = text;
    CHECK(run_cli("estimate --ds1 " + a.string() + " --ds2 " + b.string() + " --warp " +
                  warp.string() + " --hn 1.5 --grid 32 --out " + curve.string()) == 0);
    CHECK(slurp(curve) == first);
}

TEST_CASE("cli: symmetry reports the worked example") {
    const fs::path out = fs::temp_directory_path() / "cp_cli_sym.json";
    CHECK(run_cli("symmetry --t0 0.25 --r 1.2 --terms 50 --out " + out.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["exists"] == false);
    CHECK(j["roots"][0].get<double>() == 1.0);
    CHECK(j["roots"][1].get<double>() == Approx(3.0));
    CHECK(j["gap"].get<double>() == Approx(0.1753246753).epsilon(1e-6));
}

TEST_CASE("cli: randomized commands require a seed") {
    const auto a = make_pair_csv("cp_cli_s1", 0.0);
    const auto b = make_pair_csv("cp_cli_s2", 0.3);
    const fs::path out = fs::temp_directory_path() / "cp_cli_sim.csv";
    CHECK(run_cli("simulate --runs 2 --n1 20 --n2 20 --out " + out.string()) == 2);
    CHECK(run_cli("bootstrap --ds1 " + a.string() + " --ds2 " + b.string() + " --B 2 --out " +
                  out.string()) == 2);
}

TEST_CASE("cli: estimate with --auto and cv report") {
    const auto a = make_pair_csv("cp_cli_auto1", 0.0);
    const auto b = make_pair_csv("cp_cli_auto2", 0.3);
    const fs::path curve = fs::temp_directory_path() / "cp_cli_auto_curve.csv";
    CHECK(run_cli("estimate --ds1 " + a.string() + " --ds2 " + b.string() +
                  " --auto --knots 6 --rounds 2 --hn 1.0 --grid 24 --out " + curve.string()) == 0);
    CHECK(fs::exists(curve));

    const fs::path report = fs::temp_directory_path() / "cp_cli_cv.json";
    CHECK(run_cli("cv --ds1 " + a.string() + " --ds2 " + b.string() +
                  " --mode fast --knots 6 --rounds 2 --hn 1.0 --out " + report.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(report));
    CHECK(j.contains("cv_first_only"));
    CHECK(j.contains("cv_pooled"));
    CHECK(j.contains("pooling_useful"));
    CHECK(j["mode"] == "fast");
}

TEST_CASE("cli: asymptotics evaluates a model config") {
    const fs::path cfg = fs::temp_directory_path() / "cp_cli_model.cfg";
    {
        std::ofstream out(cfg);
        out << "# single-sample quadratic model\n"
            << "f1 = uniform\na = 0\nb = 1\nm = quadratic\ng0 = identity\n"
            << "sigma1 = 0.1\nxi = 1\n";
    }
    const fs::path out = fs::temp_directory_path() / "cp_cli_asy.json";
    CHECK(run_cli("asymptotics --model " + cfg.string() +
                  " --t 0.5 --n 1000 --h 0.1 --out " + out.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["variance_term"].get<double>() == Approx(2.8209479177387814e-5).epsilon(1e-9));
    CHECK(j["bias_sq_term"].get<double>() == Approx(1e-4).epsilon(1e-9));
}

TEST_CASE("cli: single-sample estimate without a second dataset") {
    const auto a = make_pair_csv("cp_cli_single", 0.0);
    const fs::path curve = fs::temp_directory_path() / "cp_cli_single_curve.csv";
    CHECK(run_cli("estimate --ds1 " + a.string() + " --hn 1.2 --grid 24 --out " +
                  curve.string()) == 0);
    CHECK(slurp(curve).rfind("t,estimate,mass,flag\n", 0) == 0);
}

TEST_CASE("cli: flags can come from a config file, flags win") {
    const auto a = make_pair_csv("cp_cli_cfg_a", 0.0);
    const fs::path cfg = fs::temp_directory_path() / "cp_cli_flags.cfg";
    {
        std::ofstream out(cfg);
        out << "[summarize]\ninput = \"" << a.string() << "\"\n";
    }
    CHECK(run_cli("summarize --config " + cfg.string()) == 0);
}

TEST_CASE("cli: simulate accepts a mean function from file") {
    const fs::path mean = fs::temp_directory_path() / "cp_cli_mean.csv";
    {
        std::ofstream out(mean);
        out << "t,y\n";
        for (int i = 0; i <= 40; ++i) {
            const double t = 415.0 * i / 40.0;
            out << t << ',' << 200.0 + 50.0 * std::sin(t / 40.0) << '\n';
        }
    }
    const fs::path out = fs::temp_directory_path() / "cp_cli_sim_mean.csv";
    CHECK(run_cli("simulate --runs 3 --n1 30 --n2 30 --seed 5 --knots 6 --rounds 1 "
                  "--imse-grid 32 --mean " +
                  mean.string() + " --out " + out.string()) == 0);
    const std::string text = slurp(out);
    CHECK(text.find("IMSE,oracle,") != std::string::npos);
}

TEST_CASE("cli: inputs are never mutated") {
    const auto a = make_pair_csv("cp_cli_frozen", 0.0);
    const std::string before = slurp(a);
    run_cli("summarize --input " + a.string());
    CHECK(slurp(a) == before);
}
