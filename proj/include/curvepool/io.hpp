#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/estimator.hpp"
#include "curvepool/inference.hpp"
#include "curvepool/simulate.hpp"

namespace curvepool {

inline constexpr const char* library_version = "0.1.0";

// write-to-temp then rename, so outputs appear atomically
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
}

inline std::string csv_of_curve(const MeanCurve& curve) {
    std::ostringstream out;
    out << "t,estimate,mass,flag\n";
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        out << format_full(curve.grid[k]) << ',';
        if (curve.flags[k] == PointFlag::thin_support)
            out << "";
        else
            out << format_full(curve.estimate[k]);
        out << ',' << format_full(curve.mass[k]) << ',' << to_string(curve.flags[k]) << '\n';
    }
    return out.str();
}

inline std::string csv_of_bootstrap(const BootstrapSummary& s) {
    std::ostringstream out;
    out << "t,estimate,se,ci_lo,ci_hi,band_lo,band_hi\n";
    for (std::size_t k = 0; k < s.grid.size(); ++k)
        out << format_full(s.grid[k]) << ',' << format_full(s.estimate[k]) << ','
            << format_full(s.se[k]) << ',' << format_full(s.ci_lo[k]) << ','
            << format_full(s.ci_hi[k]) << ',' << format_full(s.band_lo[k]) << ','
            << format_full(s.band_hi[k]) << '\n';
    return out.str();
}

// long format rows per estimator, then a summary block of IMSE rows
inline std::string csv_of_simulation(const SimulationReport& r) {
    std::ostringstream out;
    out << "t,estimator,bias,sd,mse\n";
    for (const auto* stats : {&r.nw_first, &r.plugin, &r.oracle})
        for (std::size_t k = 0; k < r.grid.size(); ++k) {
            if (!r.common_ok[k]) continue;
            out << format_full(r.grid[k]) << ',' << stats->name << ','
                << format_full(stats->bias[k]) << ',' << format_full(stats->sd[k]) << ','
                << format_full(stats->mse[k]) << '\n';
        }
    for (const auto* stats : {&r.nw_first, &r.plugin, &r.oracle})
        out << "IMSE," << stats->name << ',' << format_full(stats->imse) << ",,\n";
    return out.str();
}

inline nlohmann::json json_of_cv(const CvReport& r) {
    nlohmann::json j;
    j["cv_first_only"] = r.cv_first_only;
    j["cv_pooled"] = r.cv_pooled;
    j["cv_pooled_first_scale"] = r.cv_pooled_first_scale;
    j["pooling_useful"] = r.pooling_useful;
    j["mode"] = to_string(r.mode);
    j["deletions"] = r.deletions;
    j["skipped"] = r.skipped;
    j["bandwidth_first"] = r.bandwidth_first;
    j["bandwidth_pooled"] = r.bandwidth_pooled;
    return j;
}

} // namespace curvepool
