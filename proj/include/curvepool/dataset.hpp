#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "curvepool/errors.hpp"

namespace curvepool {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct ParseOptions {
    // Duplicate time stamps are rejected by default; with this flag they are
    // resolved by nudging to the next representable double, and counted.
    bool resolve_duplicate_times = false;
    std::string time_unit;
};

struct DatasetDiagnostics {
    std::size_t dropped_blank_rows = 0;
    std::size_t jittered_times = 0;
};

struct DatasetSummary {
    std::size_t size = 0;
    Interval t_range;
    Interval y_range;
};

// One observed series {(t_i, y_i)}: immutable after construction, times
// strictly ascending, all entries finite.
class FunctionalDataset {
public:
    FunctionalDataset(std::string label, std::vector<double> times, std::vector<double> values,
                      const ParseOptions& options = {}, DatasetDiagnostics diagnostics = {})
        : label_(std::move(label)),
          time_unit_(options.time_unit),
          times_(std::move(times)),
          values_(std::move(values)),
          diagnostics_(diagnostics) {
        if (times_.size() != values_.size())
            throw InvalidArgument("dataset '" + label_ + "': times and values differ in length");
        if (times_.empty()) throw EmptyDataset("dataset '" + label_ + "' has no observations");
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
                throw NonFiniteValue("dataset '" + label_ + "': non-finite entry at row " +
                                     std::to_string(i));
        }
        sort_by_time();
        resolve_ties(options.resolve_duplicate_times);
        time_support_ = {times_.front(), times_.back()};
    }

    const std::string& label() const { return label_; }
    const std::string& time_unit() const { return time_unit_; }
    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    const Interval& time_support() const { return time_support_; }
    const DatasetDiagnostics& diagnostics() const { return diagnostics_; }

    // observations per unit time; decides which set is "lesser dense"
    double density() const {
        const double len = time_support_.length();
        if (len <= 0.0) return std::numeric_limits<double>::infinity();
        return static_cast<double>(size()) / len;
    }

    FunctionalDataset without(std::size_t index) const {
        std::vector<double> t(times_), y(values_);
        t.erase(t.begin() + static_cast<std::ptrdiff_t>(index));
        y.erase(y.begin() + static_cast<std::ptrdiff_t>(index));
        ParseOptions opt;
        opt.time_unit = time_unit_;
        return FunctionalDataset(label_, std::move(t), std::move(y), opt);
    }

private:
    void sort_by_time() {
        if (std::is_sorted(times_.begin(), times_.end()) &&
            std::adjacent_find(times_.begin(), times_.end()) == times_.end())
            return;
        std::vector<std::size_t> order(times_.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return times_[a] < times_[b]; });
        std::vector<double> t(times_.size()), y(values_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            t[i] = times_[order[i]];
            y[i] = values_[order[i]];
        }
        times_ = std::move(t);
        values_ = std::move(y);
    }

    void resolve_ties(bool resolve) {
        for (std::size_t i = 1; i < times_.size(); ++i) {
            if (times_[i] > times_[i - 1]) continue;
            if (!resolve)
                throw DuplicateTime("dataset '" + label_ + "': duplicate time stamp " +
                                    std::to_string(times_[i]));
            times_[i] = std::nextafter(times_[i - 1], std::numeric_limits<double>::infinity());
            ++diagnostics_.jittered_times;
        }
    }

    std::string label_;
    std::string time_unit_;
    std::vector<double> times_;
    std::vector<double> values_;
    Interval time_support_;
    DatasetDiagnostics diagnostics_;
};

inline DatasetSummary summarize(const FunctionalDataset& ds) {
    DatasetSummary s;
    s.size = ds.size();
    s.t_range = {ds.times().front(), ds.times().back()};
    auto [ymin, ymax] = std::minmax_element(ds.values().begin(), ds.values().end());
    s.y_range = {*ymin, *ymax};
    return s;
}

namespace detail {

inline bool parse_double(const std::string& field, double& out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

inline bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r") == std::string::npos;
}

} // namespace detail

// CSV ingestion: UTF-8, comma separator, one header line, columns t,y.
// Rows with blank fields are dropped and counted; malformed rows are errors.
inline FunctionalDataset load_dataset(const std::filesystem::path& path,
                                      const ParseOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("'" + path.string() + "' is empty");

    std::vector<double> times, values;
    DatasetDiagnostics diag;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) {
            ++diag.dropped_blank_rows;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("'" + path.string() + "' line " + std::to_string(lineno) +
                             ": expected two comma-separated columns");
        const std::string a = line.substr(0, comma);
        const std::string b = line.substr(comma + 1);
        if (b.find(',') != std::string::npos)
            throw ParseError("'" + path.string() + "' line " + std::to_string(lineno) +
                             ": more than two columns");
        if (detail::blank(a) || detail::blank(b)) {
            ++diag.dropped_blank_rows;
            continue;
        }
        double t = 0.0, y = 0.0;
        if (!detail::parse_double(a, t) || !detail::parse_double(b, y))
            throw ParseError("'" + path.string() + "' line " + std::to_string(lineno) +
                             ": malformed numeric field");
        if (!std::isfinite(t) || !std::isfinite(y))
            throw NonFiniteValue("'" + path.string() + "' line " + std::to_string(lineno) +
                                 ": non-finite value");
        times.push_back(t);
        values.push_back(y);
    }
    if (times.empty()) throw EmptyDataset("'" + path.string() + "' has no data rows");
    return FunctionalDataset(path.stem().string(), std::move(times), std::move(values), options,
                             diag);
}

// 17 significant digits round-trip doubles exactly
inline std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void save_dataset(const FunctionalDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "t,y\n";
    for (std::size_t i = 0; i < ds.size(); ++i)
        out << format_full(ds.times()[i]) << ',' << format_full(ds.values()[i]) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace curvepool
