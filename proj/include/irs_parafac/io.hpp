// SPDX-License-Identifier: Apache-2.0
//
// Config files (JSON), result CSV and the run manifest.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "irs_parafac/errors.hpp"
#include "irs_parafac/harness.hpp"
#include "irs_parafac/version.hpp"

namespace irs_parafac {

inline constexpr std::string_view csv_header =
    "estimator,N,snr_db,nmse_H,nmse_G,nmse_Hc,mean_iterations,mean_runtime_s,trials";

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

inline long long parse_integer(std::string_view s) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("cannot parse integer '" + std::string(s) + "'");
    }
    return v;
}

/// "start:step:stop", inclusive of stop when it lies on the grid.
inline std::vector<double> parse_snr_range(std::string_view spec) {
    const auto c1 = spec.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : spec.find(':', c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
        throw InvalidArgument("snr range must look like start:step:stop (got '" + std::string(spec) + "')");
    }
    const double start = parse_double(spec.substr(0, c1));
    const double step = parse_double(spec.substr(c1 + 1, c2 - c1 - 1));
    const double stop = parse_double(spec.substr(c2 + 1));
    if (!(step > 0.0) || stop < start || !std::isfinite(start) || !std::isfinite(stop)) {
        throw InvalidArgument("snr range needs step > 0 and finite start <= stop (got '" + std::string(spec) + "')");
    }
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) grid.push_back(start + static_cast<double>(i) * step);
    return grid;
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto next = s.find(sep, pos);
        const auto piece = s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        if (!piece.empty()) out.emplace_back(piece);
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
    if (!obj.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw InvalidArgument("config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
    }
}

template <typename T>
T get_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config: bad value for '" + where + key + "': " + e.what());
    }
}

inline double snr_from_json(const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && (v == "inf" || v == "+inf")) return std::numeric_limits<double>::infinity();
    throw InvalidArgument("config: snr values must be numbers or \"inf\"");
}

inline nlohmann::json snr_to_json(double v) {
    if (std::isinf(v) && v > 0) return "inf";
    return v;
}

} // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    using detail::get_field;
    detail::reject_unknown_keys(
        j, {"dims", "snr_grid_db", "trials", "estimators", "bals", "s_design", "seed", "output_path"}, "");
    ScenarioConfig cfg;
    if (j.contains("dims")) {
        const auto& d = j.at("dims");
        detail::reject_unknown_keys(d, {"M", "L", "N", "T", "K"}, "dims");
        if (d.contains("M")) cfg.dims.M = get_field<int>(d, "M", "dims.");
        if (d.contains("L")) cfg.dims.L = get_field<int>(d, "L", "dims.");
        if (d.contains("T")) cfg.dims.T = get_field<int>(d, "T", "dims.");
        if (d.contains("K")) cfg.dims.K = get_field<int>(d, "K", "dims.");
        if (d.contains("N")) {
            const auto& n = d.at("N");
            cfg.n_values = n.is_array() ? get_field<std::vector<int>>(d, "N", "dims.")
                                        : std::vector<int>{get_field<int>(d, "N", "dims.")};
        }
    }
    if (!cfg.n_values.empty()) cfg.dims.N = cfg.n_values.front();
    if (j.contains("snr_grid_db")) {
        const auto& g = j.at("snr_grid_db");
        if (g.is_string()) {
            cfg.snr_grid_db = parse_snr_range(g.get<std::string>());
        } else if (g.is_array()) {
            cfg.snr_grid_db.clear();
            for (const auto& v : g) cfg.snr_grid_db.push_back(detail::snr_from_json(v));
        } else {
            throw InvalidArgument("config: snr_grid_db must be a list or a start:step:stop string");
        }
    }
    if (j.contains("trials")) cfg.trials = get_field<int>(j, "trials", "");
    if (j.contains("estimators")) {
        cfg.estimators.clear();
        for (const auto& e : get_field<std::vector<std::string>>(j, "estimators", "")) {
            cfg.estimators.push_back(parse_method(e));
        }
    }
    if (j.contains("bals")) {
        const auto& b = j.at("bals");
        detail::reject_unknown_keys(b, {"tolerance", "max_iterations", "normalize_error", "fast_path", "init_seed",
                                        "starts"},
                                    "bals");
        if (b.contains("tolerance")) cfg.bals.tolerance = get_field<double>(b, "tolerance", "bals.");
        if (b.contains("max_iterations")) cfg.bals.max_iterations = get_field<int>(b, "max_iterations", "bals.");
        if (b.contains("normalize_error")) cfg.bals.normalize_error = get_field<bool>(b, "normalize_error", "bals.");
        if (b.contains("fast_path")) cfg.bals.fast_path = get_field<bool>(b, "fast_path", "bals.");
        if (b.contains("init_seed")) cfg.bals.init_seed = get_field<std::uint64_t>(b, "init_seed", "bals.");
        if (b.contains("starts")) cfg.bals.starts = get_field<int>(b, "starts", "bals.");
    }
    if (j.contains("s_design")) cfg.s_design = parse_phase_design(get_field<std::string>(j, "s_design", ""));
    if (j.contains("seed")) cfg.seed = get_field<std::uint64_t>(j, "seed", "");
    if (j.contains("output_path")) cfg.output_path = get_field<std::string>(j, "output_path", "");
    return cfg;
}

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["dims"] = {{"M", cfg.dims.M}, {"L", cfg.dims.L}, {"N", cfg.n_values}, {"T", cfg.dims.T}, {"K", cfg.dims.K}};
    j["snr_grid_db"] = nlohmann::json::array();
    for (double s : cfg.snr_grid_db) j["snr_grid_db"].push_back(detail::snr_to_json(s));
    j["trials"] = cfg.trials;
    j["estimators"] = nlohmann::json::array();
    for (Method m : cfg.estimators) j["estimators"].push_back(to_string(m));
    j["bals"] = {{"tolerance", cfg.bals.tolerance},
                 {"max_iterations", cfg.bals.max_iterations},
                 {"normalize_error", cfg.bals.normalize_error},
                 {"fast_path", cfg.bals.fast_path},
                 {"init_seed", cfg.bals.init_seed},
                 {"starts", cfg.bals.starts}};
    j["s_design"] = to_string(cfg.s_design);
    j["seed"] = cfg.seed;
    j["output_path"] = cfg.output_path;
    return j;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j);
}

/// Reference scenario at desk scale: M=3, L=2, T=4, K=50,
/// N in {10, 40}, SNR 0:5:30 dB, 200 trials, both estimators.
inline ScenarioConfig reference_preset() {
    ScenarioConfig cfg;
    cfg.dims = ScenarioDims{3, 2, 10, 4, 50};
    cfg.n_values = {10, 40};
    cfg.snr_grid_db = {0, 5, 10, 15, 20, 25, 30};
    cfg.trials = 200;
    cfg.estimators = {Method::lskrf, Method::bals};
    cfg.output_path = "paper-fig3.csv";
    return cfg;
}

// ---------------------------------------------------------------------------
// results
// ---------------------------------------------------------------------------

inline std::string results_to_csv(const SweepResult& result) {
    std::string out(csv_header);
    out += '\n';
    for (const auto& r : result.rows) {
        out += to_string(r.estimator);
        out += ',' + std::to_string(r.N);
        for (double v : {r.snr_db, r.nmse_H, r.nmse_G, r.nmse_Hc, r.mean_iterations, r.mean_runtime_s}) {
            out += ',' + format_double(v);
        }
        out += ',' + std::to_string(r.trials);
        out += '\n';
    }
    return out;
}

inline SweepResult results_from_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != csv_header) {
        throw InvalidArgument("results CSV: missing or unexpected header");
    }
    SweepResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_list(line);
        if (f.size() != 9) {
            throw InvalidArgument("results CSV line " + std::to_string(line_no) + ": expected 9 fields");
        }
        SweepRow r;
        r.estimator = parse_method(f[0]);
        r.N = static_cast<int>(parse_integer(f[1]));
        r.snr_db = parse_double(f[2]);
        r.nmse_H = parse_double(f[3]);
        r.nmse_G = parse_double(f[4]);
        r.nmse_Hc = parse_double(f[5]);
        r.mean_iterations = parse_double(f[6]);
        r.mean_runtime_s = parse_double(f[7]);
        r.trials = static_cast<int>(parse_integer(f[8]));
        result.rows.push_back(std::move(r));
    }
    return result;
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".manifest.json");
    return p;
}

inline nlohmann::json build_manifest(const SweepResult& result, const ScenarioConfig& cfg, const RunOptions& opts) {
    nlohmann::json m;
    m["library"] = library_name;
    m["version"] = library_version;
    m["seed"] = cfg.seed;
    m["config"] = config_to_json(cfg);
    m["workers"] = opts.workers;
    m["runtime_in_csv"] = opts.record_timing;
    m["failed_trials_total"] = result.total_failed_trials();
    m["cells"] = nlohmann::json::array();
    for (const auto& r : result.rows) {
        m["cells"].push_back({{"estimator", to_string(r.estimator)},
                              {"N", r.N},
                              {"snr_db", detail::snr_to_json(r.snr_db)},
                              {"trials", r.trials},
                              {"failed_trials", r.failed_trials},
                              {"nonconverged_trials", r.nonconverged_trials},
                              {"measured_runtime_s", r.measured_runtime_s},
                              {"errors", r.error_samples}});
    }
    return m;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes the CSV to `path` and the manifest next to it
/// (same stem, extension .manifest.json).
inline void write_results(const SweepResult& result, const std::filesystem::path& path, const ScenarioConfig& cfg,
                          const RunOptions& opts = {}) {
    write_text_file(path, results_to_csv(result));
    write_text_file(manifest_path_for(path), build_manifest(result, cfg, opts).dump(2) + "\n");
}

inline SweepResult read_results(const std::filesystem::path& path) { return results_from_csv(read_text_file(path)); }

} // namespace irs_parafac
