#ifndef PROXIMITY_PIPELINE_HPP
#define PROXIMITY_PIPELINE_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proximity/catchment.hpp"
#include "proximity/dataset.hpp"
#include "proximity/equity.hpp"
#include "proximity/indicators.hpp"
#include "proximity/synth.hpp"

namespace proximity {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ProviderKind { fixed, network, polygons };

inline std::string to_string(ProviderKind p) {
    switch (p) {
        case ProviderKind::fixed: return "fixed";
        case ProviderKind::network: return "network";
        case ProviderKind::polygons: return "polygons";
    }
    return "fixed";
}

struct RunConfig {
    std::string city_id = "city";
    InputPaths inputs;
    ProviderKind provider = ProviderKind::fixed;
    std::string network_nodes;  // network provider
    std::string network_edges;
    std::string isolines;  // polygon provider
    double max_snap_m = 500.0;
    std::vector<Mode> modes = {Mode::walk, Mode::cycle, Mode::transit, Mode::car};
    double budget_min = 15.0;
    long long min_visits = 5;
    SpeedTable speeds;
    EmissionFactors factors;
    GiniWeighting weighting = GiniWeighting::population;
    std::string out_dir = "out";
    int workers = 0;  // 0: hardware concurrency
    uint64_t seed = 0;

    void validate() const {
        if (!(budget_min > 0.0)) throw ConfigError("budget_min must be > 0");
        if (!factors.valid()) throw ConfigError("emission factors must be > 0");
        if (modes.empty()) throw ConfigError("modes list is empty");
        if (min_visits < 0) throw ConfigError("min_visits must be >= 0");
        for (double s : speeds.kmh)
            if (!(s > 0.0)) throw ConfigError("speeds must be > 0");
        if (provider == ProviderKind::network && (network_nodes.empty() || network_edges.empty()))
            throw ConfigError("network provider requires network.nodes and network.edges");
        if (provider == ProviderKind::polygons && isolines.empty())
            throw ConfigError("polygon provider requires isolines");
        if (inputs.pois.empty() || inputs.cbgs.empty() || inputs.flows.empty())
            throw ConfigError("inputs.pois, inputs.cbgs, inputs.flows are required");
    }
};

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["city_id"] = c.city_id;
    j["inputs"] = {{"pois", c.inputs.pois}, {"cbgs", c.inputs.cbgs}, {"flows", c.inputs.flows}};
    j["provider"] = to_string(c.provider);
    if (!c.network_nodes.empty())
        j["network"] = {{"nodes", c.network_nodes}, {"edges", c.network_edges}};
    if (!c.isolines.empty()) j["isolines"] = c.isolines;
    j["max_snap_m"] = c.max_snap_m;
    nlohmann::json modes = nlohmann::json::array();
    for (Mode m : c.modes) modes.push_back(to_string(m));
    j["modes"] = modes;
    j["budget_min"] = c.budget_min;
    j["min_visits"] = c.min_visits;
    j["speeds"] = {{"walk", c.speeds[Mode::walk]}, {"cycle", c.speeds[Mode::cycle]},
                   {"transit", c.speeds[Mode::transit]}, {"car", c.speeds[Mode::car]}};
    j["emission_factors"] = {{"car", c.factors.car}, {"transit", c.factors.transit},
                             {"walk", c.factors.walk}, {"cycle", c.factors.cycle}};
    j["gini_weighting"] = to_string(c.weighting);
    j["out_dir"] = c.out_dir;
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        if (j.contains("city_id")) c.city_id = j.at("city_id").get<std::string>();
        if (j.contains("inputs")) {
            const auto& in = j.at("inputs");
            c.inputs.pois = in.value("pois", "");
            c.inputs.cbgs = in.value("cbgs", "");
            c.inputs.flows = in.value("flows", "");
        }
        if (j.contains("provider")) {
            const std::string p = j.at("provider").get<std::string>();
            if (p == "fixed") c.provider = ProviderKind::fixed;
            else if (p == "network") c.provider = ProviderKind::network;
            else if (p == "polygons") c.provider = ProviderKind::polygons;
            else throw ConfigError("unknown provider '" + p + "'");
        }
        if (j.contains("network")) {
            c.network_nodes = j.at("network").value("nodes", "");
            c.network_edges = j.at("network").value("edges", "");
        }
        if (j.contains("isolines")) c.isolines = j.at("isolines").get<std::string>();
        if (j.contains("max_snap_m")) c.max_snap_m = j.at("max_snap_m").get<double>();
        if (j.contains("modes")) {
            c.modes.clear();
            for (const auto& m : j.at("modes")) {
                auto mode = parse_mode(m.get<std::string>());
                if (!mode) throw ConfigError("unknown mode '" + m.get<std::string>() + "'");
                c.modes.push_back(*mode);
            }
        }
        if (j.contains("budget_min")) c.budget_min = j.at("budget_min").get<double>();
        if (j.contains("min_visits")) c.min_visits = j.at("min_visits").get<long long>();
        if (j.contains("speeds")) {
            const auto& s = j.at("speeds");
            if (s.contains("walk")) c.speeds[Mode::walk] = s.at("walk").get<double>();
            if (s.contains("cycle")) c.speeds[Mode::cycle] = s.at("cycle").get<double>();
            if (s.contains("transit")) c.speeds[Mode::transit] = s.at("transit").get<double>();
            if (s.contains("car")) c.speeds[Mode::car] = s.at("car").get<double>();
        }
        if (j.contains("emission_factors")) {
            const auto& f = j.at("emission_factors");
            if (f.contains("car")) c.factors.car = f.at("car").get<double>();
            if (f.contains("transit")) c.factors.transit = f.at("transit").get<double>();
            if (f.contains("walk")) c.factors.walk = f.at("walk").get<double>();
            if (f.contains("cycle")) c.factors.cycle = f.at("cycle").get<double>();
        }
        if (j.contains("gini_weighting")) {
            const std::string w = j.at("gini_weighting").get<std::string>();
            if (w == "population") c.weighting = GiniWeighting::population;
            else if (w == "unweighted") c.weighting = GiniWeighting::unweighted;
            else throw ConfigError("unknown gini_weighting '" + w + "'");
        }
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("workers")) c.workers = j.at("workers").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j);
}

/// FNV-1a 64-bit over file bytes, as a reproducibility digest.
inline std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i)
            h = (h ^ static_cast<unsigned char>(buf[i])) * 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

struct RunReport {
    int cbgs_processed = 0;
    int cbgs_excluded = 0;
    std::vector<std::string> warnings;
    double elapsed_ms = 0.0;
    std::map<std::string, std::string> digests;  // filename -> hex digest
    nlohmann::json config_echo;
};

namespace detail {

inline std::string opt9(const std::optional<double>& v) {
    return v ? format_fixed9(*v) : std::string();
}

inline void write_indicators_csv(const std::string& path, const std::vector<IndicatorRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    out << "cbg_id,mode,num_poi,pct_act_15min,pct_act_sat_15min,pct_reduced_dist,pct_reduced_carbon\n";
    for (const auto& r : rows) {
        if (r.excluded) continue;
        out << csv::join({r.cbg_id, to_string(r.mode), std::to_string(r.values.num_poi),
                          opt9(r.values.pct_act_15min), opt9(r.values.pct_act_sat_15min),
                          opt9(r.values.pct_reduced_dist), opt9(r.values.pct_reduced_carbon)});
    }
}

inline void write_gini_csv(const std::string& path, const std::string& city,
                           const CitySummary& summary, GiniWeighting weighting) {
    std::ofstream out(path, std::ios::binary);
    out << "city,indicator,mode,gini,n,weighting\n";
    for (const auto& r : summary.rows) {
        if (!r.gini) continue;
        out << csv::join({city, r.indicator, to_string(r.mode), format_fixed9(*r.gini),
                          std::to_string(r.n), to_string(weighting)});
    }
}

inline void write_correlations_csv(const std::string& path, const std::string& city,
                                   const CorrelationMatrix& matrix) {
    std::ofstream out(path, std::ios::binary);
    out << "city,indicator,mode,variable,r,n,reportable\n";
    for (const auto& c : matrix.cells) {
        out << csv::join({city, c.indicator, to_string(c.mode), c.variable,
                          c.r ? format_fixed9(*c.r) : std::string(), std::to_string(c.n),
                          c.reportable ? "1" : "0"});
    }
}

inline void write_summary_json(const std::string& path, const std::string& city,
                               const CitySummary& summary) {
    nlohmann::json j;
    j["city"] = city;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : summary.rows) {
        nlohmann::json row;
        row["indicator"] = r.indicator;
        row["mode"] = to_string(r.mode);
        row["n"] = r.n;
        row["mean"] = format_fixed9(r.mean);
        row["median"] = format_fixed9(r.median);
        if (r.gini) row["gini"] = format_fixed9(*r.gini);
        else if (!r.diagnostic.empty()) row["gini_diagnostic"] = r.diagnostic;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    j["diagnostics"] = summary.diagnostics;
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << "\n";
}

}  // namespace detail

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PROXIMITY_AUDIT_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Full batch run: load, catchments + indicators in parallel, equity stats,
/// deterministic reports. Output bytes are independent of the worker count.
inline RunReport run_pipeline(const RunConfig& config) {
    namespace fs = std::filesystem;
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    CityDataset ds = load_city(config.inputs, QualityConfig{config.min_visits}, config.city_id);

    std::unique_ptr<CatchmentProvider> provider;
    switch (config.provider) {
        case ProviderKind::fixed:
            provider = std::make_unique<FixedSpeedProvider>(ds, config.speeds);
            break;
        case ProviderKind::network:
            provider = std::make_unique<NetworkProvider>(
                load_network(config.network_nodes, config.network_edges), ds, config.speeds,
                config.max_snap_m);
            break;
        case ProviderKind::polygons:
            provider = std::make_unique<PolygonProvider>(load_isolines(config.isolines), ds);
            break;
    }

    std::vector<CatchmentSpec> specs;
    for (Mode m : config.modes) specs.emplace_back(m, config.budget_min);
    const int workers = resolve_workers(config.workers);
    ComputeResult result = compute_all(ds, *provider, specs, config.factors, workers);

    RunReport report;
    report.config_echo = config_to_json(config);
    for (const auto& e : result.errors) report.warnings.push_back("provider: " + e);
    for (const auto& r : result.rows) {
        if (!r.warning.empty()) report.warnings.push_back(r.cbg_id + "/" + to_string(r.mode) + ": " + r.warning);
        if (r.excluded) ++report.cbgs_excluded;
        else ++report.cbgs_processed;
    }
    if (report.cbgs_processed == 0)
        report.warnings.push_back("no CBG with activities; indicator table is empty");

    CitySummary summary = city_summary(result.rows, ds, config.weighting);
    for (const auto& d : summary.diagnostics) report.warnings.push_back("summary: " + d);
    CorrelationMatrix matrix = correlation_matrix(result.rows, ds);
    if (!matrix.diagnostic.empty()) report.warnings.push_back("correlations: " + matrix.diagnostic);

    fs::create_directories(config.out_dir);
    const auto out = [&](const std::string& name) { return (fs::path(config.out_dir) / name).string(); };
    detail::write_indicators_csv(out("indicators.csv"), result.rows);
    detail::write_gini_csv(out("gini.csv"), config.city_id, summary, config.weighting);
    detail::write_correlations_csv(out("correlations.csv"), config.city_id, matrix);
    detail::write_summary_json(out("summary.json"), config.city_id, summary);

    for (const char* name : {"indicators.csv", "gini.csv", "correlations.csv", "summary.json"})
        report.digests[name] = digest_file(out(name));

    report.elapsed_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0).count();

    std::sort(report.warnings.begin(), report.warnings.end());
    nlohmann::json rep;
    rep["cbgs_processed"] = report.cbgs_processed;
    rep["cbgs_excluded"] = report.cbgs_excluded;
    rep["warnings"] = report.warnings;
    rep["elapsed_ms"] = report.elapsed_ms;
    rep["config"] = report.config_echo;
    rep["digests"] = report.digests;
    std::ofstream repf(out("run_report.json"), std::ios::binary);
    repf << rep.dump(2) << "\n";
    return report;
}

}  // namespace proximity

#endif  // PROXIMITY_PIPELINE_HPP
