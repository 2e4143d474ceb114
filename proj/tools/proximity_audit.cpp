// proximity_audit: batch accessibility indicators for one city.
// Subcommands: run (full pipeline), synth (generate a synthetic city),
// validate (lint input files). Exit codes: 0 ok, 1 usage/config, 2 input data.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "proximity/pipeline.hpp"
#include "proximity/synth.hpp"

namespace {

using namespace proximity;

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec s;
    if (j.contains("city_id")) s.city_id = j.at("city_id").get<std::string>();
    if (j.contains("n_cbgs")) s.n_cbgs = j.at("n_cbgs").get<int>();
    if (j.contains("center"))
        s.center = GeoPoint(j.at("center").at("lat").get<double>(), j.at("center").at("lon").get<double>());
    if (j.contains("cbg_spacing_km")) s.cbg_spacing_km = j.at("cbg_spacing_km").get<double>();
    if (j.contains("background_counts")) {
        for (const auto& [k, v] : j.at("background_counts").items()) {
            auto cat = parse_category(k);
            if (!cat) throw ConfigError("unknown category '" + k + "' in background_counts");
            s.background_counts[*cat] = v.get<int>();
        }
    }
    if (j.contains("background_flows_per_cbg"))
        s.background_flows_per_cbg = j.at("background_flows_per_cbg").get<int>();
    if (j.contains("background_visits_per_flow"))
        s.background_visits_per_flow = j.at("background_visits_per_flow").get<long long>();
    if (j.contains("background_radius_km")) s.background_radius_km = j.at("background_radius_km").get<double>();
    if (j.contains("near_ring")) s.near_ring = j.at("near_ring").get<int>();
    if (j.contains("near_radius_km")) s.near_radius_km = j.at("near_radius_km").get<double>();
    if (j.contains("min_reach_km")) s.min_reach_km = j.at("min_reach_km").get<double>();
    if (j.contains("max_reach_km")) s.max_reach_km = j.at("max_reach_km").get<double>();
    if (j.contains("far_distance_km")) s.far_distance_km = j.at("far_distance_km").get<double>();
    if (j.contains("activities_per_cbg")) s.activities_per_cbg = j.at("activities_per_cbg").get<long long>();
    if (j.contains("near_fraction")) s.near_fraction = j.at("near_fraction").get<double>();
    if (j.contains("alt_capacity")) s.alt_capacity = j.at("alt_capacity").get<long long>();
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"15-minute-city accessibility audit"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "compute indicators, equity stats, and reports");
    std::string config_path, provider_str, modes_str, out_dir;
    double budget_min = -1;
    long long min_visits = -1;
    int workers = -1;
    long long seed = -1;
    run->add_option("--config", config_path, "JSON run configuration");
    run->add_option("--provider", provider_str, "fixed|network|polygons");
    run->add_option("--budget-min", budget_min, "travel-time budget in minutes");
    run->add_option("--modes", modes_str, "comma list, e.g. walk,cycle,transit,car");
    run->add_option("--min-visits", min_visits, "drop flows below this visit count");
    run->add_option("--workers", workers, "worker threads (default: cores, or $PROXIMITY_AUDIT_WORKERS)");
    run->add_option("--seed", seed, "run seed echoed into the report");
    run->add_option("--out", out_dir, "output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic city dataset");
    std::string synth_spec_path, synth_out;
    long long synth_seed = 0;
    synth->add_option("spec", synth_spec_path, "JSON synthesis spec")->required();
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output directory")->required();

    // validate
    auto* validate = app.add_subcommand("validate", "lint input files, exit 0 iff clean");
    std::string v_pois, v_cbgs, v_flows;
    long long v_min_visits = 5;
    validate->add_option("--pois", v_pois, "pois.csv")->required();
    validate->add_option("--cbgs", v_cbgs, "cbgs.csv")->required();
    validate->add_option("--flows", v_flows, "flows.csv")->required();
    validate->add_option("--min-visits", v_min_visits, "threshold for sub-threshold flow diagnostics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            RunConfig cfg;
            if (!config_path.empty()) cfg = load_config(config_path);
            // flags win over the config file
            if (!provider_str.empty()) {
                if (provider_str == "fixed") cfg.provider = ProviderKind::fixed;
                else if (provider_str == "network") cfg.provider = ProviderKind::network;
                else if (provider_str == "polygons") cfg.provider = ProviderKind::polygons;
                else throw ConfigError("unknown provider '" + provider_str + "'");
            }
            if (budget_min >= 0) cfg.budget_min = budget_min;
            if (!modes_str.empty()) {
                cfg.modes.clear();
                std::stringstream ss(modes_str);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    auto m = parse_mode(tok);
                    if (!m) throw ConfigError("unknown mode '" + tok + "'");
                    cfg.modes.push_back(*m);
                }
            }
            if (min_visits >= 0) cfg.min_visits = min_visits;
            if (workers >= 0) cfg.workers = workers;
            if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
            if (!out_dir.empty()) cfg.out_dir = out_dir;

            RunReport report = run_pipeline(cfg);
            std::printf("processed %d (cbg, mode) items, %d excluded, %zu warnings, %.1f ms\n",
                        report.cbgs_processed, report.cbgs_excluded, report.warnings.size(),
                        report.elapsed_ms);
            for (const auto& [name, digest] : report.digests)
                std::printf("  %s %s\n", digest.c_str(), name.c_str());
            return 0;
        }

        if (synth->parsed()) {
            std::ifstream in(synth_spec_path);
            if (!in) throw ConfigError("cannot open spec " + synth_spec_path);
            SynthSpec spec = synth_spec_from_json(nlohmann::json::parse(in));
            CityDataset ds = synth_city(spec, static_cast<uint64_t>(synth_seed));
            write_canonical(ds, synth_out);
            std::printf("wrote %zu POIs, %zu CBGs, %zu flows to %s\n", ds.pois.size(),
                        ds.cbgs.size(), ds.flows.size(), synth_out.c_str());
            return 0;
        }

        if (validate->parsed()) {
            InputPaths paths{v_pois, v_cbgs, v_flows};
            auto diags = validate_files(paths, QualityConfig{v_min_visits});
            for (const auto& d : diags)
                std::printf("%s:%zu: [%s] %s\n", d.file.c_str(), d.line, d.kind.c_str(),
                            d.message.c_str());
            std::printf("%zu issues\n", diags.size());
            return diags.empty() ? 0 : 2;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: {\"kind\":\"config\",\"message\":%s}\n",
                     nlohmann::json(std::string(e.what())).dump().c_str());
        return 1;
    } catch (const csv::ParseError& e) {
        std::fprintf(stderr, "error: {\"kind\":\"input\",\"message\":%s}\n",
                     nlohmann::json(std::string(e.what())).dump().c_str());
        return 2;
    } catch (const LoadError& e) {
        std::fprintf(stderr, "error: {\"kind\":\"input\",\"message\":%s}\n",
                     nlohmann::json(std::string(e.what())).dump().c_str());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: {\"kind\":\"internal\",\"message\":%s}\n",
                     nlohmann::json(std::string(e.what())).dump().c_str());
        return 2;
    }
    return 1;
}
