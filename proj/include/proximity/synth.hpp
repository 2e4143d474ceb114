#ifndef PROXIMITY_SYNTH_HPP
#define PROXIMITY_SYNTH_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "proximity/dataset.hpp"
#include "proximity/geo.hpp"

namespace proximity {

/// Plan for a generated city. CBGs sit on a coarse grid. When near_ring > 0,
/// each CBG gets a planted ring of POIs inside near_radius_km (the first one
/// visited, the rest unvisited same-subcategory alternatives) and one far POI
/// beyond max_reach_km, so reachability is known by construction.
struct SynthSpec {
    std::string city_id = "synthcity";
    int n_cbgs = 10;
    GeoPoint center{40.0, -100.0};
    double cbg_spacing_km = 5.0;

    // background scatter (no planted structure)
    std::map<FunctionCategory, int> background_counts;
    int background_flows_per_cbg = 0;
    long long background_visits_per_flow = 10;
    double background_radius_km = 5.0;

    // planted structure
    int near_ring = 0;
    double near_radius_km = 1.0;
    double min_reach_km = 1.25;   // every mode reaches at least this far
    double max_reach_km = 10.0;   // no mode reaches farther
    double far_distance_km = 15.0;
    long long activities_per_cbg = 200;
    double near_fraction = 1.0;
    long long alt_capacity = 1000000;
};

namespace detail {

// xorshift-free splitmix-based uniform; byte-stable regardless of libstdc++
// distribution internals.
class SynthRng {
public:
    explicit SynthRng(uint64_t seed) : state_(seed + 0x9E3779B97f4A7C15ULL) {}
    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97f4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

private:
    uint64_t state_;
};

inline std::string padded(const std::string& prefix, int i, int width = 6) {
    std::string n = std::to_string(i);
    return prefix + std::string(width > static_cast<int>(n.size()) ? width - n.size() : 0, '0') + n;
}

}  // namespace detail

/// Deterministic pure function of (spec, seed).
inline CityDataset synth_city(const SynthSpec& spec, uint64_t seed) {
    if (spec.n_cbgs <= 0) throw std::invalid_argument("synth_city: n_cbgs must be > 0");
    if (spec.near_ring > 0) {
        if (spec.far_distance_km <= spec.max_reach_km)
            throw std::invalid_argument("synth_city: far cluster inside the maximum mode reach");
        if (spec.near_radius_km >= spec.min_reach_km)
            throw std::invalid_argument("synth_city: near ring outside the minimum mode reach");
        if (spec.near_fraction < 0.0 || spec.near_fraction > 1.0)
            throw std::invalid_argument("synth_city: near_fraction out of [0,1]");
        if (spec.activities_per_cbg <= 0)
            throw std::invalid_argument("synth_city: activities_per_cbg must be > 0");
    }

    detail::SynthRng rng(seed);
    CityDataset ds;
    ds.city_id = spec.city_id;

    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.n_cbgs))));
    for (int i = 0; i < spec.n_cbgs; ++i) {
        const int r = i / cols, c = i % cols;
        GeoPoint p = offset_east(offset_north(spec.center, r * spec.cbg_spacing_km),
                                 c * spec.cbg_spacing_km);
        CbgRecord cbg;
        cbg.cbg_id = detail::padded("cbg", i);
        cbg.centroid = p;
        cbg.population = 600 + static_cast<long long>(rng.next_below(2401));
        cbg.median_income = 20000.0 + rng.next_double() * 100000.0;
        double rem = 1.0;
        auto draw = [&](double cap) { double v = rng.next_double() * cap; rem -= v; return v; };
        cbg.pct_white = draw(rem);
        cbg.pct_black = draw(rem);
        cbg.pct_asian = draw(rem);
        cbg.pct_hispanic = draw(rem);
        ds.cbgs.push_back(std::move(cbg));
    }

    int poi_seq = 0;
    auto next_poi_id = [&] { return detail::padded("poi", poi_seq++); };

    // background scatter around the city center
    for (const auto& [cat, count] : spec.background_counts) {
        for (int i = 0; i < count; ++i) {
            const double ang = rng.next_double() * 2.0 * 3.14159265358979323846;
            const double d = std::sqrt(rng.next_double()) * spec.background_radius_km;
            PoiRecord poi;
            poi.poi_id = next_poi_id();
            poi.location = offset_east(offset_north(spec.center, d * std::sin(ang)), d * std::cos(ang));
            poi.category = cat;
            poi.subcategory = to_string(cat) + " general " + std::to_string(static_cast<int>(rng.next_below(20)));
            poi.subcategory_norm = normalize_subcategory(poi.subcategory);
            poi.total_visits = 5 + static_cast<long long>(rng.next_below(500));
            ds.pois.push_back(std::move(poi));
        }
    }
    const int n_background = static_cast<int>(ds.pois.size());

    if (spec.background_flows_per_cbg > 0 && n_background > 0) {
        for (const auto& cbg : ds.cbgs) {
            std::map<std::string, long long> visits;  // dedupe (cbg,poi)
            for (int k = 0; k < spec.background_flows_per_cbg; ++k)
                visits[ds.pois[rng.next_below(n_background)].poi_id] += spec.background_visits_per_flow;
            for (const auto& [pid, v] : visits) ds.flows.push_back({cbg.cbg_id, pid, v});
        }
    }

    if (spec.near_ring > 0) {
        const long long near_visits =
            static_cast<long long>(std::llround(spec.near_fraction * static_cast<double>(spec.activities_per_cbg)));
        const long long far_visits = spec.activities_per_cbg - near_visits;
        for (size_t ci = 0; ci < ds.cbgs.size(); ++ci) {
            const auto& cbg = ds.cbgs[ci];
            // ring POIs at distinct distances d*(i+1)/ring, alternating N/S
            std::vector<std::string> ring_ids;
            for (int i = 0; i < spec.near_ring; ++i) {
                const double d = spec.near_radius_km * (i + 1) / spec.near_ring;
                PoiRecord poi;
                poi.poi_id = next_poi_id();
                poi.location = offset_north(cbg.centroid, i % 2 == 0 ? d : -d);
                poi.category = i == 0 ? FunctionCategory::grocery : FunctionCategory::service;
                poi.subcategory = i == 0 ? "homestead market" : "outpost depot";
                poi.subcategory_norm = normalize_subcategory(poi.subcategory);
                poi.total_visits = i == 0 ? std::max<long long>(near_visits, 1) : spec.alt_capacity;
                ring_ids.push_back(poi.poi_id);
                ds.pois.push_back(std::move(poi));
            }
            // far POI, unique distance per CBG so clusters never coincide
            PoiRecord far;
            far.poi_id = next_poi_id();
            far.location = offset_east(cbg.centroid, spec.far_distance_km + 0.01 * static_cast<double>(ci));
            far.category = FunctionCategory::service;
            far.subcategory = "outpost depot";
            far.subcategory_norm = normalize_subcategory(far.subcategory);
            far.total_visits = std::max<long long>(far_visits, 1);
            if (near_visits > 0) ds.flows.push_back({cbg.cbg_id, ring_ids[0], near_visits});
            if (far_visits > 0) ds.flows.push_back({cbg.cbg_id, far.poi_id, far_visits});
            ds.pois.push_back(std::move(far));
        }
    }

    std::sort(ds.pois.begin(), ds.pois.end(),
              [](const auto& a, const auto& b) { return a.poi_id < b.poi_id; });
    std::sort(ds.flows.begin(), ds.flows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.cbg_id, a.poi_id) < std::tie(b.cbg_id, b.poi_id);
    });
    ds.rebuild_indexes();
    return ds;
}

}  // namespace proximity

#endif  // PROXIMITY_SYNTH_HPP
