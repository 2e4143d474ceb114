#ifndef PROXIMITY_INDICATORS_HPP
#define PROXIMITY_INDICATORS_HPP

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "proximity/catchment.hpp"
#include "proximity/dataset.hpp"

namespace proximity {

/// Grams CO2 per person-kilometer.
struct EmissionFactors {
    double car = 197.0;
    double transit = 105.0;
    double walk = 26.0;
    double cycle = 21.0;

    double operator[](Mode m) const {
        switch (m) {
            case Mode::walk: return walk;
            case Mode::cycle: return cycle;
            case Mode::transit: return transit;
            case Mode::car: return car;
        }
        return car;
    }
    bool valid() const { return car > 0 && transit > 0 && walk > 0 && cycle > 0; }
};

struct SubcatKey {
    FunctionCategory category;
    std::string subcategory;  // normalized
    bool operator<(const SubcatKey& o) const {
        return std::tie(category, subcategory) < std::tie(o.category, o.subcategory);
    }
};

/// One CBG's activities under one catchment, split by reachability and
/// (category, subcategory). Distances are per-activity centroid-POI km summed
/// over visits.
struct ActivityLedger {
    struct Bucket {
        long long act_within = 0;
        long long act_out = 0;
        double dist_within_km = 0.0;
        double dist_out_km = 0.0;
        // out-of-reach flows, needed to displace farthest-first
        std::vector<std::tuple<double, int, long long>> out_flows;  // (per-activity km, poi idx, visits)
    };

    std::string cbg_id;
    Mode mode = Mode::walk;
    std::map<SubcatKey, Bucket> buckets;
    long long act_city = 0;
    long long act_within_total = 0;
    double dist_city_km = 0.0;
    double dist_within_total_km = 0.0;
    double dist_out_total_km = 0.0;
};

inline ActivityLedger build_ledger(const CityDataset& ds, const Catchment& catchment) {
    ActivityLedger led;
    led.cbg_id = catchment.cbg_id;
    led.mode = catchment.spec.mode;
    const int cbg_idx = ds.cbg_index(catchment.cbg_id);
    auto [fb, fe] = ds.flow_range(cbg_idx);
    for (int fi = fb; fi < fe; ++fi) {
        const auto& flow = ds.flows[fi];
        const int pi = ds.poi_index(flow.poi_id);
        const auto& poi = ds.pois[pi];
        const double d = catchment.dist_km(ds, pi);
        auto& b = led.buckets[{poi.category, poi.subcategory_norm}];
        led.act_city += flow.visits;
        led.dist_city_km += d * flow.visits;
        if (catchment.contains(pi)) {
            b.act_within += flow.visits;
            b.dist_within_km += d * flow.visits;
            led.act_within_total += flow.visits;
            led.dist_within_total_km += d * flow.visits;
        } else {
            b.act_out += flow.visits;
            b.dist_out_km += d * flow.visits;
            led.dist_out_total_km += d * flow.visits;
            b.out_flows.emplace_back(d, pi, flow.visits);
        }
    }
    return led;
}

/// Reassignment of out-of-reach activities to in-reach, unvisited POIs of the
/// same sub-category, capped by each POI's capacity proxy.
struct SubstitutionPlan {
    struct Assignment {
        SubcatKey subcat;
        int poi_idx = -1;
        long long count = 0;
        double dist_km = 0.0;  // per activity, centroid to the alternative
    };
    std::string cbg_id;
    Mode mode = Mode::walk;
    std::vector<Assignment> assignments;
    std::array<long long, kNumCategories> act_alternative{};     // per category j
    std::array<double, kNumCategories> dist_alternative_km{};    // per category j, summed over activities
    // per category: prorated displaced distance Sum_j (act_alt_j/act_out_j)*dist_out_j
    std::array<double, kNumCategories> displaced_dist_km{};

    long long total_substituted() const {
        long long t = 0;
        for (auto v : act_alternative) t += v;
        return t;
    }
};

/// Greedy nearest-first fill at sub-category granularity. Per (category,
/// subcategory): candidates are reachable POIs of that subcategory with no
/// flow from this CBG, taken in ascending centroid distance (ties by poi_id);
/// displaced activities are taken farthest-first.
inline SubstitutionPlan plan_substitution(const CityDataset& ds, const Catchment& catchment,
                                          const ActivityLedger& ledger) {
    SubstitutionPlan plan;
    plan.cbg_id = ledger.cbg_id;
    plan.mode = ledger.mode;

    // sub-categories with displaced demand; ledger map order keeps them sorted
    std::vector<std::pair<const SubcatKey*, const ActivityLedger::Bucket*>> demand;
    bool category_hit[kNumCategories] = {};
    for (const auto& [key, bucket] : ledger.buckets)
        if (bucket.act_out > 0) {
            demand.emplace_back(&key, &bucket);
            category_hit[static_cast<int>(key.category)] = true;
        }
    if (demand.empty()) return plan;

    const int cbg_idx = ds.cbg_index(ledger.cbg_id);
    std::vector<int> visited;
    auto [fb, fe] = ds.flow_range(cbg_idx);
    for (int fi = fb; fi < fe; ++fi) visited.push_back(ds.poi_index(ds.flows[fi].poi_id));
    std::sort(visited.begin(), visited.end());

    // reachable unvisited POIs, gathered only for the demanded sub-categories
    std::vector<std::vector<int>> candidates(demand.size());
    for (int pi : catchment.reachable) {
        const auto& poi = ds.pois[pi];
        if (!category_hit[static_cast<int>(poi.category)]) continue;
        const auto it = std::lower_bound(
            demand.begin(), demand.end(), poi, [](const auto& d, const PoiRecord& p) {
                return std::tie(d.first->category, d.first->subcategory) <
                       std::tie(p.category, p.subcategory_norm);
            });
        if (it == demand.end() || it->first->category != poi.category ||
            it->first->subcategory != poi.subcategory_norm)
            continue;
        if (std::binary_search(visited.begin(), visited.end(), pi)) continue;
        candidates[it - demand.begin()].push_back(pi);
    }

    for (size_t di = 0; di < demand.size(); ++di) {
        const SubcatKey& key = *demand[di].first;
        const ActivityLedger::Bucket& bucket = *demand[di].second;
        std::vector<int>& cand = candidates[di];
        if (cand.empty()) continue;
        std::vector<std::pair<double, int>> by_dist;
        by_dist.reserve(cand.size());
        for (int pi : cand) by_dist.emplace_back(catchment.dist_km(ds, pi), pi);
        std::sort(by_dist.begin(), by_dist.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return ds.pois[a.second].poi_id < ds.pois[b.second].poi_id;
        });
        for (size_t i = 0; i < cand.size(); ++i) cand[i] = by_dist[i].second;

        // displaced activities farthest-first
        auto out_flows = bucket.out_flows;
        std::sort(out_flows.begin(), out_flows.end(), [&](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
            return ds.pois[std::get<1>(a)].poi_id < ds.pois[std::get<1>(b)].poi_id;
        });

        const int j = static_cast<int>(key.category);
        size_t ci = 0;
        long long cap_left = ds.pois[cand[0]].total_visits;
        for (const auto& [dist, poi, visits] : out_flows) {
            long long remaining = visits;
            while (remaining > 0 && ci < cand.size()) {
                if (cap_left == 0) {
                    if (++ci >= cand.size()) break;
                    cap_left = ds.pois[cand[ci]].total_visits;
                    continue;
                }
                const long long take = std::min(remaining, cap_left);
                const double alt_d = catchment.dist_km(ds, cand[ci]);
                plan.assignments.push_back({key, cand[ci], take, alt_d});
                plan.act_alternative[j] += take;
                plan.dist_alternative_km[j] += alt_d * take;
                cap_left -= take;
                remaining -= take;
            }
            if (ci >= cand.size()) break;
        }
    }

    // prorated displaced distance per category (Eq. 4 / Eq. 5 numerator term)
    std::array<long long, kNumCategories> act_out_j{};
    std::array<double, kNumCategories> dist_out_j{};
    for (const auto& [key, bucket] : ledger.buckets) {
        act_out_j[static_cast<int>(key.category)] += bucket.act_out;
        dist_out_j[static_cast<int>(key.category)] += bucket.dist_out_km;
    }
    for (int j = 0; j < kNumCategories; ++j)
        if (act_out_j[j] > 0)
            plan.displaced_dist_km[j] = static_cast<double>(plan.act_alternative[j]) /
                                        static_cast<double>(act_out_j[j]) * dist_out_j[j];
    return plan;
}

inline std::optional<double> pct_act_within(const ActivityLedger& ledger) {
    if (ledger.act_city == 0) return std::nullopt;
    return static_cast<double>(ledger.act_within_total) / static_cast<double>(ledger.act_city);
}

inline std::optional<double> pct_act_satisfiable(const ActivityLedger& ledger,
                                                 const SubstitutionPlan& plan) {
    if (ledger.act_city == 0) return std::nullopt;
    return static_cast<double>(ledger.act_within_total + plan.total_substituted()) /
           static_cast<double>(ledger.act_city);
}

inline std::optional<double> pct_reduced_dist(const ActivityLedger& ledger,
                                              const SubstitutionPlan& plan) {
    if (ledger.dist_city_km <= 0.0) return std::nullopt;
    double displaced = 0.0, alternative = 0.0;
    for (int j = 0; j < kNumCategories; ++j) {
        displaced += plan.displaced_dist_km[j];
        alternative += plan.dist_alternative_km[j];
    }
    return (displaced - alternative) / ledger.dist_city_km;
}

inline std::optional<double> pct_reduced_carbon(const ActivityLedger& ledger,
                                                const SubstitutionPlan& plan,
                                                const EmissionFactors& factors, Mode mode) {
    const double carbon_m = factors[mode];
    const double denom =
        ledger.dist_out_total_km * factors.car + ledger.dist_within_total_km * carbon_m;
    if (denom <= 0.0) return std::nullopt;
    double num = 0.0;
    for (int j = 0; j < kNumCategories; ++j)
        num += plan.displaced_dist_km[j] * factors.car - plan.dist_alternative_km[j] * carbon_m;
    return num / denom;
}

inline long long count_accessible_pois(const Catchment& catchment, const CityDataset&) {
    // every cataloged POI is essential (closed 8-category set)
    return static_cast<long long>(catchment.reachable.size());
}

struct IndicatorSet {
    long long num_poi = 0;
    std::optional<double> pct_act_15min;
    std::optional<double> pct_act_sat_15min;
    std::optional<double> pct_reduced_dist;
    std::optional<double> pct_reduced_carbon;
};

struct IndicatorRow {
    std::string cbg_id;
    Mode mode = Mode::walk;
    IndicatorSet values;
    bool excluded = false;  // act_city == 0
    std::string warning;
};

struct ComputeResult {
    std::vector<IndicatorRow> rows;  // ordered by (cbg_id, mode)
    std::vector<std::string> errors;  // per-CBG provider failures
};

inline IndicatorRow compute_one(const CityDataset& ds, const CatchmentProvider& provider,
                                int cbg_idx, const CatchmentSpec& spec,
                                const EmissionFactors& factors) {
    IndicatorRow row;
    row.cbg_id = ds.cbgs[cbg_idx].cbg_id;
    row.mode = spec.mode;
    Catchment c = provider.compute(ds, cbg_idx, spec);
    row.warning = c.warning;
    row.values.num_poi = count_accessible_pois(c, ds);
    ActivityLedger led = build_ledger(ds, c);
    if (led.act_city == 0) {
        row.excluded = true;
        return row;
    }
    SubstitutionPlan plan = plan_substitution(ds, c, led);
    row.values.pct_act_15min = pct_act_within(led);
    row.values.pct_act_sat_15min = pct_act_satisfiable(led, plan);
    row.values.pct_reduced_dist = pct_reduced_dist(led, plan);
    row.values.pct_reduced_carbon = pct_reduced_carbon(led, plan, factors, spec.mode);
    return row;
}

/// Whole-city indicator table; parallel over (CBG, mode), deterministic order.
inline ComputeResult compute_all(const CityDataset& ds, const CatchmentProvider& provider,
                                 const std::vector<CatchmentSpec>& specs,
                                 const EmissionFactors& factors, int workers = 1) {
    struct Item { int cbg_idx; int spec_idx; };
    std::vector<Item> items;
    for (size_t c = 0; c < ds.cbgs.size(); ++c)
        for (size_t s = 0; s < specs.size(); ++s)
            items.push_back({static_cast<int>(c), static_cast<int>(s)});

    ComputeResult res;
    res.rows.resize(items.size());
    std::vector<std::string> errors(items.size());
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
            const auto& it = items[i];
            try {
                res.rows[i] = compute_one(ds, provider, it.cbg_idx, specs[it.spec_idx], factors);
            } catch (const std::exception& e) {
                res.rows[i].cbg_id = ds.cbgs[it.cbg_idx].cbg_id;
                res.rows[i].mode = specs[it.spec_idx].mode;
                res.rows[i].excluded = true;
                errors[i] = res.rows[i].cbg_id + "/" + to_string(specs[it.spec_idx].mode) + ": " + e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (!e.empty()) res.errors.push_back(std::move(e));

    std::sort(res.rows.begin(), res.rows.end(), [](const IndicatorRow& a, const IndicatorRow& b) {
        if (a.cbg_id != b.cbg_id) return a.cbg_id < b.cbg_id;
        return static_cast<int>(a.mode) < static_cast<int>(b.mode);
    });
    return res;
}

/// Capacity audit over a plan: assigned per alternative POI must not exceed
/// its capacity proxy. Returns the number of violations.
inline int audit_plan_capacity(const CityDataset& ds, const SubstitutionPlan& plan) {
    std::map<int, long long> assigned;
    for (const auto& a : plan.assignments) assigned[a.poi_idx] += a.count;
    int violations = 0;
    for (const auto& [pi, count] : assigned)
        if (count > ds.pois[pi].total_visits) ++violations;
    return violations;
}

}  // namespace proximity

#endif  // PROXIMITY_INDICATORS_HPP
