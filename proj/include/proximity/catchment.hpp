#ifndef PROXIMITY_CATCHMENT_HPP
#define PROXIMITY_CATCHMENT_HPP

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proximity/dataset.hpp"
#include "proximity/geo.hpp"

namespace proximity {

enum class Mode : int { walk = 0, cycle, transit, car };
inline constexpr int kNumModes = 4;

inline const std::array<std::string, kNumModes>& mode_names() {
    static const std::array<std::string, kNumModes> names = {"walk", "cycle", "transit", "car"};
    return names;
}
inline const std::string& to_string(Mode m) { return mode_names()[static_cast<int>(m)]; }
inline std::optional<Mode> parse_mode(const std::string& s) {
    const auto& names = mode_names();
    for (int i = 0; i < kNumModes; ++i)
        if (names[i] == s) return static_cast<Mode>(i);
    return std::nullopt;
}

struct CatchmentSpec {
    Mode mode = Mode::walk;
    double budget_min = 15.0;

    CatchmentSpec() = default;
    CatchmentSpec(Mode m, double budget) : mode(m), budget_min(budget) {
        if (!(budget_min > 0.0)) throw std::invalid_argument("CatchmentSpec: budget must be > 0");
    }
};

struct SpeedTable {
    std::array<double, kNumModes> kmh = {5.0, 15.0, 20.0, 40.0};  // walk, cycle, transit, car
    double operator[](Mode m) const { return kmh[static_cast<int>(m)]; }
    double& operator[](Mode m) { return kmh[static_cast<int>(m)]; }
};

/// Which POIs one CBG reaches under one (mode, budget). Distances are
/// straight-line centroid-to-POI km for every POI, reachable or not.
struct Catchment {
    std::string cbg_id;
    CatchmentSpec spec;
    GeoPoint origin;                 // CBG centroid
    std::vector<int> reachable;      // poi indices, ascending
    std::string warning;             // nonempty when the provider degraded

    bool contains(int poi_idx) const {
        return std::binary_search(reachable.begin(), reachable.end(), poi_idx);
    }
    double dist_km(const CityDataset& ds, int poi_idx) const {
        return haversine_km(origin, ds.pois[poi_idx].location);
    }
};

struct ProviderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class CatchmentProvider {
public:
    virtual ~CatchmentProvider() = default;
    virtual Catchment compute(const CityDataset& ds, int cbg_idx, const CatchmentSpec& spec) const = 0;
};

namespace detail {
inline SpatialGrid poi_grid(const CityDataset& ds) {
    std::vector<std::pair<int, GeoPoint>> pts;
    pts.reserve(ds.pois.size());
    for (size_t i = 0; i < ds.pois.size(); ++i)
        pts.emplace_back(static_cast<int>(i), ds.pois[i].location);
    // cell roughly 1 km at mid latitudes
    return SpatialGrid(pts, 0.01);
}
}  // namespace detail

/// Reachable = within speed * budget straight-line km. Desk-scale stand-in
/// for an isoline service.
class FixedSpeedProvider : public CatchmentProvider {
public:
    explicit FixedSpeedProvider(const CityDataset& ds, SpeedTable speeds = {})
        : speeds_(speeds), grid_(detail::poi_grid(ds)) {}

    Catchment compute(const CityDataset& ds, int cbg_idx, const CatchmentSpec& spec) const override {
        Catchment c;
        c.cbg_id = ds.cbgs[cbg_idx].cbg_id;
        c.spec = spec;
        c.origin = ds.cbgs[cbg_idx].centroid;
        const double radius_km = speeds_[spec.mode] * spec.budget_min / 60.0;
        c.reachable = grid_.query_radius(c.origin, radius_km);
        return c;
    }

    double radius_km(const CatchmentSpec& spec) const { return speeds_[spec.mode] * spec.budget_min / 60.0; }

private:
    SpeedTable speeds_;
    SpatialGrid grid_;
};

// -- road network -------------------------------------------------------------

struct RoadNetwork {
    struct Node {
        std::string id;
        GeoPoint location;
    };
    struct Edge {
        int from = 0, to = 0;
        double length_m = 0.0;
        std::array<bool, kNumModes> allowed{};
        std::array<double, kNumModes> speed_kmh{};
    };
    std::vector<Node> nodes;  // sorted by id
    std::vector<Edge> edges;

    int node_index(const std::string& id) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                                   [](const Node& n, const std::string& s) { return n.id < s; });
        if (it == nodes.end() || it->id != id) return -1;
        return static_cast<int>(it - nodes.begin());
    }
};

/// nodes.csv: node_id,lat,lon; edges.csv: from,to,length_m,modes,speed_walk,
/// speed_cycle,speed_transit,speed_car with modes a subset of "wbtc".
inline RoadNetwork load_network(const std::string& nodes_path, const std::string& edges_path) {
    RoadNetwork net;
    auto node_rows = csv::read_file(nodes_path);
    detail::require_header(node_rows, {"node_id", "lat", "lon"}, nodes_path);
    for (size_t i = 1; i < node_rows.size(); ++i) {
        const auto& row = node_rows[i];
        detail::require_cols(row, 3, nodes_path);
        RoadNetwork::Node n;
        n.id = row.fields[0];
        try {
            n.location = GeoPoint(detail::parse_double(row, 1, nodes_path),
                                  detail::parse_double(row, 2, nodes_path));
        } catch (const std::invalid_argument& e) {
            throw csv::ParseError(nodes_path, row.line, 2, e.what());
        }
        net.nodes.push_back(std::move(n));
    }
    std::sort(net.nodes.begin(), net.nodes.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });

    auto edge_rows = csv::read_file(edges_path);
    detail::require_header(edge_rows, {"from", "to", "length_m", "modes", "speed_walk",
                                       "speed_cycle", "speed_transit", "speed_car"},
                           edges_path);
    for (size_t i = 1; i < edge_rows.size(); ++i) {
        const auto& row = edge_rows[i];
        detail::require_cols(row, 8, edges_path);
        RoadNetwork::Edge e;
        e.from = net.node_index(row.fields[0]);
        e.to = net.node_index(row.fields[1]);
        if (e.from < 0 || e.to < 0)
            throw csv::ParseError(edges_path, row.line, 1, "edge references unknown node");
        e.length_m = detail::parse_double(row, 2, edges_path);
        if (e.length_m < 0) throw csv::ParseError(edges_path, row.line, 3, "negative length");
        for (char c : row.fields[3]) {
            switch (c) {
                case 'w': e.allowed[0] = true; break;
                case 'b': e.allowed[1] = true; break;
                case 't': e.allowed[2] = true; break;
                case 'c': e.allowed[3] = true; break;
                default: throw csv::ParseError(edges_path, row.line, 4, "modes must be a subset of wbtc");
            }
        }
        for (int m = 0; m < kNumModes; ++m) {
            e.speed_kmh[m] = detail::parse_double(row, 4 + m, edges_path);
            if (e.allowed[m] && !(e.speed_kmh[m] > 0.0))
                throw csv::ParseError(edges_path, row.line, 5 + m, "speed must be > 0 where a mode is allowed");
        }
        net.edges.push_back(e);
    }
    return net;
}

/// Budget-limited least-travel-time search from the node nearest the CBG
/// centroid, ties broken by ascending node index. Snap legs move at the mode's
/// walking speed for walk/cycle/transit, mode speed for car.
class NetworkProvider : public CatchmentProvider {
public:
    NetworkProvider(RoadNetwork net, const CityDataset& ds, SpeedTable snap_speeds = {},
                    double max_snap_m = 500.0)
        : net_(std::move(net)), snap_speeds_(snap_speeds), max_snap_m_(max_snap_m) {
        if (net_.nodes.empty()) throw std::invalid_argument("NetworkProvider: empty network");
        std::vector<std::pair<int, GeoPoint>> pts;
        for (size_t i = 0; i < net_.nodes.size(); ++i)
            pts.emplace_back(static_cast<int>(i), net_.nodes[i].location);
        node_grid_ = SpatialGrid(pts, 0.01);
        adj_.assign(net_.nodes.size(), {});
        for (size_t i = 0; i < net_.edges.size(); ++i) adj_[net_.edges[i].from].push_back(static_cast<int>(i));
        // snap every POI once; reused for every (cbg, mode)
        poi_snap_node_.resize(ds.pois.size());
        poi_snap_km_.resize(ds.pois.size());
        for (size_t i = 0; i < ds.pois.size(); ++i) {
            auto [node, km] = nearest_node(ds.pois[i].location);
            poi_snap_node_[i] = node;
            poi_snap_km_[i] = km;
        }
    }

    Catchment compute(const CityDataset& ds, int cbg_idx, const CatchmentSpec& spec) const override {
        Catchment c;
        c.cbg_id = ds.cbgs[cbg_idx].cbg_id;
        c.spec = spec;
        c.origin = ds.cbgs[cbg_idx].centroid;

        auto [origin_node, origin_km] = nearest_node(c.origin);
        const double snap_kmh = snap_speed(spec.mode);
        if (origin_km * 1000.0 > max_snap_m_) {
            c.warning = "origin snaps " + std::to_string(origin_km * 1000.0) +
                        " m from the network (max " + std::to_string(max_snap_m_) + " m); empty catchment";
            return c;
        }
        const double origin_leg_min = origin_km / snap_kmh * 60.0;
        std::vector<double> time = dijkstra(origin_node, spec, spec.budget_min - origin_leg_min);

        for (size_t i = 0; i < poi_snap_node_.size(); ++i) {
            const double t = time[poi_snap_node_[i]];
            if (t == kInf) continue;
            const double leg = poi_snap_km_[i] / snap_kmh * 60.0;
            if (origin_leg_min + t + leg <= spec.budget_min + 1e-12)
                c.reachable.push_back(static_cast<int>(i));
        }
        return c;
    }

    /// Node travel times from an origin node, capped at budget_min.
    std::vector<double> node_times(int origin_node, const CatchmentSpec& spec, double budget_min) const {
        return dijkstra(origin_node, spec, budget_min);
    }

    const RoadNetwork& network() const { return net_; }
    std::pair<int, double> nearest_node(const GeoPoint& p) const {
        // grow the search radius until a node is found; the grid re-checks exactly
        for (double r = 0.5; ; r *= 2.0) {
            auto ids = node_grid_.query_radius(p, r);
            if (!ids.empty()) {
                int best = -1;
                double best_km = std::numeric_limits<double>::infinity();
                for (int id : ids) {
                    double d = haversine_km(p, net_.nodes[id].location);
                    if (d < best_km || (d == best_km && id < best)) { best = id; best_km = d; }
                }
                return {best, best_km};
            }
            if (r > 4.0e4) return {-1, std::numeric_limits<double>::infinity()};
        }
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    double snap_speed(Mode m) const {
        return m == Mode::car ? snap_speeds_[Mode::car] : snap_speeds_[Mode::walk];
    }

    std::vector<double> dijkstra(int origin, const CatchmentSpec& spec, double budget_min) const {
        const int m = static_cast<int>(spec.mode);
        std::vector<double> time(net_.nodes.size(), kInf);
        if (budget_min < 0) return time;
        using Item = std::pair<double, int>;  // (time, node), node ascending on ties
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        time[origin] = 0.0;
        pq.emplace(0.0, origin);
        while (!pq.empty()) {
            auto [t, u] = pq.top();
            pq.pop();
            if (t > time[u]) continue;
            for (int ei : adj_[u]) {
                const auto& e = net_.edges[ei];
                if (!e.allowed[m]) continue;
                const double t2 = t + e.length_m / 1000.0 / e.speed_kmh[m] * 60.0;
                if (t2 > budget_min + 1e-12) continue;
                if (t2 < time[e.to]) {
                    time[e.to] = t2;
                    pq.emplace(t2, e.to);
                }
            }
        }
        return time;
    }

    RoadNetwork net_;
    SpeedTable snap_speeds_;
    double max_snap_m_;
    SpatialGrid node_grid_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> poi_snap_node_;
    std::vector<double> poi_snap_km_;
};

// -- isoline polygons ---------------------------------------------------------

struct IsolineKey {
    std::string cbg_id;
    Mode mode = Mode::walk;
    int budget_min = 15;
    bool operator<(const IsolineKey& o) const {
        return std::tie(cbg_id, mode, budget_min) < std::tie(o.cbg_id, o.mode, o.budget_min);
    }
};

/// GeoJSON FeatureCollection; features carry properties cbg_id, mode,
/// budget_min and Polygon/MultiPolygon geometry ([lon, lat] positions).
inline std::map<IsolineKey, std::vector<PolygonRing>> load_isolines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.value("type", "") != "FeatureCollection")
        throw std::runtime_error(path + ": expected a GeoJSON FeatureCollection");

    auto parse_ring = [&](const nlohmann::json& coords) {
        std::vector<GeoPoint> verts;
        for (const auto& pos : coords)
            verts.emplace_back(pos.at(1).get<double>(), pos.at(0).get<double>());
        // GeoJSON repeats the first vertex at the end; our rings close implicitly
        if (verts.size() >= 2 && verts.front() == verts.back()) verts.pop_back();
        return PolygonRing(std::move(verts));
    };

    std::map<IsolineKey, std::vector<PolygonRing>> out;
    for (const auto& f : doc.at("features")) {
        const auto& props = f.at("properties");
        IsolineKey key;
        key.cbg_id = props.at("cbg_id").get<std::string>();
        auto m = parse_mode(props.at("mode").get<std::string>());
        if (!m) throw std::runtime_error(path + ": unknown mode in isoline properties");
        key.mode = *m;
        key.budget_min = props.at("budget_min").get<int>();
        const auto& geom = f.at("geometry");
        const std::string type = geom.at("type").get<std::string>();
        auto& rings = out[key];
        if (type == "Polygon") {
            for (const auto& ring : geom.at("coordinates")) rings.push_back(parse_ring(ring));
        } else if (type == "MultiPolygon") {
            for (const auto& poly : geom.at("coordinates"))
                for (const auto& ring : poly) rings.push_back(parse_ring(ring));
        } else {
            throw std::runtime_error(path + ": unsupported geometry type " + type);
        }
    }
    return out;
}

/// Containment against imported isolines; even-odd across all rings, so holes
/// (interior rings) subtract.
class PolygonProvider : public CatchmentProvider {
public:
    PolygonProvider(std::map<IsolineKey, std::vector<PolygonRing>> isolines, const CityDataset& ds)
        : isolines_(std::move(isolines)), grid_(detail::poi_grid(ds)) {}

    Catchment compute(const CityDataset& ds, int cbg_idx, const CatchmentSpec& spec) const override {
        Catchment c;
        c.cbg_id = ds.cbgs[cbg_idx].cbg_id;
        c.spec = spec;
        c.origin = ds.cbgs[cbg_idx].centroid;

        IsolineKey key{c.cbg_id, spec.mode, static_cast<int>(spec.budget_min)};
        auto it = isolines_.find(key);
        if (it == isolines_.end())
            throw ProviderError("no isoline for (" + key.cbg_id + ", " + to_string(spec.mode) +
                                ", " + std::to_string(key.budget_min) + " min)");

        // candidates from the index per ring; exact even-odd over all rings
        std::vector<int> candidates;
        for (const auto& ring : it->second) {
            auto ids = grid_.query_polygon(ring);
            candidates.insert(candidates.end(), ids.begin(), ids.end());
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        for (int idx : candidates) {
            int crossings = 0;
            for (const auto& ring : it->second)
                if (point_in_polygon(ds.pois[idx].location, ring)) ++crossings;
            if (crossings % 2 == 1) c.reachable.push_back(idx);
        }
        return c;
    }

private:
    std::map<IsolineKey, std::vector<PolygonRing>> isolines_;
    SpatialGrid grid_;
};

}  // namespace proximity

#endif  // PROXIMITY_CATCHMENT_HPP
