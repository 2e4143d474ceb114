#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "proximity/catchment.hpp"
#include "proximity/synth.hpp"
#include "testkit.hpp"

using namespace proximity;
namespace fs = std::filesystem;

namespace {

// small random city around a centroid-centred CBG
CityDataset random_city(testkit::Rng& rng, int n_pois, double spread_km = 12.0) {
    CityDataset ds;
    ds.city_id = "rand";
    CbgRecord cbg;
    cbg.cbg_id = "c0";
    cbg.centroid = GeoPoint(40.0, -100.0);
    cbg.population = 1000;
    ds.cbgs.push_back(cbg);
    for (int i = 0; i < n_pois; ++i) {
        PoiRecord p;
        p.poi_id = "p" + std::to_string(1000 + i);
        const double ang = rng.uniform() * 2 * 3.14159265358979323846;
        const double d = rng.uniform() * spread_km;
        p.location = offset_east(offset_north(cbg.centroid, d * std::sin(ang)), d * std::cos(ang));
        p.category = static_cast<FunctionCategory>(rng.below(8));
        p.subcategory = "s" + std::to_string(rng.below(5));
        p.subcategory_norm = p.subcategory;
        p.total_visits = 1 + rng.below(100);
        ds.pois.push_back(std::move(p));
    }
    std::sort(ds.pois.begin(), ds.pois.end(),
              [](const auto& a, const auto& b) { return a.poi_id < b.poi_id; });
    ds.rebuild_indexes();
    return ds;
}

}  // namespace

TEST_CASE("fixed-speed walk radius splits near from far") {
    CityDataset ds;
    CbgRecord cbg;
    cbg.cbg_id = "c0";
    cbg.centroid = GeoPoint(40.0, -100.0);
    ds.cbgs.push_back(cbg);
    PoiRecord near, far;
    near.poi_id = "near";
    near.location = offset_north(cbg.centroid, 1.0);
    near.subcategory_norm = near.subcategory = "x";
    far = near;
    far.poi_id = "zfar";
    far.location = offset_north(cbg.centroid, 1.5);
    ds.pois = {near, far};
    ds.rebuild_indexes();

    FixedSpeedProvider prov(ds);  // walk 5 km/h, 15 min -> 1.25 km
    Catchment c = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15.0));
    CHECK(c.reachable == std::vector<int>{0});
    CHECK(c.contains(0));
    CHECK_FALSE(c.contains(1));
    CHECK(c.dist_km(ds, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // degenerate budget: only coincident POIs
    PoiRecord at = near;
    at.poi_id = "at";
    at.location = cbg.centroid;
    ds.pois = {at, near, far};
    ds.rebuild_indexes();
    FixedSpeedProvider prov2(ds);
    Catchment tiny = prov2.compute(ds, 0, CatchmentSpec(Mode::walk, 1e-9));
    CHECK(tiny.reachable == std::vector<int>{0});
}

TEST_CASE("fixed-speed equals brute-force radius filter on a random city") {
    testkit::Rng rng(31);
    CityDataset ds = random_city(rng, 2000);
    FixedSpeedProvider prov(ds);
    std::vector<std::pair<int, GeoPoint>> pts;
    for (size_t i = 0; i < ds.pois.size(); ++i)
        pts.emplace_back(static_cast<int>(i), ds.pois[i].location);
    for (Mode m : {Mode::walk, Mode::cycle, Mode::transit, Mode::car}) {
        CatchmentSpec spec(m, 15.0);
        Catchment c = prov.compute(ds, 0, spec);
        CHECK(c.reachable == testkit::brute_radius(pts, ds.cbgs[0].centroid, prov.radius_km(spec)));
    }
}

TEST_CASE("budget monotonicity and default mode ordering") {
    testkit::Rng rng(32);
    CityDataset ds = random_city(rng, 500);
    FixedSpeedProvider prov(ds);
    auto subset = [](const std::vector<int>& a, const std::vector<int>& b) {
        return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    std::vector<int> prev;
    for (double budget : {5.0, 10.0, 15.0, 20.0, 30.0}) {
        auto cur = prov.compute(ds, 0, CatchmentSpec(Mode::cycle, budget)).reachable;
        CHECK(subset(prev, cur));
        prev = cur;
    }
    // defaults 5 < 15 < 20 < 40 km/h: walk within cycle within transit within car
    auto walk = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15)).reachable;
    auto cycle = prov.compute(ds, 0, CatchmentSpec(Mode::cycle, 15)).reachable;
    auto transit = prov.compute(ds, 0, CatchmentSpec(Mode::transit, 15)).reachable;
    auto car = prov.compute(ds, 0, CatchmentSpec(Mode::car, 15)).reachable;
    CHECK(subset(walk, cycle));
    CHECK(subset(walk, transit));
    CHECK(subset(cycle, transit));
    CHECK(subset(transit, car));
}

TEST_CASE("dist_km matches haversine for every POI") {
    testkit::Rng rng(33);
    CityDataset ds = random_city(rng, 200);
    FixedSpeedProvider prov(ds);
    Catchment c = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15));
    for (size_t i = 0; i < ds.pois.size(); ++i)
        CHECK(c.dist_km(ds, static_cast<int>(i)) ==
              haversine_km(ds.cbgs[0].centroid, ds.pois[i].location));
}

namespace {

// hand network: A -- B -- C path, 10 min per edge at walking speed
RoadNetwork path_network() {
    RoadNetwork net;
    GeoPoint a(40.0, -100.0);
    net.nodes = {{"A", a}, {"B", offset_east(a, 5.0 / 6.0)}, {"C", offset_east(a, 10.0 / 6.0)}};
    auto edge = [&](int u, int v) {
        RoadNetwork::Edge e;
        e.from = u;
        e.to = v;
        e.length_m = 5000.0 / 6.0;  // 10 min at 5 km/h
        e.allowed = {true, true, true, true};
        e.speed_kmh = {5, 5, 5, 5};
        return e;
    };
    net.edges = {edge(0, 1), edge(1, 0), edge(1, 2), edge(2, 1)};
    return net;
}

CityDataset pois_at_nodes(const RoadNetwork& net) {
    CityDataset ds;
    CbgRecord cbg;
    cbg.cbg_id = "c0";
    cbg.centroid = net.nodes[0].location;
    ds.cbgs.push_back(cbg);
    for (const auto& n : net.nodes) {
        PoiRecord p;
        p.poi_id = "poi_" + n.id;
        p.location = n.location;
        p.subcategory_norm = p.subcategory = "x";
        ds.pois.push_back(std::move(p));
    }
    std::sort(ds.pois.begin(), ds.pois.end(),
              [](const auto& a, const auto& b) { return a.poi_id < b.poi_id; });
    ds.rebuild_indexes();
    return ds;
}

}  // namespace

TEST_CASE("network isochrone on a hand-evaluated path") {
    RoadNetwork net = path_network();
    CityDataset ds = pois_at_nodes(net);
    NetworkProvider prov(net, ds);

    Catchment c = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15.0));
    std::vector<std::string> ids;
    for (int i : c.reachable) ids.push_back(ds.pois[i].poi_id);
    CHECK(ids == std::vector<std::string>{"poi_A", "poi_B"});

    // saturation: budget beyond the network diameter reaches everything
    Catchment all = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 120.0));
    CHECK(all.reachable.size() == 3);
}

TEST_CASE("origin snapping farther than max snap yields an empty catchment with a warning") {
    RoadNetwork net = path_network();
    CityDataset ds = pois_at_nodes(net);
    ds.cbgs[0].centroid = offset_north(net.nodes[0].location, 2.0);  // 2 km off-network
    ds.rebuild_indexes();
    NetworkProvider prov(net, ds, SpeedTable{}, 500.0);
    Catchment c = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15.0));
    CHECK(c.reachable.empty());
    CHECK_FALSE(c.warning.empty());
}

TEST_CASE("network isochrone equals all-pairs oracle on random graphs") {
    testkit::Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + rng.below(49);
        RoadNetwork net;
        GeoPoint base(40.0, -100.0);
        for (int i = 0; i < n; ++i) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "n%03d", i);
            net.nodes.push_back({buf, offset_east(offset_north(base, rng.uniform(-3, 3)),
                                                  rng.uniform(-3, 3))});
        }
        testkit::OracleGraph g;
        g.n = n;
        g.edge_time.assign(kNumModes, std::vector<std::vector<double>>(
                                          n, std::vector<double>(n, std::numeric_limits<double>::infinity())));
        const int m_edges = n + rng.below(3 * n);
        for (int e = 0; e < m_edges; ++e) {
            RoadNetwork::Edge edge;
            edge.from = rng.below(n);
            edge.to = rng.below(n);
            edge.length_m = 100.0 + rng.uniform() * 2000.0;
            for (int m = 0; m < kNumModes; ++m) {
                edge.allowed[m] = rng.below(4) != 0;
                edge.speed_kmh[m] = 2.0 + rng.uniform() * 40.0;
                if (edge.allowed[m]) {
                    const double t = edge.length_m / 1000.0 / edge.speed_kmh[m] * 60.0;
                    g.edge_time[m][edge.from][edge.to] = std::min(g.edge_time[m][edge.from][edge.to], t);
                }
            }
            net.edges.push_back(edge);
        }
        // one POI per node, exactly on it
        CityDataset ds;
        CbgRecord cbg;
        cbg.cbg_id = "c0";
        const int origin = rng.below(n);
        cbg.centroid = net.nodes[origin].location;
        ds.cbgs.push_back(cbg);
        for (int i = 0; i < n; ++i) {
            PoiRecord p;
            p.poi_id = net.nodes[i].id;  // same ordering as nodes
            p.location = net.nodes[i].location;
            p.subcategory_norm = p.subcategory = "x";
            ds.pois.push_back(p);
        }
        ds.rebuild_indexes();

        NetworkProvider prov(net, ds);
        const double budget = rng.uniform(1.0, 40.0);
        const Mode mode = static_cast<Mode>(rng.below(kNumModes));
        Catchment c = prov.compute(ds, 0, CatchmentSpec(mode, budget));
        auto expected = testkit::isochrone_oracle(g, static_cast<int>(mode), origin, budget);
        CHECK(c.reachable == expected);
    }
}

TEST_CASE("network files load and invalid rows are rejected") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "proximity_net_test";
    fs::create_directories(dir);
    std::ofstream(dir / "nodes.csv") << "node_id,lat,lon\nA,40.0,-100.0\nB,40.01,-100.0\n";
    std::ofstream(dir / "edges.csv")
        << "from,to,length_m,modes,speed_walk,speed_cycle,speed_transit,speed_car\n"
        << "A,B,1100,wbtc,5,15,20,40\n";
    RoadNetwork net = load_network((dir / "nodes.csv").string(), (dir / "edges.csv").string());
    CHECK(net.nodes.size() == 2);
    CHECK(net.edges.size() == 1);
    CHECK(net.edges[0].allowed[0]);

    std::ofstream(dir / "bad_edges.csv")
        << "from,to,length_m,modes,speed_walk,speed_cycle,speed_transit,speed_car\n"
        << "A,Z,1100,w,5,15,20,40\n";
    CHECK_THROWS(load_network((dir / "nodes.csv").string(), (dir / "bad_edges.csv").string()));
    fs::remove_all(dir);
}

TEST_CASE("polygon provider containment") {
    CityDataset ds;
    CbgRecord cbg;
    cbg.cbg_id = "c0";
    cbg.centroid = GeoPoint(0.5, 0.5);
    ds.cbgs.push_back(cbg);
    PoiRecord in, out;
    in.poi_id = "in";
    in.location = GeoPoint(0.5, 0.5);
    in.subcategory_norm = in.subcategory = "x";
    out = in;
    out.poi_id = "out";
    out.location = GeoPoint(5.0, 5.0);
    ds.pois = {in, out};
    ds.rebuild_indexes();

    std::map<IsolineKey, std::vector<PolygonRing>> isolines;
    isolines[{"c0", Mode::walk, 15}] = {
        PolygonRing({GeoPoint(0, 0), GeoPoint(0, 1), GeoPoint(1, 1), GeoPoint(1, 0)})};
    PolygonProvider prov(isolines, ds);
    Catchment c = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15.0));
    CHECK(c.reachable == std::vector<int>{0});

    CHECK_THROWS_AS(prov.compute(ds, 0, CatchmentSpec(Mode::car, 15.0)), ProviderError);
}

TEST_CASE("polygon provider equals brute-force scan against a concave ring") {
    testkit::Rng rng(55);
    CityDataset ds;
    CbgRecord cbg;
    cbg.cbg_id = "c0";
    cbg.centroid = GeoPoint(0.0, 0.0);
    ds.cbgs.push_back(cbg);
    std::vector<std::pair<int, GeoPoint>> pts;
    for (int i = 0; i < 1000; ++i) {
        PoiRecord p;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%04d", i);
        p.poi_id = buf;
        p.location = GeoPoint(rng.uniform(-1.5, 3.5), rng.uniform(-1.5, 3.5));
        p.subcategory_norm = p.subcategory = "x";
        ds.pois.push_back(p);
    }
    ds.rebuild_indexes();
    for (size_t i = 0; i < ds.pois.size(); ++i)
        pts.emplace_back(static_cast<int>(i), ds.pois[i].location);

    PolygonRing u({GeoPoint(0, 0), GeoPoint(0, 3), GeoPoint(2, 3), GeoPoint(2, 2),
                   GeoPoint(1, 2), GeoPoint(1, 1), GeoPoint(2, 1), GeoPoint(2, 0)});
    std::map<IsolineKey, std::vector<PolygonRing>> isolines;
    isolines[{"c0", Mode::walk, 15}] = {u};
    PolygonProvider prov(isolines, ds);
    Catchment c = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15.0));
    CHECK(c.reachable == testkit::brute_polygon(pts, u));
}

TEST_CASE("geojson isolines parse, including holes") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "proximity_geojson_test";
    fs::create_directories(dir);
    std::ofstream(dir / "iso.geojson") << R"({
      "type": "FeatureCollection",
      "features": [{
        "type": "Feature",
        "properties": {"cbg_id": "c0", "mode": "walk", "budget_min": 15},
        "geometry": {"type": "Polygon", "coordinates": [
          [[0,0],[4,0],[4,4],[0,4],[0,0]],
          [[1,1],[3,1],[3,3],[1,3],[1,1]]
        ]}
      }]
    })";
    auto isolines = load_isolines((dir / "iso.geojson").string());
    REQUIRE(isolines.size() == 1);

    CityDataset ds;
    CbgRecord cbg;
    cbg.cbg_id = "c0";
    cbg.centroid = GeoPoint(0.0, 0.0);
    ds.cbgs.push_back(cbg);
    PoiRecord hole, rim;
    hole.poi_id = "hole";
    hole.location = GeoPoint(2.0, 2.0);  // inside the interior ring
    hole.subcategory_norm = hole.subcategory = "x";
    rim = hole;
    rim.poi_id = "rim";
    rim.location = GeoPoint(0.5, 0.5);
    ds.pois = {hole, rim};
    ds.rebuild_indexes();
    PolygonProvider prov(isolines, ds);
    Catchment c = prov.compute(ds, 0, CatchmentSpec(Mode::walk, 15.0));
    CHECK(c.reachable == std::vector<int>{1});
    fs::remove_all(dir);
}
