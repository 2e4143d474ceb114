#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "proximity/geo.hpp"
#include "testkit.hpp"

using namespace proximity;

TEST_CASE("haversine basics") {
    GeoPoint a(10.0, 20.0);
    CHECK(haversine_km(a, a) == 0.0);
    // one degree of arc along the equator
    CHECK(haversine_km(GeoPoint(0, 0), GeoPoint(0, 1)) ==
          doctest::Approx(3.14159265358979323846 / 180.0 * 6371.0).epsilon(0).scale(1).epsilon(1e-7));
    CHECK(haversine_km(GeoPoint(0, 0), GeoPoint(0, 1)) == doctest::Approx(111.1949).epsilon(1e-5));
}

TEST_CASE("haversine symmetric and bounded on random pairs") {
    testkit::Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        GeoPoint a(rng.uniform(-89, 89), rng.uniform(-179, 179));
        GeoPoint b(rng.uniform(-89, 89), rng.uniform(-179, 179));
        const double ab = haversine_km(a, b);
        CHECK(ab == haversine_km(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 3.14159265358979323846 * 6371.0 + 1e-9);
    }
}

TEST_CASE("exact offsets") {
    GeoPoint p(40.0, -100.0);
    CHECK(haversine_km(p, offset_north(p, 3.0)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(haversine_km(p, offset_east(p, 3.0)) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("GeoPoint validation") {
    CHECK_THROWS(GeoPoint(91.0, 0.0));
    CHECK_THROWS(GeoPoint(0.0, 181.0));
    CHECK_THROWS(GeoPoint(std::nan(""), 0.0));
}

static PolygonRing unit_square() {
    return PolygonRing({GeoPoint(0, 0), GeoPoint(0, 1), GeoPoint(1, 1), GeoPoint(1, 0)});
}

TEST_CASE("point in polygon: square") {
    CHECK(point_in_polygon(GeoPoint(0.5, 0.5), unit_square()));
    CHECK_FALSE(point_in_polygon(GeoPoint(0.5, 1.5), unit_square()));
    // boundary counts as inside
    CHECK(point_in_polygon(GeoPoint(0.0, 0.5), unit_square()));
    CHECK(point_in_polygon(GeoPoint(0.0, 0.0), unit_square()));
}

TEST_CASE("point in the notch of a concave U is outside") {
    // U-shape opening north: notch between the prongs
    PolygonRing u({GeoPoint(0, 0), GeoPoint(0, 3), GeoPoint(2, 3), GeoPoint(2, 2),
                   GeoPoint(1, 2), GeoPoint(1, 1), GeoPoint(2, 1), GeoPoint(2, 0)});
    GeoPoint notch(1.5, 1.5);
    CHECK_FALSE(point_in_polygon(notch, u));
    CHECK(point_in_polygon(notch, u) == testkit::winding_inside(notch, u.vertices()));
    CHECK(point_in_polygon(GeoPoint(0.5, 1.5), u));
}

TEST_CASE("degenerate rings rejected") {
    CHECK_THROWS(PolygonRing({GeoPoint(0, 0), GeoPoint(1, 1)}));
    CHECK_THROWS(PolygonRing({GeoPoint(0, 0), GeoPoint(0, 0), GeoPoint(1, 1)}));
}

TEST_CASE("polygon membership matches winding oracle on random convex and star rings") {
    testkit::Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 3 + rng.below(10);
        const bool star = trial % 2 == 1;
        std::vector<GeoPoint> verts;
        for (int i = 0; i < n; ++i) {
            const double ang = 2.0 * 3.14159265358979323846 * i / n;
            const double r = star ? (i % 2 ? 0.4 : 1.0) : 0.5 + 0.5 * rng.uniform();
            verts.emplace_back(r * std::sin(ang), r * std::cos(ang));
        }
        PolygonRing ring(verts);
        GeoPoint p(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
        CHECK(point_in_polygon(p, ring) == testkit::winding_inside(p, verts));
    }
}

TEST_CASE("grid queries equal brute force") {
    testkit::Rng rng(99);
    std::vector<std::pair<int, GeoPoint>> pts;
    for (int i = 0; i < 10000; ++i)
        pts.emplace_back(i, GeoPoint(40.0 + rng.uniform(-0.5, 0.5), -100.0 + rng.uniform(-0.5, 0.5)));
    SpatialGrid grid = build_index(pts, 0.02);

    for (int q = 0; q < 50; ++q) {
        GeoPoint center(40.0 + rng.uniform(-0.5, 0.5), -100.0 + rng.uniform(-0.5, 0.5));
        const double r = rng.uniform(0.0, 30.0);
        CHECK(grid.query_radius(center, r) == testkit::brute_radius(pts, center, r));
    }
    for (int q = 0; q < 50; ++q) {
        const double lat = 40.0 + rng.uniform(-0.4, 0.4);
        const double lon = -100.0 + rng.uniform(-0.4, 0.4);
        const double h = rng.uniform(0.01, 0.3);
        PolygonRing ring({GeoPoint(lat, lon), GeoPoint(lat + h, lon + h / 2),
                          GeoPoint(lat + h / 3, lon + h), GeoPoint(lat - h / 2, lon + h / 2)});
        CHECK(grid.query_polygon(ring) == testkit::brute_polygon(pts, ring));
    }
}

TEST_CASE("grid edge cases") {
    SpatialGrid empty = build_index({}, 0.1);
    CHECK(empty.query_radius(GeoPoint(0, 0), 100.0).empty());

    std::vector<std::pair<int, GeoPoint>> one = {{7, GeoPoint(1.0, 2.0)}};
    SpatialGrid g = build_index(one, 0.1);
    CHECK(g.query_radius(GeoPoint(1.0, 2.0), 0.0) == std::vector<int>{7});
    CHECK(g.query_radius(GeoPoint(1.0, 2.1), 0.0).empty());
    CHECK_THROWS(build_index(one, 0.0));
    CHECK_THROWS(g.query_radius(GeoPoint(0, 0), -1.0));
}
