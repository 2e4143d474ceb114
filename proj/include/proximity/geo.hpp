#ifndef PROXIMITY_GEO_HPP
#define PROXIMITY_GEO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace proximity {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kKmPerDegLat = kEarthRadiusKm * 3.14159265358979323846 / 180.0;

inline double deg2rad(double d) { return d * 3.14159265358979323846 / 180.0; }

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    GeoPoint() = default;
    GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
        if (!std::isfinite(lat) || !std::isfinite(lon))
            throw std::invalid_argument("GeoPoint: coordinates must be finite");
        if (lat < -90.0 || lat > 90.0)
            throw std::invalid_argument("GeoPoint: lat out of [-90,90]");
        if (lon < -180.0 || lon > 180.0)
            throw std::invalid_argument("GeoPoint: lon out of [-180,180]");
    }

    bool operator==(const GeoPoint& o) const { return lat == o.lat && lon == o.lon; }
};

/// Great-circle distance on a sphere of radius 6371 km.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double dphi = deg2rad(b.lat - a.lat);
    const double dlam = deg2rad(b.lon - a.lon);
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Point at exactly d_km due north (negative: south) of p, by arc length.
inline GeoPoint offset_north(const GeoPoint& p, double d_km) {
    return GeoPoint(p.lat + d_km / kKmPerDegLat, p.lon);
}

/// Point at exactly d_km due east of p along the parallel, exact under the
/// haversine metric (solves 2R asin(cos(lat) sin(dlon/2)) = d for dlon).
inline GeoPoint offset_east(const GeoPoint& p, double d_km) {
    const double c = std::cos(deg2rad(p.lat));
    if (c <= 0.0) throw std::invalid_argument("offset_east: undefined at the poles");
    const double s = std::sin(d_km / (2.0 * kEarthRadiusKm)) / c;
    if (std::abs(s) > 1.0) throw std::invalid_argument("offset_east: distance too large for latitude");
    const double dlon = 2.0 * std::asin(s) * 180.0 / 3.14159265358979323846;
    return GeoPoint(p.lat, p.lon + (d_km >= 0 ? dlon : dlon));
}

/// Closed ring of >= 3 vertices; the closing edge last->first is implicit.
class PolygonRing {
public:
    explicit PolygonRing(std::vector<GeoPoint> vertices) : verts_(std::move(vertices)) {
        if (verts_.size() < 3)
            throw std::invalid_argument("PolygonRing: need at least 3 vertices");
        for (size_t i = 0; i + 1 < verts_.size(); ++i)
            if (verts_[i] == verts_[i + 1])
                throw std::invalid_argument("PolygonRing: consecutive duplicate vertex");
    }

    const std::vector<GeoPoint>& vertices() const { return verts_; }

    void bounds(double& min_lat, double& max_lat, double& min_lon, double& max_lon) const {
        min_lat = max_lat = verts_[0].lat;
        min_lon = max_lon = verts_[0].lon;
        for (const auto& v : verts_) {
            min_lat = std::min(min_lat, v.lat);
            max_lat = std::max(max_lat, v.lat);
            min_lon = std::min(min_lon, v.lon);
            max_lon = std::max(max_lon, v.lon);
        }
    }

private:
    std::vector<GeoPoint> verts_;
};

namespace detail {
// Is p on the segment a-b (planar lat/lon)?
inline bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if (std::abs(cross) > 1e-12) return false;
    return p.lon >= std::min(a.lon, b.lon) - 1e-12 && p.lon <= std::max(a.lon, b.lon) + 1e-12 &&
           p.lat >= std::min(a.lat, b.lat) - 1e-12 && p.lat <= std::max(a.lat, b.lat) + 1e-12;
}
}  // namespace detail

/// Even-odd rule in planar lat/lon space; boundary points count as inside.
inline bool point_in_polygon(const GeoPoint& p, const PolygonRing& ring) {
    const auto& v = ring.vertices();
    const size_t n = v.size();
    bool inside = false;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        if (detail::on_segment(p, v[j], v[i])) return true;
        const bool crosses = (v[i].lat > p.lat) != (v[j].lat > p.lat);
        if (crosses) {
            const double x = v[j].lon + (p.lat - v[j].lat) / (v[i].lat - v[j].lat) * (v[i].lon - v[j].lon);
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

/// Uniform grid over lat/lon. Cells prefilter; every query re-checks exactly,
/// so results are identical to a brute-force scan.
class SpatialGrid {
public:
    SpatialGrid() = default;

    SpatialGrid(const std::vector<std::pair<int, GeoPoint>>& points, double cell_size_deg)
        : cell_(cell_size_deg) {
        if (!(cell_ > 0.0)) throw std::invalid_argument("SpatialGrid: cell_size must be > 0");
        ids_.reserve(points.size());
        pts_.reserve(points.size());
        xyz_.reserve(points.size() * 3);
        for (const auto& [id, pt] : points) {
            const int slot = static_cast<int>(pts_.size());
            ids_.push_back(id);
            pts_.push_back(pt);
            append_unit(pt);
            cells_[key(pt)].push_back(slot);
        }
    }

    size_t size() const { return pts_.size(); }
    double cell_size() const { return cell_; }

    /// Ids with haversine_km(center, p) <= r_km, ascending by id.
    std::vector<int> query_radius(const GeoPoint& center, double r_km) const {
        if (r_km < 0.0) throw std::invalid_argument("query_radius: r must be >= 0");
        std::vector<int> out;
        const double pad_lat = r_km / kKmPerDegLat;
        const double lat_lo = center.lat - pad_lat;
        const double lat_hi = center.lat + pad_lat;
        // Narrowest parallel within the band bounds the longitude padding.
        const double max_abs_lat = std::min(90.0, std::max(std::abs(lat_lo), std::abs(lat_hi)));
        const double coslat = std::cos(deg2rad(max_abs_lat));
        const bool scan_all_lon = coslat < 1e-9;
        const double pad_lon = scan_all_lon ? 360.0 : pad_lat / coslat * 1.0000001;

        // Chord-distance prefilter on the unit sphere: monotonically equivalent
        // to the haversine test, so only points within a thin epsilon band of
        // the boundary need the exact trigonometric check.
        const double half =
            std::sin(std::min(r_km / (2.0 * kEarthRadiusKm), 3.14159265358979323846 / 2.0));
        const double thr = 4.0 * half * half;
        const double band = thr * 1e-9 + 1e-18;
        const double clat = std::cos(deg2rad(center.lat)), slat = std::sin(deg2rad(center.lat));
        const double clon = std::cos(deg2rad(center.lon)), slon = std::sin(deg2rad(center.lon));
        const double cx = clat * clon, cy = clat * slon, cz = slat;

        for_cells_in(lat_lo, lat_hi, center.lon - pad_lon, center.lon + pad_lon, [&](int slot) {
            const double* u = &xyz_[3 * slot];
            const double dx = u[0] - cx, dy = u[1] - cy, dz = u[2] - cz;
            const double d2 = dx * dx + dy * dy + dz * dz;
            if (d2 > thr + band) return;
            if (d2 < thr - band || haversine_km(center, pts_[slot]) <= r_km)
                out.push_back(ids_[slot]);
        });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Ids inside (or on) the ring, ascending by id.
    std::vector<int> query_polygon(const PolygonRing& ring) const {
        double lat_lo, lat_hi, lon_lo, lon_hi;
        ring.bounds(lat_lo, lat_hi, lon_lo, lon_hi);
        std::vector<int> out;
        for_cells_in(lat_lo, lat_hi, lon_lo, lon_hi, [&](int slot) {
            if (point_in_polygon(pts_[slot], ring)) out.push_back(ids_[slot]);
        });
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static int64_t floor_div(double v, double c) { return static_cast<int64_t>(std::floor(v / c)); }

    void append_unit(const GeoPoint& p) {
        const double clat = std::cos(deg2rad(p.lat)), slat = std::sin(deg2rad(p.lat));
        xyz_.push_back(clat * std::cos(deg2rad(p.lon)));
        xyz_.push_back(clat * std::sin(deg2rad(p.lon)));
        xyz_.push_back(slat);
    }

    uint64_t key(const GeoPoint& p) const {
        const int64_t r = floor_div(p.lat, cell_);
        const int64_t c = floor_div(p.lon, cell_);
        return (static_cast<uint64_t>(static_cast<uint32_t>(r)) << 32) |
               static_cast<uint64_t>(static_cast<uint32_t>(c));
    }

    template <typename Fn>
    void for_cells_in(double lat_lo, double lat_hi, double lon_lo, double lon_hi, Fn&& fn) const {
        if (pts_.empty()) return;
        const int64_t r0 = floor_div(lat_lo, cell_), r1 = floor_div(lat_hi, cell_);
        const int64_t c0 = floor_div(lon_lo, cell_), c1 = floor_div(lon_hi, cell_);
        const uint64_t span = static_cast<uint64_t>(r1 - r0 + 1) * static_cast<uint64_t>(c1 - c0 + 1);
        if (span >= cells_.size()) {
            for (const auto& [k, slots] : cells_)
                for (int s : slots) fn(s);
            return;
        }
        for (int64_t r = r0; r <= r1; ++r)
            for (int64_t c = c0; c <= c1; ++c) {
                const uint64_t k = (static_cast<uint64_t>(static_cast<uint32_t>(r)) << 32) |
                                   static_cast<uint64_t>(static_cast<uint32_t>(c));
                auto it = cells_.find(k);
                if (it == cells_.end()) continue;
                for (int s : it->second) fn(s);
            }
    }

    double cell_ = 1.0;
    std::vector<int> ids_;
    std::vector<GeoPoint> pts_;
    std::vector<double> xyz_;  // unit-sphere coordinates, 3 per point
    std::unordered_map<uint64_t, std::vector<int>> cells_;
};

inline SpatialGrid build_index(const std::vector<std::pair<int, GeoPoint>>& points, double cell_size_deg) {
    return SpatialGrid(points, cell_size_deg);
}

}  // namespace proximity

#endif  // PROXIMITY_GEO_HPP
