#ifndef PROXIMITY_DATASET_HPP
#define PROXIMITY_DATASET_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "proximity/csv.hpp"
#include "proximity/geo.hpp"

namespace proximity {

enum class FunctionCategory : int {
    restaurants = 0, service, religious, grocery, recreation, health, greenspace, education
};
inline constexpr int kNumCategories = 8;

inline const std::array<std::string, kNumCategories>& category_names() {
    static const std::array<std::string, kNumCategories> names = {
        "restaurants", "service", "religious", "grocery",
        "recreation", "health", "greenspace", "education"};
    return names;
}

inline const std::string& to_string(FunctionCategory c) {
    return category_names()[static_cast<int>(c)];
}

inline std::optional<FunctionCategory> parse_category(const std::string& s) {
    const auto& names = category_names();
    for (int i = 0; i < kNumCategories; ++i)
        if (names[i] == s) return static_cast<FunctionCategory>(i);
    return std::nullopt;
}

/// Lowercase, trim, collapse internal whitespace. Sub-category matching uses
/// exact equality on this normalized form.
inline std::string normalize_subcategory(const std::string& s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) { out += ' '; pending_space = false; }
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return out;
}

struct PoiRecord {
    std::string poi_id;
    GeoPoint location;
    FunctionCategory category = FunctionCategory::restaurants;
    std::string subcategory;       // as loaded
    std::string subcategory_norm;  // normalized matching key
    long long total_visits = 0;    // capacity proxy
    bool is_parent = false;

    bool operator==(const PoiRecord& o) const {
        return poi_id == o.poi_id && location == o.location && category == o.category &&
               subcategory == o.subcategory && total_visits == o.total_visits &&
               is_parent == o.is_parent;
    }
};

struct CbgRecord {
    std::string cbg_id;
    GeoPoint centroid;
    long long population = 0;
    std::optional<double> median_income;
    std::optional<double> pct_white, pct_black, pct_asian, pct_hispanic;

    bool has_complete_demographics() const {
        return median_income && pct_white && pct_black && pct_asian && pct_hispanic;
    }

    bool operator==(const CbgRecord& o) const {
        return cbg_id == o.cbg_id && centroid == o.centroid && population == o.population &&
               median_income == o.median_income && pct_white == o.pct_white &&
               pct_black == o.pct_black && pct_asian == o.pct_asian &&
               pct_hispanic == o.pct_hispanic;
    }
};

struct FlowRecord {
    std::string cbg_id;
    std::string poi_id;
    long long visits = 0;
    bool operator==(const FlowRecord& o) const {
        return cbg_id == o.cbg_id && poi_id == o.poi_id && visits == o.visits;
    }
};

struct QualityConfig {
    long long min_visits = 5;  // flows below this are dropped
};

class CityDataset {
public:
    std::string city_id;
    std::vector<PoiRecord> pois;    // sorted by poi_id
    std::vector<CbgRecord> cbgs;    // sorted by cbg_id
    std::vector<FlowRecord> flows;  // sorted by (cbg_id, poi_id)

    void rebuild_indexes() {
        poi_index_.clear();
        cbg_index_.clear();
        for (size_t i = 0; i < pois.size(); ++i) poi_index_[pois[i].poi_id] = static_cast<int>(i);
        for (size_t i = 0; i < cbgs.size(); ++i) cbg_index_[cbgs[i].cbg_id] = static_cast<int>(i);
        flow_begin_.assign(cbgs.size() + 1, 0);
        std::vector<int> counts(cbgs.size(), 0);
        for (const auto& f : flows) ++counts[cbg_index_.at(f.cbg_id)];
        for (size_t i = 0; i < cbgs.size(); ++i) flow_begin_[i + 1] = flow_begin_[i] + counts[i];
    }

    int poi_index(const std::string& id) const {
        auto it = poi_index_.find(id);
        return it == poi_index_.end() ? -1 : it->second;
    }
    int cbg_index(const std::string& id) const {
        auto it = cbg_index_.find(id);
        return it == cbg_index_.end() ? -1 : it->second;
    }

    /// Flows of one CBG as [begin,end) indices into flows (flows are sorted by cbg).
    std::pair<int, int> flow_range(int cbg_idx) const {
        return {flow_begin_[cbg_idx], flow_begin_[cbg_idx + 1]};
    }

    bool operator==(const CityDataset& o) const {
        return pois == o.pois && cbgs == o.cbgs && flows == o.flows;
    }

private:
    std::unordered_map<std::string, int> poi_index_;
    std::unordered_map<std::string, int> cbg_index_;
    std::vector<int> flow_begin_;
};

struct InputPaths {
    std::string pois;
    std::string cbgs;
    std::string flows;
};

struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double parse_double(const csv::Row& row, size_t col, const std::string& file) {
    try {
        size_t pos = 0;
        double v = std::stod(row.fields.at(col), &pos);
        if (pos != row.fields[col].size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw csv::ParseError(file, row.line, col + 1, "expected a number, got '" + row.fields.at(col) + "'");
    }
}

inline long long parse_int(const csv::Row& row, size_t col, const std::string& file) {
    try {
        size_t pos = 0;
        long long v = std::stoll(row.fields.at(col), &pos);
        if (pos != row.fields[col].size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw csv::ParseError(file, row.line, col + 1, "expected an integer, got '" + row.fields.at(col) + "'");
    }
}

inline std::optional<double> parse_opt_double(const csv::Row& row, size_t col, const std::string& file) {
    if (row.fields.at(col).empty()) return std::nullopt;
    return parse_double(row, col, file);
}

inline void require_header(const std::vector<csv::Row>& rows, const std::vector<std::string>& expected,
                           const std::string& file) {
    if (rows.empty() || rows[0].fields != expected) {
        std::string want;
        for (size_t i = 0; i < expected.size(); ++i) { if (i) want += ','; want += expected[i]; }
        throw csv::ParseError(file, 1, 1, "expected header '" + want + "'");
    }
}

inline void require_cols(const csv::Row& row, size_t n, const std::string& file) {
    if (row.fields.size() != n)
        throw csv::ParseError(file, row.line, row.fields.size() + 1,
                              "expected " + std::to_string(n) + " columns, got " +
                              std::to_string(row.fields.size()));
}

}  // namespace detail

inline const std::vector<std::string>& poi_header() {
    static const std::vector<std::string> h = {"poi_id", "lat", "lon", "category",
                                               "subcategory", "total_visits", "is_parent"};
    return h;
}
inline const std::vector<std::string>& cbg_header() {
    static const std::vector<std::string> h = {"cbg_id", "lat", "lon", "population", "median_income",
                                               "pct_white", "pct_black", "pct_asian", "pct_hispanic"};
    return h;
}
inline const std::vector<std::string>& flow_header() {
    static const std::vector<std::string> h = {"cbg_id", "poi_id", "visits"};
    return h;
}

inline PoiRecord parse_poi_row(const csv::Row& row, const std::string& file) {
    detail::require_cols(row, 7, file);
    PoiRecord p;
    p.poi_id = row.fields[0];
    if (p.poi_id.empty()) throw csv::ParseError(file, row.line, 1, "empty poi_id");
    double lat = detail::parse_double(row, 1, file);
    double lon = detail::parse_double(row, 2, file);
    try {
        p.location = GeoPoint(lat, lon);
    } catch (const std::exception& e) {
        throw csv::ParseError(file, row.line, 2, e.what());
    }
    auto cat = parse_category(row.fields[3]);
    if (!cat) throw csv::ParseError(file, row.line, 4, "unknown category '" + row.fields[3] + "'");
    p.category = *cat;
    p.subcategory = row.fields[4];
    p.subcategory_norm = normalize_subcategory(p.subcategory);
    if (p.subcategory_norm.empty()) throw csv::ParseError(file, row.line, 5, "empty subcategory");
    p.total_visits = detail::parse_int(row, 5, file);
    if (p.total_visits < 0) throw csv::ParseError(file, row.line, 6, "total_visits must be >= 0");
    const std::string& par = row.fields[6];
    if (par != "0" && par != "1") throw csv::ParseError(file, row.line, 7, "is_parent must be 0 or 1");
    p.is_parent = par == "1";
    return p;
}

inline CbgRecord parse_cbg_row(const csv::Row& row, const std::string& file) {
    detail::require_cols(row, 9, file);
    CbgRecord c;
    c.cbg_id = row.fields[0];
    if (c.cbg_id.empty()) throw csv::ParseError(file, row.line, 1, "empty cbg_id");
    double lat = detail::parse_double(row, 1, file);
    double lon = detail::parse_double(row, 2, file);
    try {
        c.centroid = GeoPoint(lat, lon);
    } catch (const std::exception& e) {
        throw csv::ParseError(file, row.line, 2, e.what());
    }
    c.population = detail::parse_int(row, 3, file);
    if (c.population < 0) throw csv::ParseError(file, row.line, 4, "population must be >= 0");
    c.median_income = detail::parse_opt_double(row, 4, file);
    auto frac = [&](size_t col) {
        auto v = detail::parse_opt_double(row, col, file);
        if (v && (*v < 0.0 || *v > 1.0))
            throw csv::ParseError(file, row.line, col + 1, "fraction out of [0,1]");
        return v;
    };
    c.pct_white = frac(5);
    c.pct_black = frac(6);
    c.pct_asian = frac(7);
    c.pct_hispanic = frac(8);
    return c;
}

inline FlowRecord parse_flow_row(const csv::Row& row, const std::string& file) {
    detail::require_cols(row, 3, file);
    FlowRecord f;
    f.cbg_id = row.fields[0];
    f.poi_id = row.fields[1];
    if (f.cbg_id.empty()) throw csv::ParseError(file, row.line, 1, "empty cbg_id");
    if (f.poi_id.empty()) throw csv::ParseError(file, row.line, 2, "empty poi_id");
    f.visits = detail::parse_int(row, 2, file);
    if (f.visits < 1) throw csv::ParseError(file, row.line, 3, "visits must be >= 1");
    return f;
}

/// Load and quality-filter one city. Parent POIs and their flows are dropped,
/// flows below min_visits are dropped, dangling references are an error.
inline CityDataset load_city(const InputPaths& paths, const QualityConfig& config = {},
                             const std::string& city_id = "city") {
    CityDataset ds;
    ds.city_id = city_id;

    auto poi_rows = csv::read_file(paths.pois);
    detail::require_header(poi_rows, poi_header(), paths.pois);
    std::unordered_set<std::string> parent_ids;
    std::unordered_set<std::string> seen_pois;
    for (size_t i = 1; i < poi_rows.size(); ++i) {
        PoiRecord p = parse_poi_row(poi_rows[i], paths.pois);
        if (!seen_pois.insert(p.poi_id).second)
            throw csv::ParseError(paths.pois, poi_rows[i].line, 1, "duplicate poi_id '" + p.poi_id + "'");
        if (p.is_parent) { parent_ids.insert(p.poi_id); continue; }
        ds.pois.push_back(std::move(p));
    }

    auto cbg_rows = csv::read_file(paths.cbgs);
    detail::require_header(cbg_rows, cbg_header(), paths.cbgs);
    std::unordered_set<std::string> seen_cbgs;
    for (size_t i = 1; i < cbg_rows.size(); ++i) {
        CbgRecord c = parse_cbg_row(cbg_rows[i], paths.cbgs);
        if (!seen_cbgs.insert(c.cbg_id).second)
            throw csv::ParseError(paths.cbgs, cbg_rows[i].line, 1, "duplicate cbg_id '" + c.cbg_id + "'");
        ds.cbgs.push_back(std::move(c));
    }

    auto flow_rows = csv::read_file(paths.flows);
    detail::require_header(flow_rows, flow_header(), paths.flows);
    std::vector<std::string> dangling;
    for (size_t i = 1; i < flow_rows.size(); ++i) {
        FlowRecord f = parse_flow_row(flow_rows[i], paths.flows);
        if (parent_ids.count(f.poi_id)) continue;  // parent POI flows go with the parent
        if (f.visits < config.min_visits) continue;
        if (!seen_cbgs.count(f.cbg_id)) dangling.push_back(f.cbg_id);
        else if (!seen_pois.count(f.poi_id)) dangling.push_back(f.poi_id);
        else ds.flows.push_back(std::move(f));
    }
    if (!dangling.empty()) {
        std::sort(dangling.begin(), dangling.end());
        dangling.erase(std::unique(dangling.begin(), dangling.end()), dangling.end());
        std::string msg = paths.flows + ": unresolved ids:";
        for (const auto& id : dangling) msg += " " + id;
        throw LoadError(msg);
    }

    std::sort(ds.pois.begin(), ds.pois.end(),
              [](const auto& a, const auto& b) { return a.poi_id < b.poi_id; });
    std::sort(ds.cbgs.begin(), ds.cbgs.end(),
              [](const auto& a, const auto& b) { return a.cbg_id < b.cbg_id; });
    std::sort(ds.flows.begin(), ds.flows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.cbg_id, a.poi_id) < std::tie(b.cbg_id, b.poi_id);
    });
    ds.rebuild_indexes();
    return ds;
}

inline std::string format_fixed9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

/// Canonical, byte-stable dump: sorted records, LF endings, 9-decimal floats.
inline void write_canonical(const CityDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto opt = [](const std::optional<double>& v) { return v ? format_fixed9(*v) : std::string(); };

    std::ofstream pf(fs::path(dir) / "pois.csv", std::ios::binary);
    pf << csv::join(poi_header());
    for (const auto& p : ds.pois)
        pf << csv::join({p.poi_id, format_fixed9(p.location.lat), format_fixed9(p.location.lon),
                         to_string(p.category), p.subcategory, std::to_string(p.total_visits),
                         p.is_parent ? "1" : "0"});

    std::ofstream cf(fs::path(dir) / "cbgs.csv", std::ios::binary);
    cf << csv::join(cbg_header());
    for (const auto& c : ds.cbgs)
        cf << csv::join({c.cbg_id, format_fixed9(c.centroid.lat), format_fixed9(c.centroid.lon),
                         std::to_string(c.population), opt(c.median_income), opt(c.pct_white),
                         opt(c.pct_black), opt(c.pct_asian), opt(c.pct_hispanic)});

    std::ofstream ff(fs::path(dir) / "flows.csv", std::ios::binary);
    ff << csv::join(flow_header());
    for (const auto& f : ds.flows)
        ff << csv::join({f.cbg_id, f.poi_id, std::to_string(f.visits)});
}

/// Fraction of essential POIs per function category. Sums to 1.
inline std::map<FunctionCategory, double> essential_share(const CityDataset& ds) {
    if (ds.pois.empty()) throw std::invalid_argument("essential_share: empty POI set");
    std::map<FunctionCategory, double> out;
    for (const auto& p : ds.pois) out[p.category] += 1.0;
    for (auto& [cat, v] : out) v /= static_cast<double>(ds.pois.size());
    return out;
}

// -- validation (collects diagnostics instead of throwing) -------------------

struct Diagnostic {
    std::string file;
    size_t line = 0;
    std::string kind;  // schema | duplicate | referential | parent_poi | sub_threshold
    std::string message;
};

/// Lint the three input files against the schemas and quality rules.
inline std::vector<Diagnostic> validate_files(const InputPaths& paths, const QualityConfig& config = {}) {
    std::vector<Diagnostic> diags;
    std::unordered_set<std::string> poi_ids, cbg_ids;

    auto scan = [&](const std::string& file, const std::vector<std::string>& header, auto&& per_row) {
        std::vector<csv::Row> rows;
        try {
            rows = csv::read_file(file);
            detail::require_header(rows, header, file);
        } catch (const csv::ParseError& e) {
            diags.push_back({e.file, e.line, "schema", e.what()});
            return;
        }
        for (size_t i = 1; i < rows.size(); ++i) {
            try {
                per_row(rows[i]);
            } catch (const csv::ParseError& e) {
                diags.push_back({e.file, e.line, "schema", e.what()});
            }
        }
    };

    scan(paths.pois, poi_header(), [&](const csv::Row& row) {
        PoiRecord p = parse_poi_row(row, paths.pois);
        if (!poi_ids.insert(p.poi_id).second)
            diags.push_back({paths.pois, row.line, "duplicate", "duplicate poi_id '" + p.poi_id + "'"});
        if (p.is_parent)
            diags.push_back({paths.pois, row.line, "parent_poi",
                             "parent POI '" + p.poi_id + "' will be excluded"});
    });
    scan(paths.cbgs, cbg_header(), [&](const csv::Row& row) {
        CbgRecord c = parse_cbg_row(row, paths.cbgs);
        if (!cbg_ids.insert(c.cbg_id).second)
            diags.push_back({paths.cbgs, row.line, "duplicate", "duplicate cbg_id '" + c.cbg_id + "'"});
    });
    scan(paths.flows, flow_header(), [&](const csv::Row& row) {
        FlowRecord f = parse_flow_row(row, paths.flows);
        if (!cbg_ids.count(f.cbg_id))
            diags.push_back({paths.flows, row.line, "referential",
                             "flow references unknown cbg_id '" + f.cbg_id + "'"});
        if (!poi_ids.count(f.poi_id))
            diags.push_back({paths.flows, row.line, "referential",
                             "flow references unknown poi_id '" + f.poi_id + "'"});
        if (f.visits < config.min_visits)
            diags.push_back({paths.flows, row.line, "sub_threshold",
                             "visits " + std::to_string(f.visits) + " below min_visits " +
                             std::to_string(config.min_visits)});
    });
    return diags;
}

}  // namespace proximity

#endif  // PROXIMITY_DATASET_HPP
