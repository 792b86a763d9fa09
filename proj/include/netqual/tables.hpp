#pragma once

// Register ingest: firm-level company records, director affiliations,
// country aggregates and country indicator panels.
//
// All parsers take a ColumnMap so files with differently named columns can
// be loaded without rewriting them, apply a strict-by-default duplicate
// policy (--lenient switches to last-occurrence-wins), and report what they
// skipped in ParseStats.  Canonical dumps are sorted by primary key with
// fixed number formatting, so dump -> parse -> dump is byte-stable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "netqual/csv.hpp"
#include "netqual/errors.hpp"
#include "netqual/util.hpp"

namespace netqual {

struct CompanyRecord {
    std::string firm_id;
    std::string country;
    std::optional<double> revenue_usd;
    std::optional<std::int64_t> employees;
    std::optional<std::string> guo_id;
    std::optional<double> market_cap_usd;
};

struct AffiliationRecord {
    std::string director_id;
    std::string firm_id;
    std::string role;
};

struct CountryAggregate {
    std::string country;
    std::int64_t firm_count = 0;
    std::optional<double> total_revenue_usd;
    // Registered firm counts per employee band, when the source provides them.
    std::map<std::string, std::int64_t> size_class_counts;
};

// Employee bands used for coverage-by-size reporting and the optional
// aggregate columns carrying official counts per band.
inline constexpr std::array<const char*, 5> kSizeClassLabels = {
    "<10", "10-19", "20-49", "50-249", ">=250"};
inline constexpr std::array<const char*, 5> kSizeClassColumns = {
    "sc_lt10", "sc_10_19", "sc_20_49", "sc_50_249", "sc_ge250"};

inline int size_class_of(std::int64_t employees) {
    if (employees < 10) return 0;
    if (employees < 20) return 1;
    if (employees < 50) return 2;
    if (employees < 250) return 3;
    return 4;
}

struct IndicatorTable {
    std::vector<std::string> codes;         // sorted ascending
    std::vector<std::string> countries;     // sorted ascending
    std::vector<std::vector<std::optional<double>>> values; // [country][code]
    std::set<std::string> log_applied;

    std::optional<std::size_t> country_row(const std::string& country) const {
        auto it = std::lower_bound(countries.begin(), countries.end(), country);
        if (it == countries.end() || *it != country) return std::nullopt;
        return static_cast<std::size_t>(it - countries.begin());
    }
    std::optional<std::size_t> code_col(const std::string& code) const {
        auto it = std::lower_bound(codes.begin(), codes.end(), code);
        if (it == codes.end() || *it != code) return std::nullopt;
        return static_cast<std::size_t>(it - codes.begin());
    }
};

struct ParseStats {
    std::size_t rows_read = 0;
    std::size_t rows_rejected = 0;
    std::size_t duplicates = 0;
    std::size_t pairs_deduped = 0;
    std::size_t dangling_dropped = 0;
    std::size_t log_dropped = 0;
    std::vector<std::string> warnings;

    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

// Renames between the canonical field names used throughout the toolkit and
// the actual column headers of an input file.  Spelled as
// "field=column,field=column"; unmapped fields use their canonical name.
class ColumnMap {
public:
    ColumnMap() = default;

    static ColumnMap parse(const std::string& spec) {
        ColumnMap m;
        if (trim(spec).empty()) return m;
        for (const auto& item : split(spec, ',')) {
            const auto kv = split(item, '=');
            if (kv.size() != 2 || trim(kv[0]).empty() || trim(kv[1]).empty())
                throw SchemaError("bad column mapping entry '" + item + "'");
            m.overrides_[trim(kv[0])] = trim(kv[1]);
        }
        return m;
    }

    std::string col(const std::string& field) const {
        auto it = overrides_.find(field);
        return it == overrides_.end() ? field : it->second;
    }

private:
    std::map<std::string, std::string> overrides_;
};

namespace detail {

inline std::optional<std::string> opt_str(const std::string& raw) {
    std::string t = trim(raw);
    if (t.empty()) return std::nullopt;
    return t;
}

// Numeric cell: blank means absent, junk means absent plus a warning.
inline std::optional<double> num_cell(const std::string& raw, std::size_t line,
                                      const char* field, ParseStats& stats) {
    if (trim(raw).empty()) return std::nullopt;
    auto v = parse_double(raw);
    if (!v)
        stats.warn("line " + std::to_string(line) + ": unparseable " + field + " '" +
                   trim(raw) + "' treated as absent");
    return v;
}

inline std::optional<std::int64_t> int_cell(const std::string& raw, std::size_t line,
                                            const char* field, ParseStats& stats) {
    if (trim(raw).empty()) return std::nullopt;
    auto v = parse_int(raw);
    if (!v)
        stats.warn("line " + std::to_string(line) + ": unparseable " + field + " '" +
                   trim(raw) + "' treated as absent");
    return v;
}

} // namespace detail

inline std::vector<CompanyRecord> parse_companies(const std::string& path,
                                                  const ColumnMap& map = {},
                                                  bool lenient = false,
                                                  ParseStats* stats_out = nullptr) {
    const CsvTable csv = read_csv(path);
    ParseStats stats;
    const std::size_t c_id = csv.column(map.col("firm_id"));
    const std::size_t c_country = csv.column(map.col("country"));
    const std::size_t c_rev = csv.column(map.col("revenue_usd"));
    const std::size_t c_emp = csv.column(map.col("employees"));
    const std::size_t c_guo = csv.column(map.col("guo_id"));
    const std::size_t c_cap = csv.column(map.col("market_cap_usd"));

    std::map<std::string, std::size_t> seen; // firm_id -> index in out
    std::vector<CompanyRecord> out;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const std::size_t line = csv.line_numbers[r];
        ++stats.rows_read;
        if (row.size() != csv.header.size()) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": expected " +
                       std::to_string(csv.header.size()) + " fields, got " +
                       std::to_string(row.size()) + "; row rejected");
            continue;
        }
        CompanyRecord rec;
        rec.firm_id = trim(row[c_id]);
        if (rec.firm_id.empty()) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": empty firm_id; row rejected");
            continue;
        }
        rec.country = trim(row[c_country]);
        rec.revenue_usd = detail::num_cell(row[c_rev], line, "revenue_usd", stats);
        rec.employees = detail::int_cell(row[c_emp], line, "employees", stats);
        rec.guo_id = detail::opt_str(row[c_guo]);
        rec.market_cap_usd = detail::num_cell(row[c_cap], line, "market_cap_usd", stats);

        auto it = seen.find(rec.firm_id);
        if (it != seen.end()) {
            ++stats.duplicates;
            if (!lenient)
                throw DuplicateKeyError("duplicate firm_id '" + rec.firm_id + "' at line " +
                                        std::to_string(line) + " of '" + path + "'");
            stats.warn("line " + std::to_string(line) + ": duplicate firm_id '" +
                       rec.firm_id + "'; last occurrence wins");
            out[it->second] = std::move(rec);
            continue;
        }
        seen.emplace(rec.firm_id, out.size());
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(),
              [](const CompanyRecord& a, const CompanyRecord& b) { return a.firm_id < b.firm_id; });
    if (stats_out) *stats_out = std::move(stats);
    return out;
}

// Affiliations are deduplicated on (director_id, firm_id); rows pointing at
// firms absent from `companies` are dropped and counted.
inline std::vector<AffiliationRecord> parse_affiliations(const std::string& path,
                                                         const std::vector<CompanyRecord>& companies,
                                                         const ColumnMap& map = {},
                                                         ParseStats* stats_out = nullptr) {
    const CsvTable csv = read_csv(path);
    ParseStats stats;
    const std::size_t c_dir = csv.column(map.col("director_id"));
    const std::size_t c_firm = csv.column(map.col("firm_id"));
    const std::size_t c_role = csv.column(map.col("role"));

    std::set<std::string> known;
    for (const auto& c : companies) known.insert(c.firm_id);

    std::vector<AffiliationRecord> out;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const std::size_t line = csv.line_numbers[r];
        ++stats.rows_read;
        if (row.size() != csv.header.size()) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": malformed row rejected");
            continue;
        }
        AffiliationRecord rec;
        rec.director_id = trim(row[c_dir]);
        rec.firm_id = trim(row[c_firm]);
        rec.role = trim(row[c_role]);
        if (rec.director_id.empty() || rec.firm_id.empty()) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": empty director_id/firm_id; row rejected");
            continue;
        }
        if (!known.count(rec.firm_id)) {
            ++stats.dangling_dropped;
            continue;
        }
        out.push_back(std::move(rec));
    }
    if (stats.dangling_dropped > 0)
        stats.warn(std::to_string(stats.dangling_dropped) +
                   " affiliation rows referenced unknown firms and were dropped");

    std::sort(out.begin(), out.end(), [](const AffiliationRecord& a, const AffiliationRecord& b) {
        return std::tie(a.director_id, a.firm_id, a.role) < std::tie(b.director_id, b.firm_id, b.role);
    });
    const auto last = std::unique(out.begin(), out.end(),
                                  [](const AffiliationRecord& a, const AffiliationRecord& b) {
                                      return a.director_id == b.director_id && a.firm_id == b.firm_id;
                                  });
    stats.pairs_deduped = static_cast<std::size_t>(out.end() - last);
    out.erase(last, out.end());
    if (stats_out) *stats_out = std::move(stats);
    return out;
}

struct AffiliationTable {
    std::vector<CompanyRecord> companies;     // sorted by firm_id
    std::vector<AffiliationRecord> positions; // sorted by (director_id, firm_id)

    const CompanyRecord* find(const std::string& firm_id) const {
        auto it = std::lower_bound(companies.begin(), companies.end(), firm_id,
                                   [](const CompanyRecord& c, const std::string& id) {
                                       return c.firm_id < id;
                                   });
        if (it == companies.end() || it->firm_id != firm_id) return nullptr;
        return &*it;
    }
};

inline AffiliationTable load_affiliation_table(const std::string& companies_path,
                                               const std::string& affiliations_path,
                                               const ColumnMap& map = {},
                                               bool lenient = false,
                                               ParseStats* company_stats = nullptr,
                                               ParseStats* affiliation_stats = nullptr) {
    AffiliationTable t;
    t.companies = parse_companies(companies_path, map, lenient, company_stats);
    t.positions = parse_affiliations(affiliations_path, t.companies, map, affiliation_stats);
    return t;
}

inline std::vector<CountryAggregate> parse_aggregates(const std::string& path,
                                                      const ColumnMap& map = {},
                                                      bool lenient = false,
                                                      ParseStats* stats_out = nullptr) {
    const CsvTable csv = read_csv(path);
    ParseStats stats;
    const std::size_t c_country = csv.column(map.col("country"));
    const std::size_t c_count = csv.column(map.col("firm_count"));
    const std::size_t c_total = csv.column(map.col("total_revenue_usd"));
    std::array<std::optional<std::size_t>, 5> c_sc;
    for (std::size_t b = 0; b < kSizeClassColumns.size(); ++b)
        if (csv.has_column(kSizeClassColumns[b])) c_sc[b] = csv.column(kSizeClassColumns[b]);

    std::map<std::string, std::size_t> seen;
    std::vector<CountryAggregate> out;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const std::size_t line = csv.line_numbers[r];
        ++stats.rows_read;
        if (row.size() != csv.header.size()) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": malformed row rejected");
            continue;
        }
        CountryAggregate agg;
        agg.country = trim(row[c_country]);
        const auto count = detail::int_cell(row[c_count], line, "firm_count", stats);
        if (agg.country.empty() || !count || *count < 0) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": aggregate row needs a country and a "
                       "nonnegative firm_count; row rejected");
            continue;
        }
        agg.firm_count = *count;
        agg.total_revenue_usd = detail::num_cell(row[c_total], line, "total_revenue_usd", stats);
        for (std::size_t b = 0; b < c_sc.size(); ++b) {
            if (!c_sc[b]) continue;
            if (auto v = detail::int_cell(row[*c_sc[b]], line, kSizeClassColumns[b], stats))
                agg.size_class_counts[kSizeClassLabels[b]] = *v;
        }
        auto it = seen.find(agg.country);
        if (it != seen.end()) {
            ++stats.duplicates;
            if (!lenient)
                throw DuplicateKeyError("duplicate country '" + agg.country + "' at line " +
                                        std::to_string(line) + " of '" + path + "'");
            stats.warn("line " + std::to_string(line) + ": duplicate country '" + agg.country +
                       "'; last occurrence wins");
            out[it->second] = std::move(agg);
            continue;
        }
        seen.emplace(agg.country, out.size());
        out.push_back(std::move(agg));
    }
    std::sort(out.begin(), out.end(), [](const CountryAggregate& a, const CountryAggregate& b) {
        return a.country < b.country;
    });
    if (stats_out) *stats_out = std::move(stats);
    return out;
}

// Indicator panel: one row per country, one column per indicator code.
// Codes listed in `log_codes` are replaced by their natural log at load time;
// non-positive values under a log flag become missing (with a warning).
inline IndicatorTable parse_indicators(const std::string& path,
                                       const std::set<std::string>& log_codes = {},
                                       const ColumnMap& map = {},
                                       bool lenient = false,
                                       ParseStats* stats_out = nullptr) {
    const CsvTable csv = read_csv(path);
    ParseStats stats;
    const std::size_t c_country = csv.column(map.col("country"));

    std::vector<std::pair<std::string, std::size_t>> code_cols; // code -> csv column
    for (std::size_t i = 0; i < csv.header.size(); ++i) {
        if (i == c_country) continue;
        const std::string code = trim(csv.header[i]);
        if (code.empty()) throw SchemaError("indicator file has an unnamed column");
        code_cols.emplace_back(code, i);
    }
    if (code_cols.empty()) throw SchemaError("indicator file has no indicator columns");
    std::sort(code_cols.begin(), code_cols.end());
    for (std::size_t i = 1; i < code_cols.size(); ++i)
        if (code_cols[i].first == code_cols[i - 1].first)
            throw SchemaError("duplicate indicator column '" + code_cols[i].first + "'");

    for (const auto& code : log_codes)
        if (!std::any_of(code_cols.begin(), code_cols.end(),
                         [&](const auto& cc) { return cc.first == code; }))
            throw SchemaError("log flag names unknown indicator '" + code + "'");

    std::map<std::string, std::vector<std::optional<double>>> rows;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const std::size_t line = csv.line_numbers[r];
        ++stats.rows_read;
        if (row.size() != csv.header.size()) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": malformed row rejected");
            continue;
        }
        const std::string country = trim(row[c_country]);
        if (country.empty()) {
            ++stats.rows_rejected;
            stats.warn("line " + std::to_string(line) + ": empty country; row rejected");
            continue;
        }
        std::vector<std::optional<double>> vals(code_cols.size());
        for (std::size_t ci = 0; ci < code_cols.size(); ++ci) {
            auto v = detail::num_cell(row[code_cols[ci].second], line,
                                      code_cols[ci].first.c_str(), stats);
            if (v && log_codes.count(code_cols[ci].first)) {
                if (*v <= 0.0) {
                    ++stats.log_dropped;
                    stats.warn("line " + std::to_string(line) + ": non-positive value " +
                               format_double(*v) + " for log-flagged indicator '" +
                               code_cols[ci].first + "' treated as missing");
                    v.reset();
                } else {
                    v = std::log(*v);
                }
            }
            vals[ci] = v;
        }
        auto it = rows.find(country);
        if (it != rows.end()) {
            ++stats.duplicates;
            if (!lenient)
                throw DuplicateKeyError("duplicate country '" + country + "' at line " +
                                        std::to_string(line) + " of '" + path + "'");
            stats.warn("line " + std::to_string(line) + ": duplicate country '" + country +
                       "'; last occurrence wins");
            it->second = std::move(vals);
            continue;
        }
        rows.emplace(country, std::move(vals));
    }

    IndicatorTable table;
    for (const auto& cc : code_cols) table.codes.push_back(cc.first);
    for (auto& [country, vals] : rows) {
        table.countries.push_back(country);
        table.values.push_back(std::move(vals));
    }
    table.log_applied = log_codes;
    if (stats_out) *stats_out = std::move(stats);
    return table;
}

// ---- canonical dumps --------------------------------------------------

inline void dump_companies(const std::vector<CompanyRecord>& companies, std::ostream& os) {
    std::vector<const CompanyRecord*> order;
    order.reserve(companies.size());
    for (const auto& c : companies) order.push_back(&c);
    std::sort(order.begin(), order.end(),
              [](const CompanyRecord* a, const CompanyRecord* b) { return a->firm_id < b->firm_id; });
    os << "firm_id,country,revenue_usd,employees,guo_id,market_cap_usd\n";
    for (const auto* c : order) {
        os << csv_quote(c->firm_id) << ',' << csv_quote(c->country) << ','
           << (c->revenue_usd ? format_double(*c->revenue_usd) : "") << ','
           << (c->employees ? std::to_string(*c->employees) : "") << ','
           << (c->guo_id ? csv_quote(*c->guo_id) : "") << ','
           << (c->market_cap_usd ? format_double(*c->market_cap_usd) : "") << '\n';
    }
}

inline void dump_affiliations(const std::vector<AffiliationRecord>& positions, std::ostream& os) {
    std::vector<const AffiliationRecord*> order;
    order.reserve(positions.size());
    for (const auto& p : positions) order.push_back(&p);
    std::sort(order.begin(), order.end(), [](const AffiliationRecord* a, const AffiliationRecord* b) {
        return std::tie(a->director_id, a->firm_id, a->role) <
               std::tie(b->director_id, b->firm_id, b->role);
    });
    os << "director_id,firm_id,role\n";
    for (const auto* p : order)
        os << csv_quote(p->director_id) << ',' << csv_quote(p->firm_id) << ','
           << csv_quote(p->role) << '\n';
}

} // namespace netqual
