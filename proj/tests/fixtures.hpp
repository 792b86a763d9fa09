#pragma once

// Synthetic firm networks with planted, hand-derived ground truth.
//
// The golden fixture builds a 1710-firm economy in four layers:
//
//   * 1000 web firms F0000..F0999 joined by a director chain plus extra
//     pair directors.  The first 200 are "targets": the economically large
//     firms, with revenue and base interlock degree both decreasing in the
//     index, so economic rank and clean degree rank agree.
//   * 50 administrative groups A<g>_<m>: 10 members with byte-identical
//     boards and a shared group GUO.  Four of each group's directors also sit
//     on one low-economy target each, so the duplicates inflate exactly the
//     degrees that should be small.  These are the step-1 ground truth.
//   * 22 symmetric near-duplicate triples N<g>_<m>: five shared directors
//     (four of them seated on one target each) plus one private director per
//     member.  Board Jaccard is 5/7 and the three members have exactly equal
//     topological features by symmetry, so step 2 merges them at any band.
//   * 14 pendant gadgets: a clique of firms sharing one director (the clique
//     spans one target and one background firm), where firm A carries a
//     second shared director with firm B and B alone has a pendant partner Y.
//     The binding feature ratio is B's local clustering: with 9 clique
//     fillers it is C(12,2)/C(13,2) = 11/13 ~ 0.846 (the 8 "P" gadgets,
//     merged at bands 0.7/0.8 but not 0.9); with 5 fillers it is
//     C(8,2)/C(9,2) = 7/9 ~ 0.778 (the 6 "Q" gadgets, merged only at 0.7).
//     Degree and neighbour-average ratios stay above these by construction.
//
// Everything is deterministic; the expected merge partitions are recorded by
// the builder itself, independent of the code under test.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netqual/graph.hpp"
#include "netqual/rng.hpp"
#include "netqual/tables.hpp"
#include "netqual/util.hpp"

namespace fixtures {

inline constexpr std::size_t kWebFirms = 1000;
inline constexpr std::size_t kTargets = 200;
inline constexpr std::size_t kAdminGroups = 50;
inline constexpr std::size_t kAdminMembers = 10;
inline constexpr std::size_t kSymGroups = 22;
inline constexpr std::size_t kInbandGadgets = 8; // merge at band 0.7 and 0.8
inline constexpr std::size_t kLooseGadgets = 6;  // merge at band 0.7 only

struct GoldenFixture {
    netqual::AffiliationTable table;
    netqual::FirmGraph graph; // full projection (connected by construction)
    // Planted ground truth: sorted firm-id groups, lists sorted.
    std::vector<std::vector<std::string>> admin_groups; // step 1
    std::vector<std::vector<std::string>> symmetric_groups;
    std::vector<std::vector<std::string>> inband_pairs;
    std::vector<std::vector<std::string>> loose_pairs;

    // Step-2 ground truth for a feature band.
    std::vector<std::vector<std::string>> step2_groups(double band) const {
        std::vector<std::vector<std::string>> out = symmetric_groups;
        if (band <= 11.0 / 13.0 + 1e-12)
            out.insert(out.end(), inband_pairs.begin(), inband_pairs.end());
        if (band <= 7.0 / 9.0 + 1e-12)
            out.insert(out.end(), loose_pairs.begin(), loose_pairs.end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

namespace detail {

inline std::string zpad(const char* fmt, std::size_t a, std::size_t b = 0) {
    char buf[40];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return std::string(buf);
}

} // namespace detail

inline GoldenFixture make_golden_fixture() {
    GoldenFixture f;
    std::vector<netqual::CompanyRecord> companies;
    std::vector<netqual::AffiliationRecord> positions;

    const auto add_firm = [&](std::string id, double revenue,
                              std::optional<std::string> guo = std::nullopt) {
        netqual::CompanyRecord c;
        c.firm_id = std::move(id);
        c.country = "XX";
        c.revenue_usd = revenue;
        c.guo_id = std::move(guo);
        companies.push_back(std::move(c));
    };
    const auto seat = [&](const std::string& director, const std::string& firm) {
        positions.push_back({director, firm, "director"});
    };
    const auto fid = [&](std::size_t i) { return detail::zpad("F%04zu", i); };

    // ---- web firms --------------------------------------------------------
    // Targets: revenue and base degree gradients aligned with the index.
    for (std::size_t i = 0; i < kWebFirms; ++i) {
        const double revenue = i < kTargets
                                   ? 1e9 * static_cast<double>(kTargets - i)
                                   : 1e6 * static_cast<double>(1 + (i * 37) % 400);
        add_firm(fid(i), revenue);
        seat("down_" + fid(i), fid(i)); // unique own director: no two web boards equal
    }
    // Chain keeps the whole web connected.
    std::set<std::pair<std::size_t, std::size_t>> web_edges;
    for (std::size_t i = 0; i + 1 < kWebFirms; ++i) {
        const std::string d = detail::zpad("dchain%04zu", i);
        seat(d, fid(i));
        seat(d, fid(i + 1));
        web_edges.insert({i, i + 1});
    }
    // Base degree gradient for targets: 1 + (199-i)/10 extra interlocks into
    // the background, spread deterministically.
    for (std::size_t i = 0; i < kTargets; ++i) {
        const std::size_t extras = 1 + (kTargets - 1 - i) / 10;
        for (std::size_t e = 0; e < extras; ++e) {
            std::size_t j = kTargets + (i * 53 + e * 131) % (kWebFirms - kTargets);
            while (web_edges.count({std::min(i, j), std::max(i, j)}))
                j = kTargets + (j - kTargets + 1) % (kWebFirms - kTargets);
            web_edges.insert({std::min(i, j), std::max(i, j)});
            const std::string d = detail::zpad("dtarget%04zu_%zu", i, e);
            seat(d, fid(i));
            seat(d, fid(j));
        }
    }
    // Background-background interlocks.
    netqual::Rng bg(20240817);
    for (std::size_t added = 0; added < 600;) {
        const std::size_t u = kTargets + bg.uniform_below(kWebFirms - kTargets);
        const std::size_t v = kTargets + bg.uniform_below(kWebFirms - kTargets);
        if (u == v || web_edges.count({std::min(u, v), std::max(u, v)})) continue;
        web_edges.insert({std::min(u, v), std::max(u, v)});
        const std::string d = detail::zpad("dback%04zu", added);
        seat(d, fid(u));
        seat(d, fid(v));
        ++added;
    }

    // ---- administrative groups (step-1 ground truth) -----------------------
    for (std::size_t g = 0; g < kAdminGroups; ++g) {
        std::vector<std::string> members;
        for (std::size_t m = 0; m < kAdminMembers; ++m) {
            const std::string id = detail::zpad("A%02zu_%zu", g, m);
            add_firm(id, 1e4 + static_cast<double>(g), detail::zpad("GRP%02zu", g));
            members.push_back(id);
        }
        for (std::size_t j = 0; j < 6; ++j) {
            const std::string d = detail::zpad("dadm%02zu_%zu", g, j);
            for (const auto& id : members) seat(d, id);
        }
        // Link directors sit on every member and on one target apiece; the
        // four targets are 25 apart so each group is a long-range shortcut
        // that disappears at step 1.
        for (std::size_t j = 0; j < 4; ++j) {
            const std::string d = detail::zpad("dlink%02zu_%zu", g, j);
            for (const auto& id : members) seat(d, id);
            seat(d, fid(100 + (g + j * 25) % 100));
        }
        // Anchor directors tie the whole group into the background web, so
        // duplicate members sit closer than average to everything and their
        // removal pushes mean distance up, the way cleaning shifts it on
        // register data.  Boards stay identical within the group.
        for (std::size_t j = 0; j < 4; ++j) {
            const std::string d = detail::zpad("danch%02zu_%zu", g, j);
            for (const auto& id : members) seat(d, id);
            seat(d, fid(kTargets + (g * 97 + j * 389) % (kWebFirms - kTargets)));
        }
        f.admin_groups.push_back(members); // already sorted by construction
    }

    // ---- symmetric near-duplicate triples ----------------------------------
    for (std::size_t g = 0; g < kSymGroups; ++g) {
        std::vector<std::string> members;
        for (std::size_t m = 0; m < 3; ++m) {
            const std::string id = detail::zpad("N%02zu_%zu", g, m);
            add_firm(id, 9e3 + static_cast<double>(g));
            members.push_back(id);
            seat(detail::zpad("dnpriv%02zu_%zu", g, m), id); // breaks board identity
        }
        // Nine shared directors: four seated on one target each, one purely
        // internal, four anchoring the triple into the background web (same
        // role as the admin anchors; symmetry across members is exact).
        for (std::size_t j = 0; j < 9; ++j) {
            const std::string d = detail::zpad("dnsh%02zu_%zu", g, j);
            for (const auto& id : members) seat(d, id);
            if (j < 4) seat(d, fid(150 + (g + j * 12) % 50));
            if (j >= 5)
                seat(d, fid(kTargets + (g * 71 + j * 401) % (kWebFirms - kTargets)));
        }
        f.symmetric_groups.push_back(members);
    }

    // ---- pendant gadgets ---------------------------------------------------
    const auto add_gadget = [&](const std::string& prefix, std::size_t g, std::size_t fillers,
                                std::size_t target) {
        const std::string a = prefix + detail::zpad("%zu_A", g);
        const std::string b = prefix + detail::zpad("%zu_B", g);
        const std::string y = prefix + detail::zpad("%zu_Y", g);
        const std::string s1 = "d" + prefix + detail::zpad("%zu_s1", g);
        const std::string s2 = "d" + prefix + detail::zpad("%zu_s2", g);
        const std::string pb = "d" + prefix + detail::zpad("%zu_pb", g);
        add_firm(a, 8e3 + static_cast<double>(g));
        add_firm(b, 8e3 + static_cast<double>(g));
        add_firm(y, 1e3);
        seat(s1, a);
        seat(s1, b);
        seat(s2, a);
        seat(s2, b);
        seat(pb, b);
        seat(pb, y);
        seat(s1, fid(target));
        seat(s1, fid(kTargets + (g * 61 + fillers * 13) % (kWebFirms - kTargets)));
        for (std::size_t i = 0; i < fillers; ++i) {
            const std::string n = prefix + detail::zpad("%zu_N%zu", g, i);
            add_firm(n, 7e3);
            seat(s1, n);
            seat("d" + prefix + detail::zpad("%zu_np%zu", g, i), n);
        }
        return std::vector<std::string>{a, b};
    };
    for (std::size_t g = 0; g < kInbandGadgets; ++g)
        f.inband_pairs.push_back(add_gadget("P", g, 9, 140 + g));
    for (std::size_t g = 0; g < kLooseGadgets; ++g)
        f.loose_pairs.push_back(add_gadget("Q", g, 5, 130 + g));

    std::sort(companies.begin(), companies.end(),
              [](const auto& a, const auto& b) { return a.firm_id < b.firm_id; });
    std::sort(positions.begin(), positions.end(), [](const auto& a, const auto& b) {
        if (a.director_id != b.director_id) return a.director_id < b.director_id;
        return a.firm_id < b.firm_id;
    });
    f.table.companies = std::move(companies);
    f.table.positions = std::move(positions);
    f.graph = netqual::project(f.table);
    std::sort(f.admin_groups.begin(), f.admin_groups.end());
    std::sort(f.symmetric_groups.begin(), f.symmetric_groups.end());
    std::sort(f.inband_pairs.begin(), f.inband_pairs.end());
    std::sort(f.loose_pairs.begin(), f.loose_pairs.end());
    return f;
}

// Random multi-director firms for property checks: boards drawn from a small
// shared pool so Jaccard candidates actually occur.
inline netqual::FirmGraph random_board_graph(std::uint64_t seed, std::size_t n_firms = 40,
                                             std::size_t pool = 25) {
    netqual::Rng rng(seed);
    std::vector<netqual::CompanyRecord> companies;
    std::vector<netqual::AffiliationRecord> positions;
    for (std::size_t i = 0; i < n_firms; ++i) {
        netqual::CompanyRecord c;
        c.firm_id = detail::zpad("R%03zu", i);
        c.country = "XX";
        companies.push_back(std::move(c));
        const std::size_t board = 1 + rng.uniform_below(5);
        std::set<std::size_t> picked;
        while (picked.size() < board) picked.insert(rng.uniform_below(pool));
        for (std::size_t d : picked)
            positions.push_back({detail::zpad("d%03zu", d), detail::zpad("R%03zu", i), "director"});
    }
    std::sort(positions.begin(), positions.end(), [](const auto& a, const auto& b) {
        if (a.director_id != b.director_id) return a.director_id < b.director_id;
        return a.firm_id < b.firm_id;
    });
    netqual::AffiliationTable t;
    t.companies = std::move(companies);
    t.positions = std::move(positions);
    return netqual::project(t);
}

// ---------------------------------------------------------------------------
// CSV materialisation for CLI-level tests
// ---------------------------------------------------------------------------

// Writes the golden fixture as input files plus a pipeline config.  On top of
// the graph fixture it adds 18 synthetic countries with aggregates and
// indicators so the completeness branch runs too: indicator "wdi0" carries
// the signal, "gdp" drives revenue imputation for the aggregates that omit
// totals, and the rest is noise.
inline void write_pipeline_inputs(const GoldenFixture& f, const std::filesystem::path& dir,
                                  const std::string& out_dir_line) {
    std::filesystem::create_directories(dir);
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        out << text;
    };

    std::string companies = "firm_id,country,revenue_usd,employees,guo_id,market_cap_usd\n";
    for (const auto& c : f.table.companies) {
        companies += c.firm_id + "," + c.country + ",";
        if (c.revenue_usd) companies += netqual::format_double(*c.revenue_usd);
        companies += ",";
        if (c.employees) companies += std::to_string(*c.employees);
        companies += ",";
        if (c.guo_id) companies += *c.guo_id;
        companies += ",\n";
    }

    netqual::Rng rng(777001);
    std::string aggregates = "country,firm_count,total_revenue_usd\n";
    std::string indicators = "country,gdp,wdi0,wdi1,wdi2,wdi3,wdi4,wdi5,wdi6\n";
    for (std::size_t c = 0; c < 18; ++c) {
        const std::string country = detail::zpad("C%02zu", c);
        const double mu = 10.0 + 0.15 * static_cast<double>(c);
        for (std::size_t i = 0; i < 40; ++i) {
            const std::string id = country + detail::zpad("_%03zu", i);
            companies += id + "," + country + "," +
                         netqual::format_double(std::exp(rng.normal(mu, 2.0))) + ",,,\n";
        }
        const double firm_count = 2000.0 + 100.0 * static_cast<double>(c);
        const double total = firm_count * std::exp(mu + 2.0);
        aggregates += country + "," + netqual::format_double(firm_count) + ",";
        if (c % 6 != 5) aggregates += netqual::format_double(total); // some get imputed
        aggregates += "\n";
        const double gdp = total * (1.1 + 0.01 * static_cast<double>(c));
        indicators += country + "," + netqual::format_double(gdp);
        indicators += "," + netqual::format_double(mu + rng.normal(0.0, 0.05)); // signal
        for (std::size_t k = 1; k < 7; ++k)
            indicators += "," + netqual::format_double(rng.normal(0.0, 1.0)); // noise
        indicators += "\n";
    }

    write("companies.csv", companies);
    write("affiliations.csv", [&] {
        std::string s = "director_id,firm_id,role\n";
        for (const auto& p : f.table.positions)
            s += p.director_id + "," + p.firm_id + "," + p.role + "\n";
        return s;
    }());
    write("aggregates.csv", aggregates);
    write("indicators.csv", indicators);
    write("config.ini",
          "[input]\n"
          "companies = " + (dir / "companies.csv").string() + "\n"
          "affiliations = " + (dir / "affiliations.csv").string() + "\n"
          "aggregates = " + (dir / "aggregates.csv").string() + "\n"
          "indicators = " + (dir / "indicators.csv").string() + "\n"
          "indicator_log = gdp\n"
          "giant_component = true\n"
          "[accuracy]\n"
          "jaccard_threshold = 0.5\n"
          "band = 0.8\n"
          "[metrics]\n"
          "curve_k = 50,100,200\n"
          "[sir]\n"
          "beta = 0.2\n"
          "gamma = 0.3\n"
          "ensemble = 200\n"
          "[completeness]\n"
          "n_models = 100\n"
          "gdp_code = gdp\n"
          "[run]\n"
          "seed = 4242\n"
          "threads = 1\n" +
              out_dir_line);
}

} // namespace fixtures
