#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <string>

#include "netqual/pipeline.hpp"
#include "temp_files.hpp"

using namespace netqual;
namespace fs = std::filesystem;

namespace {

// Twelve firms wired so each cleaning step has exactly one planted catch:
//  - D1/D2 share the full officer set {x1,x2,x3} and the owner G1, so the
//    exact pass must merge them;
//  - N1/N2 share three of at most five officers (Jaccard 3/5) and sit in
//    mirror-image neighbourhoods, so only the topological pass merges them;
//  - F1..F8 form a chain that keeps the projection connected while every
//    remaining board pair stays below the candidate threshold.
void write_interlock_tables(const testutil::ScopedTempDir& tmp) {
    std::string companies = "firm_id,country,revenue_usd,employees,guo_id,market_cap_usd\n";
    const char* rows[] = {
        "D1,SE,900,40,G1,", "D2,SE,880,38,G1,", "N1,SE,700,30,,", "N2,SE,690,29,,",
        "F1,SE,600,25,,",   "F2,SE,550,22,,",   "F3,SE,500,20,,", "F4,SE,450,18,,",
        "F5,SE,400,15,,",   "F6,SE,350,12,,",   "F7,SE,300,10,,", "F8,SE,250,8,,",
    };
    for (const char* r : rows) companies += std::string(r) + "\n";
    std::string affiliations = "director_id,firm_id,role\n";
    const std::pair<const char*, const char*> seats[] = {
        {"x1", "D1"}, {"x2", "D1"}, {"x3", "D1"}, {"x1", "D2"}, {"x2", "D2"}, {"x3", "D2"},
        {"s1", "N1"}, {"s2", "N1"}, {"s3", "N1"}, {"p1", "N1"},
        {"s1", "N2"}, {"s2", "N2"}, {"s3", "N2"}, {"p2", "N2"},
        {"s1", "F1"}, {"c1", "F1"}, {"s2", "F2"}, {"c1", "F2"}, {"c2", "F2"},
        {"s3", "F3"}, {"c2", "F3"}, {"c3", "F3"}, {"x1", "F4"}, {"c3", "F4"}, {"c4", "F4"},
        {"c4", "F5"}, {"c5", "F5"}, {"c5", "F6"}, {"c6", "F6"}, {"c6", "F7"}, {"c7", "F7"},
        {"c7", "F8"}, {"c8", "F8"},
    };
    for (const auto& [d, f] : seats) affiliations += std::string(d) + "," + f + ",director\n";
    tmp.write("companies.csv", companies);
    tmp.write("affiliations.csv", affiliations);
}

RunConfig small_config(const testutil::ScopedTempDir& tmp, const std::string& out_name) {
    RunConfig cfg;
    cfg.companies = (tmp.path() / "companies.csv").string();
    cfg.affiliations = (tmp.path() / "affiliations.csv").string();
    cfg.curve_k = {3, 5};
    cfg.beta = 0.3;
    cfg.gamma = 0.4;
    cfg.ensemble = 50;
    cfg.seed = 11;
    cfg.out_dir = (tmp.path() / out_name).string();
    return cfg;
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        files[entry.path().filename().string()] = testutil::read_file(entry.path());
    return files;
}

// Sixteen countries whose registries hold six firms each while the official
// census says 12+c firms exist, so true coverage spans 6/12 down to 6/27.
// gdp tracks total revenue, sig tracks the lognormal location, noise is pure
// noise; the model should keep the first two and drop the third.
void write_panel(const testutil::ScopedTempDir& tmp) {
    Rng rng(5150);
    std::string companies = "firm_id,country,revenue_usd,employees,guo_id,market_cap_usd\n";
    std::string aggregates = "country,firm_count,total_revenue_usd\n";
    std::string indicators = "country,gdp,noise,sig\n";
    for (int c = 0; c < 16; ++c) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "C%02d", c);
        const std::string country = buf;
        const double mu = 10.0 + 0.15 * c;
        for (int i = 0; i < 6; ++i)
            companies += country + "_" + std::to_string(i) + "," + country + "," +
                         format_double(std::exp(rng.normal(mu, 0.5))) + ",,,\n";
        const double count = 12.0 + c;
        const double total = count * std::exp(mu + 2.0);
        aggregates += country + "," + format_double(count) + "," + format_double(total) + "\n";
        indicators += country + "," + format_double(total * 1.1) + "," +
                      format_double(rng.normal(0.0, 1.0)) + "," +
                      format_double(mu + rng.normal(0.0, 0.05)) + "\n";
    }
    tmp.write("companies.csv", companies);
    tmp.write("aggregates.csv", aggregates);
    tmp.write("indicators.csv", indicators);
}

} // namespace

TEST_CASE("pipeline merges the planted duplicates and reports every stage", "[pipeline]") {
    testutil::ScopedTempDir tmp;
    write_interlock_tables(tmp);
    const RunConfig cfg = small_config(tmp, "out");
    const nlohmann::ordered_json report = cmd_pipeline(cfg);

    REQUIRE(report["stages"].size() == 3);
    const auto& stages = report["stages"];
    CHECK(stages[0]["name"] == "original");
    CHECK(stages[1]["name"] == "step1");
    CHECK(stages[2]["name"] == "step2");
    CHECK(stages[0]["summary"]["nodes"] == 12);
    CHECK(stages[0]["summary"]["edges"] == 17);
    CHECK(stages[1]["summary"]["nodes"] == 11);
    CHECK(stages[1]["summary"]["edges"] == 15);
    CHECK(stages[2]["summary"]["nodes"] == 10);
    CHECK(stages[2]["summary"]["edges"] == 11);

    CHECK(stages[0]["merge"].is_null());
    REQUIRE(stages[1]["merge"]["clusters"].size() == 1);
    CHECK(stages[1]["merge"]["clusters"][0] == nlohmann::json({"D1", "D2"}));
    REQUIRE(stages[2]["merge"]["clusters"].size() == 1);
    CHECK(stages[2]["merge"]["clusters"][0] == nlohmann::json({"N1", "N2"}));

    // The echoed config pins everything a rerun needs.  The worker count is
    // deliberately absent: it cannot change any number, so two runs that
    // differ only in threads must produce identical reports.
    CHECK(report["config"]["run"]["seed"] == 11);
    CHECK(report["config"]["run"].contains("stages"));
    CHECK_FALSE(report["config"]["run"].contains("threads"));

    for (const char* name : {"report.json", "summary_original.json", "summary_step1.json",
                             "summary_step2.json", "centrality_original.csv", "curve_step1.csv",
                             "edges_step2.tsv", "nodes_step2.tsv", "merge_step1.json",
                             "merge_step2.json", "sir_original.json", "sir_step2.csv"})
        CHECK(fs::exists(fs::path(cfg.out_dir) / name));
}

TEST_CASE("pipeline reruns and thread-count changes are byte-identical", "[pipeline]") {
    testutil::ScopedTempDir tmp;
    write_interlock_tables(tmp);
    RunConfig cfg = small_config(tmp, "out");
    cmd_pipeline(cfg);
    const auto first = snapshot_dir(cfg.out_dir);

    cmd_pipeline(cfg);
    CHECK(snapshot_dir(cfg.out_dir) == first);

    cfg.threads = 3;
    cmd_pipeline(cfg);
    CHECK(snapshot_dir(cfg.out_dir) == first);
}

TEST_CASE("single-purpose commands match the pipeline's original stage byte for byte",
          "[pipeline]") {
    testutil::ScopedTempDir tmp;
    write_interlock_tables(tmp);
    const RunConfig pipeline_cfg = small_config(tmp, "out_pipeline");
    cmd_pipeline(pipeline_cfg);

    RunConfig cfg = small_config(tmp, "out_single");
    cmd_metrics(cfg);
    cmd_sir(cfg);
    cmd_export(cfg);

    const fs::path full(pipeline_cfg.out_dir), single(cfg.out_dir);
    CHECK(testutil::read_file(single / "summary.json") ==
          testutil::read_file(full / "summary_original.json"));
    CHECK(testutil::read_file(single / "centrality.csv") ==
          testutil::read_file(full / "centrality_original.csv"));
    CHECK(testutil::read_file(single / "curve.csv") ==
          testutil::read_file(full / "curve_original.csv"));
    CHECK(testutil::read_file(single / "sir.json") ==
          testutil::read_file(full / "sir_original.json"));
    CHECK(testutil::read_file(single / "sir.csv") ==
          testutil::read_file(full / "sir_original.csv"));
    CHECK(testutil::read_file(single / "edges.tsv") ==
          testutil::read_file(full / "edges_original.tsv"));
    CHECK(testutil::read_file(single / "nodes.tsv") ==
          testutil::read_file(full / "nodes_original.tsv"));
}

TEST_CASE("an exported edge list reproduces table-based results through the edges input",
          "[pipeline]") {
    testutil::ScopedTempDir tmp;
    write_interlock_tables(tmp);
    RunConfig table_cfg = small_config(tmp, "out_tables");
    cmd_metrics(table_cfg);
    cmd_sir(table_cfg);
    cmd_export(table_cfg);

    RunConfig edge_cfg;
    edge_cfg.edges = (fs::path(table_cfg.out_dir) / "edges.tsv").string();
    edge_cfg.curve_k = table_cfg.curve_k;
    edge_cfg.beta = table_cfg.beta;
    edge_cfg.gamma = table_cfg.gamma;
    edge_cfg.ensemble = table_cfg.ensemble;
    edge_cfg.seed = table_cfg.seed;
    edge_cfg.out_dir = (tmp.path() / "out_edges").string();
    cmd_metrics(edge_cfg);
    cmd_sir(edge_cfg);

    CHECK(testutil::read_file(fs::path(edge_cfg.out_dir) / "summary.json") ==
          testutil::read_file(fs::path(table_cfg.out_dir) / "summary.json"));
    CHECK(testutil::read_file(fs::path(edge_cfg.out_dir) / "sir.json") ==
          testutil::read_file(fs::path(table_cfg.out_dir) / "sir.json"));
    // An edge list carries no revenues, so there is nothing to rank against.
    CHECK_FALSE(fs::exists(fs::path(edge_cfg.out_dir) / "curve.csv"));
}

TEST_CASE("config files round-trip every section", "[pipeline]") {
    testutil::ScopedTempDir tmp;
    const std::string path = tmp.write("full.ini",
                                       "# full example\n"
                                       "[input]\n"
                                       "companies = c.csv\n"
                                       "affiliations = a.csv\n"
                                       "aggregates = g.csv\n"
                                       "indicators = i.csv\n"
                                       "country = SE   # trailing comment\n"
                                       "giant_component = false\n"
                                       "lenient = true\n"
                                       "company_columns = firm_id=bvd_id,revenue_usd=turnover\n"
                                       "affiliation_columns = director_id=person\n"
                                       "indicator_log = gdp, imports\n"
                                       "[accuracy]\n"
                                       "jaccard_threshold = 0.6\n"
                                       "band = 0.75\n"
                                       "[metrics]\n"
                                       "damping = 0.9\n"
                                       "distance_sample = 500\n"
                                       "betweenness_sample = 250\n"
                                       "transitivity = true\n"
                                       "curve_k = 10, 20, 30\n"
                                       "economic_vars = revenue, employees\n"
                                       "[sir]\n"
                                       "beta = 0.25\n"
                                       "gamma = 0.35\n"
                                       "ensemble = 123\n"
                                       "max_iter = 999\n"
                                       "dieoff_threshold = 0.02\n"
                                       "[completeness]\n"
                                       "sigma = 1.5\n"
                                       "coefficients = fit\n"
                                       "n_models = 77\n"
                                       "subsample = 0.5\n"
                                       "core_size = 4\n"
                                       "gdp_code = gdp\n"
                                       "bins = 25\n"
                                       "histogram_min = 12\n"
                                       "[run]\n"
                                       "out_dir = results\n"
                                       "seed = 321\n"
                                       "threads = 2\n"
                                       "stages = original, step2\n");
    const RunConfig cfg = parse_config(path);
    CHECK(cfg.companies == "c.csv");
    CHECK(cfg.affiliations == "a.csv");
    CHECK(cfg.aggregates == "g.csv");
    CHECK(cfg.indicators == "i.csv");
    CHECK(cfg.country == "SE");
    CHECK_FALSE(cfg.giant_component);
    CHECK(cfg.lenient);
    CHECK(cfg.company_columns.col("firm_id") == "bvd_id");
    CHECK(cfg.company_columns.col("revenue_usd") == "turnover");
    CHECK(cfg.company_columns.col("country") == "country");
    CHECK(cfg.affiliation_columns.col("director_id") == "person");
    CHECK(cfg.indicator_log == std::set<std::string>{"gdp", "imports"});
    CHECK(cfg.jaccard_threshold == 0.6);
    CHECK(cfg.band == 0.75);
    CHECK(cfg.damping == 0.9);
    CHECK(cfg.distance_sample == 500);
    CHECK(cfg.betweenness_sample == 250);
    CHECK(cfg.transitivity);
    CHECK(cfg.curve_k == std::vector<std::size_t>{10, 20, 30});
    CHECK(cfg.economic_vars == std::vector<std::string>{"revenue", "employees"});
    CHECK(cfg.beta == 0.25);
    CHECK(cfg.gamma == 0.35);
    CHECK(cfg.ensemble == 123);
    CHECK(cfg.sir_max_iter == 999);
    CHECK(cfg.dieoff_threshold == 0.02);
    CHECK(cfg.sigma == 1.5);
    CHECK(cfg.coefficients == "fit");
    CHECK(cfg.n_models == 77);
    CHECK(cfg.subsample == 0.5);
    CHECK(cfg.core_size == 4);
    CHECK(cfg.gdp_code == "gdp");
    CHECK(cfg.bins == 25);
    CHECK(cfg.histogram_min == 12);
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.seed == 321);
    CHECK(cfg.threads == 2);
    CHECK(cfg.stages == std::vector<std::string>{"original", "step2"});
}

TEST_CASE("config parsing rejects malformed files", "[pipeline]") {
    testutil::ScopedTempDir tmp;
    auto parse = [&](const std::string& text) {
        return parse_config(tmp.write("bad.ini", text));
    };
    CHECK_THROWS_AS(parse_config((tmp.path() / "absent.ini").string()), IoError);
    CHECK_THROWS_AS(parse("[nonsense]\n"), SchemaError);
    CHECK_THROWS_AS(parse("[input\ncompanies = c.csv\n"), SchemaError);
    CHECK_THROWS_AS(parse("[input]\ncompanies c.csv\n"), SchemaError);
    CHECK_THROWS_AS(parse("[input]\nfirms = c.csv\n"), SchemaError);
    CHECK_THROWS_AS(parse("[run]\ncompanies = c.csv\n"), SchemaError); // key in wrong section
    CHECK_THROWS_AS(parse("[input]\nlenient = yes\n"), SchemaError);
    CHECK_THROWS_AS(parse("[sir]\nbeta = fast\n"), SchemaError);
    CHECK_THROWS_AS(parse("[sir]\nensemble = -5\n"), SchemaError);
    CHECK_THROWS_AS(parse("[completeness]\ncoefficients = guess\n"), SchemaError);
    CHECK_THROWS_AS(parse("[run]\nstages = step1, original\n"), SchemaError);
    CHECK_THROWS_AS(parse("[run]\nstages = original, step3\n"), SchemaError);
    CHECK_THROWS_AS(parse("[run]\nstages =\n"), SchemaError);
}

TEST_CASE("command-line overrides beat the config file", "[pipeline]") {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.threads = 8;
    cfg.out_dir = "from_config";

    CliOverrides none;
    RunConfig untouched = cfg;
    apply_overrides(untouched, none);
    CHECK(untouched.seed == 1);
    CHECK(untouched.threads == 8);
    CHECK(untouched.out_dir == "from_config");
    CHECK_FALSE(untouched.lenient);

    CliOverrides o;
    o.seed = 99;
    o.threads = 0; // nonsense worker counts clamp to one
    o.out_dir = "elsewhere";
    o.edges = "graph.tsv";
    o.lenient = true;
    apply_overrides(cfg, o);
    CHECK(cfg.seed == 99);
    CHECK(cfg.threads == 1);
    CHECK(cfg.out_dir == "elsewhere");
    CHECK(cfg.edges == "graph.tsv");
    CHECK(cfg.lenient);
}

TEST_CASE("clean command writes stage tables and honours stage subsets", "[pipeline]") {
    testutil::ScopedTempDir tmp;
    write_interlock_tables(tmp);

    RunConfig full = small_config(tmp, "out_full");
    cmd_clean(full);
    const auto files = snapshot_dir(full.out_dir);
    CHECK(files.size() == 8); // edges+nodes per stage, merge report per cleaning step
    for (const char* name : {"edges_original.tsv", "nodes_original.tsv", "edges_step1.tsv",
                             "nodes_step1.tsv", "merge_step1.json", "edges_step2.tsv",
                             "nodes_step2.tsv", "merge_step2.json"})
        CHECK(files.count(name) == 1);
    CHECK(files.count("report.json") == 0);

    // Asking for step2 alone still runs the exact pass first: cleaning is
    // cumulative, only the outputs are filtered.
    RunConfig subset = small_config(tmp, "out_subset");
    subset.stages = {"step2"};
    cmd_clean(subset);
    const auto few = snapshot_dir(subset.out_dir);
    CHECK(few.size() == 3);
    CHECK(few.at("edges_step2.tsv") == files.at("edges_step2.tsv"));
    CHECK(few.at("nodes_step2.tsv") == files.at("nodes_step2.tsv"));
    CHECK(few.at("merge_step2.json") == files.at("merge_step2.json"));
}

TEST_CASE("completeness command estimates coverage for a synthetic panel", "[pipeline]") {
    testutil::ScopedTempDir tmp;
    write_panel(tmp);
    RunConfig cfg;
    cfg.companies = (tmp.path() / "companies.csv").string();
    cfg.aggregates = (tmp.path() / "aggregates.csv").string();
    cfg.indicators = (tmp.path() / "indicators.csv").string();
    cfg.indicator_log = {"gdp"};
    cfg.n_models = 30;
    cfg.core_size = 2;
    cfg.seed = 77;

    SECTION("builtin coefficients saturate on a dense registry") {
        cfg.out_dir = (tmp.path() / "out_builtin").string();
        cmd_completeness(cfg);
        const auto j = nlohmann::json::parse(
            testutil::read_file(fs::path(cfg.out_dir) / "completeness.json"));
        REQUIRE(j["countries"].size() == 16);
        CHECK(j["coefficients"]["a0"].get<double>() == kBuiltinCompletenessCoefficients.a0);
        CHECK(j["coefficients"]["a1"].get<double>() == kBuiltinCompletenessCoefficients.a1);
        CHECK(j["coefficients"]["a2"].get<double>() == kBuiltinCompletenessCoefficients.a2);
        CHECK(j["coefficients"]["fit_countries"] == 0);
        // The informative indicators win; the noise column is eliminated.
        CHECK(j["model"]["indicators"].size() == 2);
        std::set<std::string> kept;
        for (const auto& ind : j["model"]["indicators"]) kept.insert(ind["code"]);
        CHECK(kept == std::set<std::string>{"gdp", "sig"});
        for (const auto& row : j["countries"]) {
            CHECK(row["c"].get<double>() == 1.0);
            CHECK(row["clamped"].get<bool>());
        }
        for (const char* name : {"completeness.csv", "indicator_model.json"})
            CHECK(fs::exists(fs::path(cfg.out_dir) / name));
        // Six revenues per country is below the histogram floor, and the
        // aggregates carry no size-class columns, so neither extra lands.
        CHECK_FALSE(fs::exists(fs::path(cfg.out_dir) / "coverage.csv"));
        CHECK_FALSE(fs::exists(fs::path(cfg.out_dir) / "histogram_C00.csv"));
    }

    SECTION("fitted coefficients recover coverage from the census ratios") {
        cfg.coefficients = "fit";
        cfg.out_dir = (tmp.path() / "out_fit").string();
        cmd_completeness(cfg);
        const auto j = nlohmann::json::parse(
            testutil::read_file(fs::path(cfg.out_dir) / "completeness.json"));
        REQUIRE(j["countries"].size() == 16);
        CHECK(j["coefficients"]["fit_countries"] == 16);
        // True coverage is 6/(12+c), between 0.22 and 0.50; the fitted
        // relation should land every estimate nearby instead of clamping.
        for (const auto& row : j["countries"]) {
            CHECK_FALSE(row["clamped"].get<bool>());
            const double c = row["c"].get<double>();
            CHECK(c > 0.1);
            CHECK(c < 0.7);
        }
    }
}

TEST_CASE("commands report missing inputs before doing any work", "[pipeline]") {
    testutil::ScopedTempDir tmp;
    RunConfig cfg;
    cfg.out_dir = (tmp.path() / "out").string();
    CHECK_THROWS_AS(cmd_pipeline(cfg), MissingInputError);
    CHECK_THROWS_AS(cmd_metrics(cfg), MissingInputError);
    CHECK_THROWS_AS(cmd_sir(cfg), MissingInputError);
    CHECK_THROWS_AS(cmd_export(cfg), MissingInputError);
    CHECK_THROWS_AS(cmd_completeness(cfg), MissingInputError);

    // Board tables come in pairs; one half alone is the same error.
    RunConfig half;
    half.companies = (tmp.path() / "companies.csv").string();
    half.out_dir = cfg.out_dir;
    CHECK_THROWS_AS(cmd_metrics(half), MissingInputError);
}
