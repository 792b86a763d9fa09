#pragma once

// Run orchestration: the declarative config file, the three-stage cleaning
// comparison, and the entry points behind the CLI subcommands.  Everything a
// run produces is a pure function of (input files, config, seed): maps keep
// iteration orders sorted, every float goes through the 12-significant-digit
// formatter, and all randomness is derived from the base seed with named
// streams, so reruns and different --threads settings give identical bytes.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "netqual/accuracy.hpp"
#include "netqual/completeness.hpp"
#include "netqual/diffusion.hpp"
#include "netqual/errors.hpp"
#include "netqual/graph.hpp"
#include "netqual/metrics.hpp"
#include "netqual/rng.hpp"
#include "netqual/tables.hpp"
#include "netqual/util.hpp"
#include "netqual/version.hpp"

namespace netqual {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct RunConfig {
    // [input]
    std::string companies;
    std::string affiliations;
    std::string aggregates;
    std::string indicators;
    std::string edges; // alternative graph source for metrics / sir / export
    std::string country;                 // empty = no filter
    bool giant_component = true;
    bool lenient = false;
    ColumnMap company_columns;
    ColumnMap affiliation_columns;
    std::set<std::string> indicator_log; // codes loaded as natural logs

    // [accuracy]
    double jaccard_threshold = 0.5;
    double band = 0.8;

    // [metrics]
    double damping = 0.85;
    std::size_t distance_sample = 0;    // 0 = auto
    std::size_t betweenness_sample = 0; // 0 = exact
    bool transitivity = false;
    std::vector<std::size_t> curve_k = {50, 100, 200, 300, 400, 500};
    std::vector<std::string> economic_vars = {"revenue"};

    // [sir]
    double beta = 0.5;
    double gamma = 0.3;
    std::size_t ensemble = 1000;
    std::size_t sir_max_iter = 100000;
    double dieoff_threshold = 0.01;

    // [completeness]
    double sigma = 2.0;
    std::string coefficients = "builtin"; // builtin | fit
    std::size_t n_models = 1000;
    double subsample = 0.75;
    std::size_t core_size = 10;
    std::string gdp_code; // indicator used to impute missing revenue totals
    std::size_t bins = 40;
    std::size_t histogram_min = 30; // fewest revenues that still get a histogram

    // [run]
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::vector<std::string> stages = {"original", "step1", "step2"};
};

namespace detail {

inline bool parse_bool(const std::string& v, std::size_t line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw SchemaError("config line " + std::to_string(line) + ": expected true/false, got '" +
                      v + "'");
}

inline double cfg_double(const std::string& v, std::size_t line) {
    const auto d = parse_double(v);
    if (!d) throw SchemaError("config line " + std::to_string(line) + ": bad number '" + v + "'");
    return *d;
}

inline std::size_t cfg_size(const std::string& v, std::size_t line) {
    const auto d = parse_int(v);
    if (!d || *d < 0)
        throw SchemaError("config line " + std::to_string(line) + ": bad count '" + v + "'");
    return static_cast<std::size_t>(*d);
}

inline std::vector<std::string> cfg_list(const std::string& v) {
    std::vector<std::string> out;
    for (const std::string& part : split(v, ','))
        if (!trim(part).empty()) out.push_back(trim(part));
    return out;
}

} // namespace detail

// One declarative file: "[section]" headers, "key = value" lines, '#'
// comments.  Unknown sections or keys are errors so typos cannot silently
// fall back to defaults.
inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    RunConfig cfg;
    std::string section, raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw SchemaError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known = {"input",      "accuracy", "metrics",
                                                        "sir",        "completeness", "run"};
            if (!known.count(section))
                throw SchemaError("config line " + std::to_string(line_no) +
                                  ": unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string where = section + "." + key;

        if (where == "input.companies") cfg.companies = val;
        else if (where == "input.affiliations") cfg.affiliations = val;
        else if (where == "input.aggregates") cfg.aggregates = val;
        else if (where == "input.indicators") cfg.indicators = val;
        else if (where == "input.edges") cfg.edges = val;
        else if (where == "input.country") cfg.country = val;
        else if (where == "input.giant_component") cfg.giant_component = detail::parse_bool(val, line_no);
        else if (where == "input.lenient") cfg.lenient = detail::parse_bool(val, line_no);
        else if (where == "input.company_columns") cfg.company_columns = ColumnMap::parse(val);
        else if (where == "input.affiliation_columns") cfg.affiliation_columns = ColumnMap::parse(val);
        else if (where == "input.indicator_log") {
            for (const std::string& code : detail::cfg_list(val)) cfg.indicator_log.insert(code);
        }
        else if (where == "accuracy.jaccard_threshold") cfg.jaccard_threshold = detail::cfg_double(val, line_no);
        else if (where == "accuracy.band") cfg.band = detail::cfg_double(val, line_no);
        else if (where == "metrics.damping") cfg.damping = detail::cfg_double(val, line_no);
        else if (where == "metrics.distance_sample") cfg.distance_sample = detail::cfg_size(val, line_no);
        else if (where == "metrics.betweenness_sample") cfg.betweenness_sample = detail::cfg_size(val, line_no);
        else if (where == "metrics.transitivity") cfg.transitivity = detail::parse_bool(val, line_no);
        else if (where == "metrics.curve_k") {
            cfg.curve_k.clear();
            for (const std::string& k : detail::cfg_list(val))
                cfg.curve_k.push_back(detail::cfg_size(k, line_no));
        }
        else if (where == "metrics.economic_vars") cfg.economic_vars = detail::cfg_list(val);
        else if (where == "sir.beta") cfg.beta = detail::cfg_double(val, line_no);
        else if (where == "sir.gamma") cfg.gamma = detail::cfg_double(val, line_no);
        else if (where == "sir.ensemble") cfg.ensemble = detail::cfg_size(val, line_no);
        else if (where == "sir.max_iter") cfg.sir_max_iter = detail::cfg_size(val, line_no);
        else if (where == "sir.dieoff_threshold") cfg.dieoff_threshold = detail::cfg_double(val, line_no);
        else if (where == "completeness.sigma") cfg.sigma = detail::cfg_double(val, line_no);
        else if (where == "completeness.coefficients") {
            if (val != "builtin" && val != "fit")
                throw SchemaError("config line " + std::to_string(line_no) +
                                  ": coefficients must be 'builtin' or 'fit'");
            cfg.coefficients = val;
        }
        else if (where == "completeness.n_models") cfg.n_models = detail::cfg_size(val, line_no);
        else if (where == "completeness.subsample") cfg.subsample = detail::cfg_double(val, line_no);
        else if (where == "completeness.core_size") cfg.core_size = detail::cfg_size(val, line_no);
        else if (where == "completeness.gdp_code") cfg.gdp_code = val;
        else if (where == "completeness.bins") cfg.bins = detail::cfg_size(val, line_no);
        else if (where == "completeness.histogram_min") cfg.histogram_min = detail::cfg_size(val, line_no);
        else if (where == "run.out_dir") cfg.out_dir = val;
        else if (where == "run.seed") cfg.seed = static_cast<std::uint64_t>(detail::cfg_size(val, line_no));
        else if (where == "run.threads") cfg.threads = std::max<std::size_t>(1, detail::cfg_size(val, line_no));
        else if (where == "run.stages") {
            cfg.stages = detail::cfg_list(val);
            static const std::vector<std::string> order = {"original", "step1", "step2"};
            std::size_t pos = 0;
            for (const std::string& s : cfg.stages) {
                while (pos < order.size() && order[pos] != s) ++pos;
                if (pos == order.size())
                    throw SchemaError("config line " + std::to_string(line_no) +
                                      ": stages must be an ordered subset of original,step1,step2");
                ++pos;
            }
            if (cfg.stages.empty())
                throw SchemaError("config line " + std::to_string(line_no) + ": stages is empty");
        }
        else
            throw SchemaError("config line " + std::to_string(line_no) + ": unknown key '" +
                              where + "'");
    }
    return cfg;
}

// Flag values that take precedence over the config file.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out_dir;
    std::optional<std::string> edges;
    bool lenient = false;
};

inline void apply_overrides(RunConfig& cfg, const CliOverrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = std::max<std::size_t>(1, *o.threads);
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.edges) cfg.edges = *o.edges;
    if (o.lenient) cfg.lenient = true;
}

namespace detail {

inline nlohmann::ordered_json config_echo(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["input"] = {{"companies", c.companies},
                  {"affiliations", c.affiliations},
                  {"aggregates", c.aggregates},
                  {"indicators", c.indicators},
                  {"edges", c.edges},
                  {"country", c.country},
                  {"giant_component", c.giant_component},
                  {"lenient", c.lenient}};
    j["accuracy"] = {{"jaccard_threshold", round_sig12(c.jaccard_threshold)},
                     {"band", round_sig12(c.band)}};
    j["metrics"] = {{"damping", round_sig12(c.damping)},
                    {"distance_sample", c.distance_sample},
                    {"betweenness_sample", c.betweenness_sample},
                    {"transitivity", c.transitivity},
                    {"curve_k", c.curve_k},
                    {"economic_vars", c.economic_vars}};
    j["sir"] = {{"beta", round_sig12(c.beta)},
                {"gamma", round_sig12(c.gamma)},
                {"ensemble", c.ensemble},
                {"max_iter", c.sir_max_iter},
                {"dieoff_threshold", round_sig12(c.dieoff_threshold)}};
    j["completeness"] = {{"sigma", round_sig12(c.sigma)},
                         {"coefficients", c.coefficients},
                         {"n_models", c.n_models},
                         {"subsample", round_sig12(c.subsample)},
                         {"core_size", c.core_size},
                         {"gdp_code", c.gdp_code},
                         {"bins", c.bins},
                         {"histogram_min", c.histogram_min}};
    // threads is deliberately not echoed: it cannot affect any result, and
    // reports from runs that differ only in worker count should be
    // byte-identical.
    j["run"] = {{"out_dir", c.out_dir},
                {"seed", c.seed},
                {"stages", c.stages}};
    return j;
}

inline void write_file(const std::filesystem::path& dir, const std::string& name,
                       const std::string& content) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << content;
    if (!out) throw IoError("failed writing '" + p.string() + "'");
}

inline std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// Graph a subcommand should analyse: an edge list when one is configured,
// otherwise the projection of the company/affiliation tables.
inline FirmGraph graph_for_analysis(const RunConfig& cfg) {
    FirmGraph g;
    if (!cfg.edges.empty()) {
        g = import_edgelist(cfg.edges);
    } else {
        if (cfg.companies.empty() || cfg.affiliations.empty())
            throw MissingInputError("config needs input.companies and input.affiliations "
                                    "(or input.edges)");
        const AffiliationTable table = load_affiliation_table(
            cfg.companies, cfg.affiliations, cfg.company_columns, cfg.lenient);
        g = project(table, cfg.country.empty() ? std::nullopt
                                               : std::optional<std::string>(cfg.country));
    }
    if (cfg.giant_component) g = giant_component(g);
    return g;
}

struct Stage {
    std::string name;
    FirmGraph graph;
    std::optional<MergeReport> merge; // absent for the original stage
};

// original -> step1 -> step2, cumulative; only the configured stages are
// returned but earlier cleaning still runs when a later stage needs it.
inline std::vector<Stage> build_stages(const FirmGraph& g0, const RunConfig& cfg) {
    const std::set<std::string> wanted(cfg.stages.begin(), cfg.stages.end());
    std::vector<Stage> stages;
    if (wanted.count("original")) stages.push_back({"original", g0, std::nullopt});
    if (wanted.count("step1") || wanted.count("step2")) {
        auto [g1, r1] = step1_exact_merge(g0);
        if (wanted.count("step1")) stages.push_back({"step1", g1, std::move(r1)});
        if (wanted.count("step2")) {
            auto [g2, r2] = step2_topo_merge(g1, cfg.jaccard_threshold, cfg.band);
            stages.push_back({"step2", std::move(g2), std::move(r2)});
        }
    }
    return stages;
}

inline std::string export_edgelist_text(const FirmGraph& g) {
    std::ostringstream os;
    export_edgelist(g, os);
    return os.str();
}

inline std::string export_nodes_text(const FirmGraph& g) {
    std::ostringstream os;
    export_nodes(g, os);
    return os.str();
}

inline std::vector<std::optional<double>> economic_values(const FirmGraph& g,
                                                          const std::string& var) {
    std::vector<std::optional<double>> out(g.node_count());
    for (NodeId v = 0; v < g.node_count(); ++v) {
        const FirmNode& n = g.nodes[v];
        if (var == "revenue") out[v] = n.revenue_usd.value;
        else if (var == "employees") {
            if (n.employees.value) out[v] = static_cast<double>(*n.employees.value);
        } else if (var == "market_cap") out[v] = n.market_cap_usd.value;
        else throw SchemaError("unknown economic variable '" + var +
                               "' (expected revenue, employees or market_cap)");
    }
    return out;
}

struct StageAnalysis {
    TopologySummary summary;
    std::string centrality_csv;
    std::string curve_csv;            // empty when no curve was computable
    nlohmann::ordered_json curves;    // mirrors the CSV
    SirEnsembleSummary sir;
    std::string sir_csv;
};

inline StageAnalysis analyse_stage(const Stage& stage, const RunConfig& cfg,
                                   std::size_t stage_index) {
    const FirmGraph& g = stage.graph;
    StageAnalysis a;
    a.summary = topology_summary(g, cfg.distance_sample,
                                 derive_seed(cfg.seed, "distances", stage_index),
                                 cfg.transitivity, static_cast<unsigned>(cfg.threads));

    const PagerankResult pr = pagerank(g, cfg.damping);
    const std::vector<double> btw =
        betweenness(g, cfg.betweenness_sample,
                    derive_seed(cfg.seed, "betweenness", stage_index),
                    static_cast<unsigned>(cfg.threads));
    std::ostringstream cent;
    write_centrality_csv(g, pr.scores, btw, cent);
    a.centrality_csv = cent.str();

    // Rank-correlation curves for every centrality x economic variable pair
    // that has enough attributed nodes; combinations that cannot support the
    // smallest k are skipped rather than failing the stage.
    std::vector<double> deg(g.node_count());
    for (NodeId v = 0; v < g.node_count(); ++v) deg[v] = static_cast<double>(g.degree(v));
    const std::vector<std::pair<std::string, const std::vector<double>*>> measures = {
        {"degree", &deg}, {"pagerank", &pr.scores}, {"betweenness", &btw}};
    std::ostringstream curve;
    curve << "measure,economic_var,k,rho\n";
    a.curves = nlohmann::ordered_json::array();
    bool any_curve = false;
    for (const std::string& var : cfg.economic_vars) {
        const auto econ = economic_values(g, var);
        std::size_t attributed = 0;
        for (const auto& e : econ)
            if (e) ++attributed;
        std::vector<std::size_t> grid;
        for (std::size_t k : cfg.curve_k)
            if (k >= 3 && k <= attributed) grid.push_back(k);
        if (grid.empty()) continue;
        for (const auto& [name, values] : measures) {
            nlohmann::ordered_json entry;
            entry["measure"] = name;
            entry["economic_var"] = var;
            entry["points"] = nlohmann::ordered_json::array();
            for (const CurvePoint& p : rank_correlation_curve(econ, *values, grid)) {
                curve << name << ',' << var << ',' << p.k << ',' << format_double(p.rho) << '\n';
                entry["points"].push_back({{"k", p.k}, {"rho", round_sig12(p.rho)}});
            }
            a.curves.push_back(std::move(entry));
            any_curve = true;
        }
    }
    if (any_curve) a.curve_csv = curve.str();

    SirParams sp;
    sp.beta = cfg.beta;
    sp.gamma = cfg.gamma;
    sp.ensemble = cfg.ensemble;
    sp.max_iter = cfg.sir_max_iter;
    sp.dieoff_threshold = cfg.dieoff_threshold;
    sp.threads = cfg.threads;
    sp.seed = derive_seed(cfg.seed, "sir", stage_index);
    // Diffusion runs on the stage's giant component; cleaning can leave the
    // graph disconnected even when the pipeline started from one component.
    a.sir = sir_ensemble(giant_component(g), sp);
    std::ostringstream sir_csv;
    sir_csv << "iteration,mean_s,mean_i,mean_r\n";
    for (std::size_t t = 0; t < a.sir.mean_s.size(); ++t)
        sir_csv << t << ',' << format_double(a.sir.mean_s[t]) << ','
                << format_double(a.sir.mean_i[t]) << ',' << format_double(a.sir.mean_r[t])
                << '\n';
    a.sir_csv = sir_csv.str();
    return a;
}

// ---------------------------------------------------------------------------
// Completeness analysis over countries
// ---------------------------------------------------------------------------

struct CompletenessOutputs {
    nlohmann::ordered_json report; // embedded in the run report
    std::string completeness_csv;
    std::string coverage_csv;                    // empty without size-class data
    std::map<std::string, std::string> histograms; // country -> csv
    nlohmann::ordered_json model_json;
};

inline CompletenessOutputs run_completeness(const RunConfig& cfg,
                                            const std::vector<CompanyRecord>& companies) {
    if (cfg.aggregates.empty() || cfg.indicators.empty())
        throw MissingInputError(
            "completeness needs input.aggregates and input.indicators in the config");
    const std::vector<CountryAggregate> aggregates = parse_aggregates(cfg.aggregates);
    const IndicatorTable indicators =
        parse_indicators(cfg.indicators, cfg.indicator_log, {}, cfg.lenient);

    // Observed mean revenue and revenue samples per country, from the dataset.
    std::map<std::string, std::vector<double>> revenues;
    std::map<std::string, std::size_t> firm_counts;
    for (const CompanyRecord& c : companies) {
        if (c.country.empty()) continue;
        firm_counts[c.country] += 1;
        if (c.revenue_usd && *c.revenue_usd > 0.0) revenues[c.country].push_back(*c.revenue_usd);
    }
    std::map<std::string, double> r_obs;
    for (const auto& [country, values] : revenues) {
        double acc = 0.0;
        for (double v : values) acc += v;
        r_obs[country] = acc / static_cast<double>(values.size());
    }

    // Official expected mean revenue per country: total revenue over firm
    // count, imputing missing totals from GDP when a GDP indicator is named.
    std::vector<std::pair<double, double>> gdp_revenue_pairs;
    const auto gdp_of = [&](const std::string& country) -> std::optional<double> {
        if (cfg.gdp_code.empty()) return std::nullopt;
        const auto row = indicators.country_row(country);
        const auto col = indicators.code_col(cfg.gdp_code);
        if (!row || !col) return std::nullopt;
        const auto& cell = indicators.values[*row][*col];
        if (!cell) return std::nullopt;
        // Stored as ln when the code was loaded under the log transform.
        return cfg.indicator_log.count(cfg.gdp_code) ? std::exp(*cell) : *cell;
    };
    for (const CountryAggregate& agg : aggregates) {
        if (!agg.total_revenue_usd || !(*agg.total_revenue_usd > 0.0)) continue;
        if (const auto gdp = gdp_of(agg.country))
            gdp_revenue_pairs.emplace_back(*gdp, *agg.total_revenue_usd);
    }
    std::optional<GdpRevenueFit> gdp_fit;
    if (gdp_revenue_pairs.size() >= 3) gdp_fit = fit_gdp_revenue(gdp_revenue_pairs);

    std::map<std::string, double> targets;          // country -> ln(expected mean)
    std::map<std::string, double> official_counts;  // country -> official firm count
    std::size_t imputed_totals = 0;
    for (const CountryAggregate& agg : aggregates) {
        if (agg.firm_count <= 0) continue;
        official_counts[agg.country] = static_cast<double>(agg.firm_count);
        std::optional<double> total = agg.total_revenue_usd;
        if ((!total || !(*total > 0.0)) && gdp_fit) {
            if (const auto gdp = gdp_of(agg.country)) {
                total = gdp_fit->predict(*gdp);
                ++imputed_totals;
            }
        }
        if (total && *total > 0.0)
            targets[agg.country] = std::log(*total / static_cast<double>(agg.firm_count));
    }

    IndicatorFitParams fit_params;
    fit_params.n_models = cfg.n_models;
    fit_params.subsample = cfg.subsample;
    fit_params.core_size = cfg.core_size;
    fit_params.seed = derive_seed(cfg.seed, "completeness", 0);
    fit_params.threads = cfg.threads;
    const IndicatorModel model = fit_indicator_model(indicators, targets, fit_params);

    // Predicted mean revenue for every country the indicator table covers.
    std::map<std::string, RhatEstimate> r_hat;
    for (const std::string& country : indicators.countries)
        r_hat[country] = estimate_rhat(model, indicators, country);

    // Coefficients: the shipped calibration, or refit on countries whose
    // completeness is directly measurable as dataset count / official count.
    CompletenessCoefficients coeffs = kBuiltinCompletenessCoefficients;
    std::size_t fit_countries = 0;
    if (cfg.coefficients == "fit") {
        std::vector<CRelationPoint> points;
        for (const auto& [country, obs_mean] : r_obs) {
            const auto official = official_counts.find(country);
            const auto pred = r_hat.find(country);
            const auto count = firm_counts.find(country);
            if (official == official_counts.end() || pred == r_hat.end() ||
                count == firm_counts.end())
                continue;
            const double c_direct =
                static_cast<double>(count->second) / official->second;
            if (!(c_direct > 0.0)) continue;
            points.push_back({c_direct, obs_mean, pred->second.r_hat_mean});
        }
        coeffs = fit_c_relation(points);
        fit_countries = points.size();
    }

    CompletenessOutputs out;
    std::ostringstream csv;
    csv << "country,r_obs,r_hat,mu,c,clamped\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::vector<CompletenessEstimate> estimates;
    for (const auto& [country, obs_mean] : r_obs) {
        const auto pred = r_hat.find(country);
        if (pred == r_hat.end()) continue;
        const CompletenessEstimate est = estimate_completeness(
            coeffs, country, obs_mean, pred->second.r_hat_mean, cfg.sigma);
        estimates.push_back(est);
        csv << est.country << ',' << format_double(est.r_obs_mean) << ','
            << format_double(est.r_hat_mean) << ',' << format_double(est.mu) << ','
            << format_double(est.c) << ',' << (est.clamped ? "true" : "false") << '\n';
        rows.push_back({{"country", est.country},
                        {"r_obs_mean", round_sig12(est.r_obs_mean)},
                        {"r_hat_mean", round_sig12(est.r_hat_mean)},
                        {"mu", round_sig12(est.mu)},
                        {"c", round_sig12(est.c)},
                        {"clamped", est.clamped}});
    }
    out.completeness_csv = csv.str();

    // Observed vs expected revenue histograms for countries with enough data.
    for (const CompletenessEstimate& est : estimates) {
        const std::vector<double>& sample = revenues.at(est.country);
        if (sample.size() < std::max<std::size_t>(cfg.histogram_min, 2)) continue;
        const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
        if (!(*lo_it < *hi_it)) continue;
        const std::vector<double> edges =
            log_spaced_edges(*lo_it, *hi_it * (1.0 + 1e-9), cfg.bins);
        const Histogram obs = observed_histogram(sample, edges);
        const Histogram exp_h = expected_distribution(est.mu, cfg.sigma, est.c, edges);
        std::ostringstream h;
        h << "bin_low,bin_high,observed,expected\n";
        for (std::size_t b = 0; b < obs.mass.size(); ++b) {
            const double lo = b == 0 ? 0.0 : edges[b - 1];
            const double hi = b < edges.size() ? edges[b]
                                               : std::numeric_limits<double>::infinity();
            h << format_double(lo) << ',' << format_double(hi) << ','
              << format_double(obs.mass[b]) << ',' << format_double(exp_h.mass[b]) << '\n';
        }
        out.histograms[est.country] = h.str();
    }

    // Coverage by employee band where the official aggregates carry counts.
    std::ostringstream cov;
    cov << "country,size_class,dataset_count,aggregate_count,ratio\n";
    bool any_cov = false;
    for (const CountryAggregate& agg : aggregates) {
        if (agg.size_class_counts.empty()) continue;
        const SizeClassCoverage c = coverage_by_size_class(companies, agg);
        for (std::size_t b = 0; b < kSizeClassLabels.size(); ++b) {
            cov << c.country << ',' << kSizeClassLabels[b] << ',' << c.dataset_count[b] << ','
                << c.aggregate_count[b] << ','
                << (c.ratio[b] ? format_double(*c.ratio[b]) : std::string()) << '\n';
        }
        any_cov = true;
    }
    if (any_cov) out.coverage_csv = cov.str();

    out.model_json = model.to_json();
    out.report["countries"] = rows;
    out.report["coefficients"] = {{"source", cfg.coefficients},
                                  {"a0", round_sig12(coeffs.a0)},
                                  {"a1", round_sig12(coeffs.a1)},
                                  {"a2", round_sig12(coeffs.a2)},
                                  {"fit_countries", fit_countries}};
    out.report["sigma"] = round_sig12(cfg.sigma);
    out.report["log_base"] = "e";
    out.report["imputed_revenue_totals"] = imputed_totals;
    out.report["model"] = out.model_json;
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

// Full three-stage comparison; returns the report that was also written to
// <out_dir>/report.json.
inline nlohmann::ordered_json cmd_pipeline(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    const FirmGraph g0 = detail::graph_for_analysis(cfg);
    const std::vector<detail::Stage> stages = detail::build_stages(g0, cfg);

    nlohmann::ordered_json report;
    report["tool"] = kToolName;
    report["version"] = kVersion;
    report["config"] = detail::config_echo(cfg);
    report["stages"] = nlohmann::ordered_json::array();

    for (std::size_t s = 0; s < stages.size(); ++s) {
        const detail::Stage& stage = stages[s];
        const detail::StageAnalysis a = detail::analyse_stage(stage, cfg, s);

        nlohmann::ordered_json entry;
        entry["name"] = stage.name;
        entry["summary"] = a.summary.to_json();
        entry["merge"] = stage.merge ? stage.merge->to_json() : nlohmann::ordered_json();
        entry["sir"] = a.sir.to_json();
        entry["curves"] = a.curves;

        nlohmann::ordered_json files;
        detail::write_file(dir, "edges_" + stage.name + ".tsv",
                           detail::export_edgelist_text(stage.graph));
        files["edges"] = "edges_" + stage.name + ".tsv";
        detail::write_file(dir, "nodes_" + stage.name + ".tsv",
                           detail::export_nodes_text(stage.graph));
        files["nodes"] = "nodes_" + stage.name + ".tsv";
        detail::write_file(dir, "summary_" + stage.name + ".json",
                           detail::json_text(a.summary.to_json()));
        files["summary"] = "summary_" + stage.name + ".json";
        detail::write_file(dir, "centrality_" + stage.name + ".csv", a.centrality_csv);
        files["centrality"] = "centrality_" + stage.name + ".csv";
        if (!a.curve_csv.empty()) {
            detail::write_file(dir, "curve_" + stage.name + ".csv", a.curve_csv);
            files["curve"] = "curve_" + stage.name + ".csv";
        }
        detail::write_file(dir, "sir_" + stage.name + ".csv", a.sir_csv);
        files["sir_trajectory"] = "sir_" + stage.name + ".csv";
        detail::write_file(dir, "sir_" + stage.name + ".json",
                           detail::json_text(a.sir.to_json()));
        files["sir_summary"] = "sir_" + stage.name + ".json";
        if (stage.merge) {
            detail::write_file(dir, "merge_" + stage.name + ".json",
                               detail::json_text(stage.merge->to_json()));
            files["merge"] = "merge_" + stage.name + ".json";
        }
        entry["files"] = files;
        report["stages"].push_back(std::move(entry));
    }

    // Completeness section only when its inputs are configured.
    if (!cfg.aggregates.empty() && !cfg.indicators.empty()) {
        if (cfg.companies.empty())
            throw MissingInputError("completeness needs input.companies in the config");
        const std::vector<CompanyRecord> companies =
            parse_companies(cfg.companies, cfg.company_columns, cfg.lenient);
        const detail::CompletenessOutputs c = detail::run_completeness(cfg, companies);
        detail::write_file(dir, "completeness.csv", c.completeness_csv);
        detail::write_file(dir, "indicator_model.json", detail::json_text(c.model_json));
        if (!c.coverage_csv.empty()) detail::write_file(dir, "coverage.csv", c.coverage_csv);
        for (const auto& [country, csv] : c.histograms)
            detail::write_file(dir, "histogram_" + country + ".csv", csv);
        report["completeness"] = c.report;
    }

    detail::write_file(dir, "report.json", detail::json_text(report));
    return report;
}

// Cleaning only: stage edge lists / node tables and the merge reports.
inline void cmd_clean(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    const FirmGraph g0 = detail::graph_for_analysis(cfg);
    for (const detail::Stage& stage : detail::build_stages(g0, cfg)) {
        detail::write_file(dir, "edges_" + stage.name + ".tsv",
                           detail::export_edgelist_text(stage.graph));
        detail::write_file(dir, "nodes_" + stage.name + ".tsv",
                           detail::export_nodes_text(stage.graph));
        if (stage.merge)
            detail::write_file(dir, "merge_" + stage.name + ".json",
                               detail::json_text(stage.merge->to_json()));
    }
}

// Topology summary + centralities (+ curves when economic data is present)
// for the input graph as-is, without cleaning.
inline void cmd_metrics(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    detail::Stage stage{"original", detail::graph_for_analysis(cfg), std::nullopt};
    const detail::StageAnalysis a = detail::analyse_stage(stage, cfg, 0);
    detail::write_file(dir, "summary.json", detail::json_text(a.summary.to_json()));
    detail::write_file(dir, "centrality.csv", a.centrality_csv);
    if (!a.curve_csv.empty()) detail::write_file(dir, "curve.csv", a.curve_csv);
}

// Diffusion ensemble on the (giant component of the) input graph.
inline void cmd_sir(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    const FirmGraph g = detail::graph_for_analysis(cfg);
    SirParams sp;
    sp.beta = cfg.beta;
    sp.gamma = cfg.gamma;
    sp.ensemble = cfg.ensemble;
    sp.max_iter = cfg.sir_max_iter;
    sp.dieoff_threshold = cfg.dieoff_threshold;
    sp.threads = cfg.threads;
    sp.seed = derive_seed(cfg.seed, "sir", 0);
    const SirEnsembleSummary sum = sir_ensemble(giant_component(g), sp);
    std::ostringstream csv;
    csv << "iteration,mean_s,mean_i,mean_r\n";
    for (std::size_t t = 0; t < sum.mean_s.size(); ++t)
        csv << t << ',' << format_double(sum.mean_s[t]) << ',' << format_double(sum.mean_i[t])
            << ',' << format_double(sum.mean_r[t]) << '\n';
    detail::write_file(dir, "sir.csv", csv.str());
    detail::write_file(dir, "sir.json", detail::json_text(sum.to_json()));
}

// Registry completeness per country.
inline void cmd_completeness(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    if (cfg.companies.empty())
        throw MissingInputError("completeness needs input.companies in the config");
    const std::vector<CompanyRecord> companies =
        parse_companies(cfg.companies, cfg.company_columns, cfg.lenient);
    const detail::CompletenessOutputs c = detail::run_completeness(cfg, companies);
    detail::write_file(dir, "completeness.csv", c.completeness_csv);
    detail::write_file(dir, "indicator_model.json", detail::json_text(c.model_json));
    if (!c.coverage_csv.empty()) detail::write_file(dir, "coverage.csv", c.coverage_csv);
    for (const auto& [country, csv] : c.histograms)
        detail::write_file(dir, "histogram_" + country + ".csv", csv);
    detail::write_file(dir, "completeness.json", detail::json_text(c.report));
}

// Projection export without cleaning: edge list + node table.
inline void cmd_export(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    const FirmGraph g = detail::graph_for_analysis(cfg);
    detail::write_file(dir, "edges.tsv", detail::export_edgelist_text(g));
    detail::write_file(dir, "nodes.tsv", detail::export_nodes_text(g));
}

} // namespace netqual
