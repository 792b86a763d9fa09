// Command-line front end: subcommands map one-to-one onto the pipeline entry
// points, with a handful of global flags that override the config file.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "netqual/errors.hpp"
#include "netqual/pipeline.hpp"
#include "netqual/version.hpp"

namespace {

struct GlobalArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out_dir;
    std::optional<std::string> edges;
    bool lenient = false;
};

netqual::RunConfig effective_config(const GlobalArgs& args) {
    netqual::RunConfig cfg;
    if (!args.config.empty()) cfg = netqual::parse_config(args.config);
    netqual::CliOverrides o;
    o.seed = args.seed;
    o.threads = args.threads;
    o.out_dir = args.out_dir;
    o.edges = args.edges;
    o.lenient = args.lenient;
    netqual::apply_overrides(cfg, o);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Board-interlock network quality toolkit"};
    app.set_version_flag("--version", std::string(netqual::kVersion));
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config, "Run configuration file")
        ->check(CLI::ExistingFile);
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Base random seed (overrides config)");
    std::size_t threads_value = 1;
    auto* threads_opt =
        app.add_option("--threads", threads_value, "Worker cap (overrides config)");
    std::string out_dir_value;
    auto* out_opt = app.add_option("--out-dir", out_dir_value, "Output directory (overrides config)");
    std::string edges_value;
    auto* edges_opt =
        app.add_option("--edges", edges_value, "Edge-list input (overrides config)");
    app.add_flag("--lenient", args.lenient, "Tolerate duplicate keys in inputs (last row wins)");

    auto* pipeline = app.add_subcommand(
        "pipeline", "Full three-stage comparison: clean, measure, simulate, report");
    auto* clean = app.add_subcommand("clean", "Run the two cleaning steps and export each stage");
    auto* metrics = app.add_subcommand("metrics", "Topology summary and centralities, no cleaning");
    auto* sir = app.add_subcommand("sir", "SIR diffusion ensemble on the giant component");
    auto* completeness =
        app.add_subcommand("completeness", "Per-country registry completeness estimates");
    auto* export_cmd = app.add_subcommand("export", "Project the input tables and export the graph");

    // Accept the global options after the subcommand name too, the way they
    // are usually typed: netqual pipeline --config run.ini --threads 4.
    for (CLI::App* sub : {pipeline, clean, metrics, sir, completeness, export_cmd})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) args.seed = seed_value;
    if (*threads_opt) args.threads = threads_value;
    if (*out_opt) args.out_dir = out_dir_value;
    if (*edges_opt) args.edges = edges_value;

    try {
        const netqual::RunConfig cfg = effective_config(args);
        if (*pipeline) netqual::cmd_pipeline(cfg);
        else if (*clean) netqual::cmd_clean(cfg);
        else if (*metrics) netqual::cmd_metrics(cfg);
        else if (*sir) netqual::cmd_sir(cfg);
        else if (*completeness) netqual::cmd_completeness(cfg);
        else if (*export_cmd) netqual::cmd_export(cfg);
    } catch (const netqual::NetqualError& e) {
        std::fprintf(stderr, "%s: %s\n", netqual::kToolName, e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: unexpected error: %s\n", netqual::kToolName, e.what());
        return 1;
    }
    return 0;
}
