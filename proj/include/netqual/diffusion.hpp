#pragma once

// Discrete-time SIR diffusion over a firm graph.  One run seeds a single
// infected node and advances in synchronous iterations: every node infected
// at the start of an iteration first attempts to infect each still
// susceptible neighbour independently (probability beta), then faces its own
// recovery draw (probability gamma).  Nodes infected during an iteration sit
// dormant until the next one, so every infection is contagious for at least
// one full iteration.  Ensembles rerun this with a fresh uniformly drawn seed
// node and an independent derived random stream per run; runs are therefore
// safe to execute in parallel, and all statistics are reduced in run order so
// results do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "netqual/errors.hpp"
#include "netqual/graph.hpp"
#include "netqual/rng.hpp"
#include "netqual/util.hpp"

namespace netqual {

struct SirParams {
    double beta = 0.5;   // per-edge per-iteration infection probability
    double gamma = 0.3;  // per-iteration recovery probability
    std::size_t ensemble = 1000;
    std::size_t max_iter = 100000; // safety cap; relevant when gamma == 0
    std::uint64_t seed = 0;
    // A run "dies off" when its final cumulative infected fraction stays
    // below this threshold.
    double dieoff_threshold = 0.01;
    std::size_t threads = 1;
};

namespace detail {

inline void check_sir_params(const SirParams& p) {
    if (!(p.beta >= 0.0 && p.beta <= 1.0))
        throw DomainValueError("sir: beta must be in [0,1]");
    if (!(p.gamma >= 0.0 && p.gamma <= 1.0))
        throw DomainValueError("sir: gamma must be in [0,1]");
    if (p.ensemble < 1) throw DomainValueError("sir: ensemble must be >= 1");
    if (p.max_iter < 1) throw DomainValueError("sir: max_iter must be >= 1");
    if (!(p.dieoff_threshold > 0.0 && p.dieoff_threshold < 1.0))
        throw DomainValueError("sir: dieoff_threshold must be in (0,1)");
}

} // namespace detail

struct SirTrajectory {
    // Fractions per iteration; index 0 is the initial state with one
    // infected node.  s[t] + i[t] + r[t] == 1 up to rounding.
    std::vector<double> s, i, r;
    double final_recovered = 0.0;     // recovered fraction when the run ended
    double cumulative_infected = 0.0; // fraction ever infected = 1 - final S
};

inline SirTrajectory sir_run(const FirmGraph& g, const SirParams& params,
                             std::optional<NodeId> seed_node, std::uint64_t run_seed) {
    detail::check_sir_params(params);
    const std::size_t n = g.node_count();
    if (n == 0) throw EmptyInputError("sir_run: graph has no nodes");
    if (seed_node && *seed_node >= n)
        throw DomainValueError("sir_run: seed node out of range");

    Rng rng(run_seed);
    // When no seed node is forced, its draw is the run's first, so a run is
    // fully reproducible from its seed alone.
    const NodeId start =
        seed_node ? *seed_node : static_cast<NodeId>(rng.uniform_below(n));

    enum : std::uint8_t { kS = 0, kI = 1, kR = 2, kNew = 3 };
    std::vector<std::uint8_t> state(n, kS);
    state[start] = kI;
    std::size_t n_s = n - 1, n_i = 1, n_r = 0;

    SirTrajectory traj;
    const double inv = 1.0 / static_cast<double>(n);
    const auto record = [&] {
        traj.s.push_back(static_cast<double>(n_s) * inv);
        traj.i.push_back(static_cast<double>(n_i) * inv);
        traj.r.push_back(static_cast<double>(n_r) * inv);
    };
    record();

    std::vector<NodeId> infected{start};
    std::vector<NodeId> next_infected;
    for (std::size_t iter = 0; iter < params.max_iter && !infected.empty(); ++iter) {
        next_infected.clear();
        // Infection sweep; nodes and neighbours visited in ascending id
        // order so the draw sequence is well defined.
        for (NodeId u : infected) {
            for (NodeId v : g.adj[u]) {
                if (state[v] != kS) continue;
                if (rng.uniform01() < params.beta) {
                    state[v] = kNew;
                    --n_s;
                    ++n_i;
                    next_infected.push_back(v);
                }
            }
        }
        // Recovery sweep over the nodes that started the iteration infected.
        std::size_t kept = 0;
        for (NodeId u : infected) {
            if (rng.uniform01() < params.gamma) {
                state[u] = kR;
                --n_i;
                ++n_r;
            } else {
                infected[kept++] = u;
            }
        }
        infected.resize(kept);
        for (NodeId v : next_infected) state[v] = kI;
        infected.insert(infected.end(), next_infected.begin(), next_infected.end());
        std::sort(infected.begin(), infected.end());
        record();
    }

    traj.final_recovered = static_cast<double>(n_r) * inv;
    traj.cumulative_infected = 1.0 - static_cast<double>(n_s) * inv;
    return traj;
}

struct SirEnsembleSummary {
    // Mean fractions per iteration across runs; runs that ended early hold
    // their final state for the remaining iterations.
    std::vector<double> mean_s, mean_i, mean_r;
    double dieoff_fraction = 0.0;
    double mean_final_recovered = 0.0;
    std::vector<double> final_sizes; // recovered fraction per run, in run order
    SirParams params;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["dieoff_fraction"] = round_sig12(dieoff_fraction);
        j["mean_final_recovered"] = round_sig12(mean_final_recovered);
        j["params"] = {{"beta", round_sig12(params.beta)},
                       {"gamma", round_sig12(params.gamma)},
                       {"ensemble", params.ensemble},
                       {"max_iter", params.max_iter},
                       {"seed", params.seed},
                       {"dieoff_threshold", round_sig12(params.dieoff_threshold)}};
        return j;
    }
};

inline SirEnsembleSummary sir_ensemble(const FirmGraph& g, const SirParams& params) {
    detail::check_sir_params(params);
    if (g.node_count() == 0) throw EmptyInputError("sir_ensemble: graph has no nodes");

    std::vector<SirTrajectory> runs(params.ensemble);
    parallel_chunks(params.ensemble, params.threads,
                    [&](std::size_t, std::size_t b, std::size_t e) {
                        for (std::size_t r = b; r < e; ++r)
                            runs[r] = sir_run(g, params, std::nullopt,
                                              derive_seed(params.seed, "sir-run", r));
                    });

    SirEnsembleSummary out;
    out.params = params;
    std::size_t max_len = 0;
    for (const SirTrajectory& t : runs) max_len = std::max(max_len, t.s.size());
    out.mean_s.assign(max_len, 0.0);
    out.mean_i.assign(max_len, 0.0);
    out.mean_r.assign(max_len, 0.0);
    std::size_t dieoffs = 0;
    for (const SirTrajectory& t : runs) {
        // Runs only end early by extinction, so the held final state always
        // has i == 0 and the per-iteration fractions keep summing to one.
        for (std::size_t k = 0; k < max_len; ++k) {
            const std::size_t idx = std::min(k, t.s.size() - 1);
            out.mean_s[k] += t.s[idx];
            out.mean_i[k] += t.i[idx];
            out.mean_r[k] += t.r[idx];
        }
        out.final_sizes.push_back(t.final_recovered);
        out.mean_final_recovered += t.final_recovered;
        if (t.cumulative_infected < params.dieoff_threshold) ++dieoffs;
    }
    const double n_runs = static_cast<double>(params.ensemble);
    for (double& v : out.mean_s) v /= n_runs;
    for (double& v : out.mean_i) v /= n_runs;
    for (double& v : out.mean_r) v /= n_runs;
    out.mean_final_recovered /= n_runs;
    out.dieoff_fraction = static_cast<double>(dieoffs) / n_runs;
    return out;
}

} // namespace netqual
