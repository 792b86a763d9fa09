#pragma once

// Whole-graph topology summary, centralities and rank correlations.
//
// Everything here is deterministic for a fixed seed, including under any
// --threads value: parallel sections write per-source results into
// preallocated slots and reduce them in source order, so floating point
// addition order never depends on scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "netqual/errors.hpp"
#include "netqual/graph.hpp"
#include "netqual/rng.hpp"
#include "netqual/util.hpp"

namespace netqual {

struct TopologySummary {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    double density = 0;
    double avg_degree = 0;
    double clustering = 0;          // mean local clustering (degree<2 nodes count 0)
    bool clustering_is_transitivity = false;
    double avg_distance = 0;
    double avg_distance_stderr = 0; // 0 when exact
    std::size_t distance_sources = 0;
    bool distances_on_giant_component = false;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["nodes"] = nodes;
        j["edges"] = edges;
        j["density"] = round_sig12(density);
        j["avg_degree"] = round_sig12(avg_degree);
        j["clustering"] = round_sig12(clustering);
        j["clustering_is_transitivity"] = clustering_is_transitivity;
        j["avg_distance"] = round_sig12(avg_distance);
        j["avg_distance_stderr"] = round_sig12(avg_distance_stderr);
        j["distance_sources"] = distance_sources;
        j["distances_on_giant_component"] = distances_on_giant_component;
        return j;
    }
};

namespace detail {

// Single-source BFS; fills dist (-1 = unreachable) and returns the sum of
// finite distances and the count of reached nodes (excluding the source).
inline void bfs_distances(const FirmGraph& g, NodeId source, std::vector<std::int32_t>& dist,
                          double& sum, std::size_t& reached) {
    std::fill(dist.begin(), dist.end(), -1);
    std::vector<NodeId> queue;
    queue.reserve(g.nodes.size());
    dist[source] = 0;
    queue.push_back(source);
    sum = 0;
    reached = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId u = queue[head];
        for (NodeId v : g.adj[u]) {
            if (dist[v] >= 0) continue;
            dist[v] = dist[u] + 1;
            sum += dist[v];
            ++reached;
            queue.push_back(v);
        }
    }
}

inline std::vector<double> local_clustering(const FirmGraph& g) {
    std::vector<double> c(g.nodes.size(), 0.0);
    for (NodeId u = 0; u < g.nodes.size(); ++u) {
        const auto& nbrs = g.adj[u];
        if (nbrs.size() < 2) continue;
        std::size_t links = 0;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            const auto& other = g.adj[nbrs[i]];
            for (std::size_t j = i + 1; j < nbrs.size(); ++j)
                if (std::binary_search(other.begin(), other.end(), nbrs[j])) ++links;
        }
        c[u] = 2.0 * static_cast<double>(links) /
               (static_cast<double>(nbrs.size()) * static_cast<double>(nbrs.size() - 1));
    }
    return c;
}

} // namespace detail

// Exact all-source BFS distances are used up to this many nodes; beyond it
// the mean distance is estimated from sampled sources with a standard error.
inline constexpr std::size_t kExactDistanceLimit = 5000;

// distance_sample = 0 picks the default: exact when the (giant component of
// the) graph has at most kExactDistanceLimit nodes, otherwise 1000 sampled
// sources.  An explicit value forces sampling with that many sources (capped
// at n, which degenerates to the exact computation).
inline TopologySummary topology_summary(const FirmGraph& g, std::size_t distance_sample = 0,
                                        std::uint64_t seed = 0, bool use_transitivity = false,
                                        unsigned threads = 1) {
    if (g.nodes.empty()) throw EmptyInputError("topology_summary of an empty graph");
    TopologySummary s;
    s.nodes = g.node_count();
    s.edges = g.edge_count();
    const double n = static_cast<double>(s.nodes);
    s.avg_degree = s.nodes ? 2.0 * static_cast<double>(s.edges) / n : 0.0;
    s.density = s.nodes > 1 ? 2.0 * static_cast<double>(s.edges) / (n * (n - 1.0)) : 0.0;

    const auto clustering = detail::local_clustering(g);
    if (use_transitivity) {
        // closed / connected triples, aggregated over the whole graph
        double closed = 0, triples = 0;
        for (NodeId u = 0; u < g.nodes.size(); ++u) {
            const double d = static_cast<double>(g.adj[u].size());
            triples += d * (d - 1.0) / 2.0;
            closed += clustering[u] * d * (d - 1.0) / 2.0;
        }
        s.clustering = triples > 0 ? closed / triples : 0.0;
        s.clustering_is_transitivity = true;
    } else {
        s.clustering = std::accumulate(clustering.begin(), clustering.end(), 0.0) / n;
    }

    // Distances: work on the giant component when disconnected.
    std::size_t comp_count = 0;
    const auto comp = connected_components(g, &comp_count);
    const FirmGraph* dist_graph = &g;
    FirmGraph gc_storage;
    if (comp_count > 1) {
        gc_storage = giant_component(g);
        dist_graph = &gc_storage;
        s.distances_on_giant_component = true;
    }
    const std::size_t m = dist_graph->node_count();
    if (m < 2) {
        s.avg_distance = 0.0;
        s.distance_sources = m;
        return s;
    }

    std::vector<NodeId> sources;
    bool exact = false;
    if (distance_sample == 0 && m <= kExactDistanceLimit) {
        exact = true;
        sources.resize(m);
        std::iota(sources.begin(), sources.end(), 0u);
    } else {
        std::size_t want = distance_sample == 0 ? 1000 : distance_sample;
        if (want >= m) {
            exact = true;
            sources.resize(m);
            std::iota(sources.begin(), sources.end(), 0u);
        } else {
            Rng rng(derive_seed(seed, "distance-sources"));
            for (auto i : rng.sample_without_replacement(static_cast<std::uint32_t>(m),
                                                         static_cast<std::uint32_t>(want)))
                sources.push_back(i);
        }
    }

    // Mean distance from each source, one slot per source; reduced in source
    // order below regardless of the thread count.
    std::vector<double> per_source(sources.size(), 0.0);
    parallel_chunks(sources.size(), threads, [&](unsigned, std::size_t b, std::size_t e) {
        std::vector<std::int32_t> dist(m);
        for (std::size_t i = b; i < e; ++i) {
            double sum = 0;
            std::size_t reached = 0;
            detail::bfs_distances(*dist_graph, sources[i], dist, sum, reached);
            per_source[i] = sum / static_cast<double>(m - 1);
        }
    });
    double mean = 0;
    for (double v : per_source) mean += v;
    mean /= static_cast<double>(per_source.size());
    s.avg_distance = mean;
    s.distance_sources = sources.size();
    if (!exact) {
        double var = 0;
        for (double v : per_source) var += (v - mean) * (v - mean);
        var /= static_cast<double>(per_source.size() - 1);
        s.avg_distance_stderr = std::sqrt(var / static_cast<double>(per_source.size()));
    }
    return s;
}

struct PagerankResult {
    std::vector<double> scores;
    std::size_t iterations = 0;
    bool converged = false;
};

// Power iteration on the undirected graph read as a bidirected one; dangling
// (isolated) mass is spread uniformly.  Scores are L1-normalised.
inline PagerankResult pagerank(const FirmGraph& g, double damping = 0.85, double tol = 1e-9,
                               std::size_t max_iter = 200) {
    if (g.nodes.empty()) throw EmptyInputError("pagerank of an empty graph");
    if (damping < 0.0 || damping >= 1.0)
        throw DomainValueError("pagerank: damping must lie in [0, 1)");
    const std::size_t n = g.nodes.size();
    PagerankResult res;
    res.scores.assign(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    const double teleport = (1.0 - damping) / static_cast<double>(n);
    for (std::size_t it = 0; it < max_iter; ++it) {
        double dangling = 0;
        for (NodeId v = 0; v < n; ++v)
            if (g.adj[v].empty()) dangling += res.scores[v];
        const double base = teleport + damping * dangling / static_cast<double>(n);
        for (NodeId v = 0; v < n; ++v) {
            double acc = 0;
            for (NodeId u : g.adj[v])
                acc += res.scores[u] / static_cast<double>(g.adj[u].size());
            next[v] = base + damping * acc;
        }
        double delta = 0;
        for (NodeId v = 0; v < n; ++v) delta += std::fabs(next[v] - res.scores[v]);
        res.scores.swap(next);
        res.iterations = it + 1;
        if (delta < tol) {
            res.converged = true;
            break;
        }
    }
    // Normalise away accumulated rounding so the scores always sum to 1.
    double total = std::accumulate(res.scores.begin(), res.scores.end(), 0.0);
    for (double& v : res.scores) v /= total;
    return res;
}

// Brandes betweenness, unnormalised, each unordered pair counted once.
// sample_sources = 0 runs every source (exact); a positive value runs that
// many uniformly sampled sources and extrapolates by n / sample.
inline std::vector<double> betweenness(const FirmGraph& g, std::size_t sample_sources = 0,
                                       std::uint64_t seed = 0, unsigned threads = 1) {
    if (g.nodes.empty()) throw EmptyInputError("betweenness of an empty graph");
    const std::size_t n = g.nodes.size();
    std::vector<NodeId> sources;
    double scale = 0.5; // each pair appears from both endpoints
    if (sample_sources == 0 || sample_sources >= n) {
        sources.resize(n);
        std::iota(sources.begin(), sources.end(), 0u);
    } else {
        Rng rng(derive_seed(seed, "betweenness-sources"));
        for (auto i : rng.sample_without_replacement(static_cast<std::uint32_t>(n),
                                                     static_cast<std::uint32_t>(sample_sources)))
            sources.push_back(i);
        scale *= static_cast<double>(n) / static_cast<double>(sources.size());
    }

    std::vector<double> total(n, 0.0);
    // Fixed-size batches keep memory bounded while the in-order reduction
    // keeps results independent of the thread count.
    constexpr std::size_t kBatch = 64;
    std::vector<std::vector<double>> slot(std::min(kBatch, sources.size()));
    for (std::size_t batch_begin = 0; batch_begin < sources.size(); batch_begin += kBatch) {
        const std::size_t batch = std::min(kBatch, sources.size() - batch_begin);
        parallel_chunks(batch, threads, [&](unsigned, std::size_t b, std::size_t e) {
            std::vector<NodeId> order;
            std::vector<std::int32_t> dist(n);
            std::vector<double> sigma(n), delta(n);
            std::vector<std::vector<NodeId>> pred(n);
            for (std::size_t i = b; i < e; ++i) {
                const NodeId s = sources[batch_begin + i];
                order.clear();
                std::fill(dist.begin(), dist.end(), -1);
                std::fill(sigma.begin(), sigma.end(), 0.0);
                std::fill(delta.begin(), delta.end(), 0.0);
                for (auto& p : pred) p.clear();
                dist[s] = 0;
                sigma[s] = 1.0;
                order.push_back(s);
                for (std::size_t head = 0; head < order.size(); ++head) {
                    const NodeId u = order[head];
                    for (NodeId v : g.adj[u]) {
                        if (dist[v] < 0) {
                            dist[v] = dist[u] + 1;
                            order.push_back(v);
                        }
                        if (dist[v] == dist[u] + 1) {
                            sigma[v] += sigma[u];
                            pred[v].push_back(u);
                        }
                    }
                }
                auto& acc = slot[i];
                acc.assign(n, 0.0);
                for (std::size_t idx = order.size(); idx-- > 1;) {
                    const NodeId w = order[idx];
                    for (NodeId u : pred[w])
                        delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
                    acc[w] = delta[w];
                }
            }
        });
        for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t v = 0; v < n; ++v) total[v] += slot[i][v];
    }
    for (double& v : total) v *= scale;
    return total;
}

// ---- rank correlation ----------------------------------------------------

// Fractional (average) ranks, 1-based: ties share the mean of the positions
// they occupy.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace detail {

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 && sbb == 0.0) return 1.0; // both constant: identical rankings
    if (saa == 0.0 || sbb == 0.0) return 0.0; // one constant: no ordering signal
    return sab / std::sqrt(saa * sbb);
}

} // namespace detail

// Spearman rank correlation with average-rank tie handling.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw KeyMismatchError("spearman: length mismatch");
    if (a.size() < 2) throw InsufficientDataError("spearman needs at least 2 observations");
    return detail::pearson(average_ranks(a), average_ranks(b));
}

// Spearman between two best-first orderings of the same key set.
inline double spearman_keys(const std::vector<std::string>& rank_a,
                            const std::vector<std::string>& rank_b) {
    if (rank_a.size() != rank_b.size())
        throw KeyMismatchError("spearman_keys: rankings have different lengths");
    std::map<std::string, double> pos_b;
    for (std::size_t i = 0; i < rank_b.size(); ++i)
        if (!pos_b.emplace(rank_b[i], static_cast<double>(i + 1)).second)
            throw KeyMismatchError("spearman_keys: duplicate key '" + rank_b[i] + "'");
    std::vector<double> a(rank_a.size()), b(rank_a.size());
    std::map<std::string, bool> seen;
    for (std::size_t i = 0; i < rank_a.size(); ++i) {
        auto it = pos_b.find(rank_a[i]);
        if (it == pos_b.end())
            throw KeyMismatchError("spearman_keys: key '" + rank_a[i] + "' missing from second ranking");
        if (!seen.emplace(rank_a[i], true).second)
            throw KeyMismatchError("spearman_keys: duplicate key '" + rank_a[i] + "'");
        a[i] = static_cast<double>(i + 1);
        b[i] = it->second;
    }
    return detail::pearson(a, b);
}

struct CurvePoint {
    std::size_t k = 0;
    double rho = 0;
};

// For each k in the grid: take the k nodes with the largest economic value
// (ties broken by node id so the selection is deterministic) and correlate
// their economic ranks with their centrality ranks.
inline std::vector<CurvePoint> rank_correlation_curve(const std::vector<std::optional<double>>& economic,
                                                      const std::vector<double>& centrality,
                                                      const std::vector<std::size_t>& k_grid) {
    if (economic.size() != centrality.size())
        throw KeyMismatchError("rank_correlation_curve: length mismatch");
    std::vector<std::size_t> eligible;
    for (std::size_t v = 0; v < economic.size(); ++v)
        if (economic[v]) eligible.push_back(v);
    std::size_t k_max = 0;
    for (std::size_t k : k_grid) {
        if (k < 3) throw DomainValueError("rank_correlation_curve: k must be >= 3");
        k_max = std::max(k_max, k);
    }
    if (eligible.size() < k_max)
        throw InsufficientDataError("rank_correlation_curve: economic attribute present on " +
                                    std::to_string(eligible.size()) + " nodes, need " +
                                    std::to_string(k_max));
    std::sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
        if (*economic[a] != *economic[b]) return *economic[a] > *economic[b];
        return a < b;
    });
    std::vector<CurvePoint> out;
    for (std::size_t k : k_grid) {
        std::vector<double> e(k), c(k);
        for (std::size_t i = 0; i < k; ++i) {
            e[i] = *economic[eligible[i]];
            c[i] = centrality[eligible[i]];
        }
        out.push_back({k, spearman(e, c)});
    }
    return out;
}

// Centrality table export: one row per node sorted by primary firm id.
inline void write_centrality_csv(const FirmGraph& g, const std::vector<double>& pagerank_scores,
                                 const std::vector<double>& betweenness_scores, std::ostream& os) {
    os << "node_id,degree,pagerank,betweenness\n";
    std::vector<NodeId> order(g.nodes.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return g.nodes[a].primary_id() < g.nodes[b].primary_id();
    });
    for (NodeId v : order)
        os << csv_quote(g.nodes[v].primary_id()) << ',' << g.degree(v) << ','
           << format_double(pagerank_scores[v]) << ',' << format_double(betweenness_scores[v])
           << '\n';
}

} // namespace netqual
