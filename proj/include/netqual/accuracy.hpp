#pragma once

// Two-step correction for duplicated register entries.
//
// Step 1 collapses exact administrative duplicates: identical board, and
// either an identical global ultimate owner or none on either side (mixed
// present/absent keeps firms apart).
//
// Step 2 goes after near-duplicates: firms whose boards overlap by Jaccard
// >= 0.5 are grouped by complete-linkage agglomeration, and inside each board
// cluster nodes are merged (again complete linkage) when all four local
// topology features -- degree, average neighbour degree, local clustering,
// average neighbour clustering -- agree within a band (each feature's
// min/max ratio >= band; two zeros count as agreement, zero against positive
// as disagreement).  Features are frozen on the graph as it stands when the
// stage starts, so earlier merges within the stage cannot shift later
// decisions.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "netqual/errors.hpp"
#include "netqual/graph.hpp"

namespace netqual {

// Jaccard overlap of two sorted director-id sets.
inline double board_jaccard(const std::vector<DirectorId>& a, const std::vector<DirectorId>& b) {
    if (a.empty() || b.empty())
        throw EmptyBoardError("board_jaccard on an empty board");
    std::size_t i = 0, j = 0, both = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) { ++both; ++i; ++j; }
        else if (a[i] < b[j]) ++i;
        else ++j;
    }
    const std::size_t uni = a.size() + b.size() - both;
    return static_cast<double>(both) / static_cast<double>(uni);
}

struct TopoFeatures {
    double degree = 0;
    double avg_neighbor_degree = 0;
    double local_clustering = 0;
    double avg_neighbor_clustering = 0;
};

// Per-node topology features.  Local clustering of a node with degree < 2 is
// defined as 0; neighbour averages over an empty neighbourhood are 0.
inline std::vector<TopoFeatures> topo_features(const FirmGraph& g) {
    const std::size_t n = g.nodes.size();
    std::vector<double> clustering(n, 0.0);
    for (NodeId u = 0; u < n; ++u) {
        const auto& nbrs = g.adj[u];
        if (nbrs.size() < 2) continue;
        std::size_t links = 0;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            const auto& other = g.adj[nbrs[i]];
            for (std::size_t j = i + 1; j < nbrs.size(); ++j)
                if (std::binary_search(other.begin(), other.end(), nbrs[j])) ++links;
        }
        clustering[u] = 2.0 * static_cast<double>(links) /
                        (static_cast<double>(nbrs.size()) * static_cast<double>(nbrs.size() - 1));
    }
    std::vector<TopoFeatures> out(n);
    for (NodeId u = 0; u < n; ++u) {
        out[u].degree = static_cast<double>(g.adj[u].size());
        out[u].local_clustering = clustering[u];
        if (g.adj[u].empty()) continue;
        double deg_sum = 0, clu_sum = 0;
        for (NodeId v : g.adj[u]) {
            deg_sum += static_cast<double>(g.adj[v].size());
            clu_sum += clustering[v];
        }
        out[u].avg_neighbor_degree = deg_sum / static_cast<double>(g.adj[u].size());
        out[u].avg_neighbor_clustering = clu_sum / static_cast<double>(g.adj[u].size());
    }
    return out;
}

namespace detail {

inline double ratio_similarity(double a, double b) {
    if (a == 0.0 && b == 0.0) return 1.0; // jointly absent: agree
    if (a <= 0.0 || b <= 0.0) return 0.0; // one-sided zero: disagree
    return a < b ? a / b : b / a;
}

} // namespace detail

// Smallest per-feature min/max ratio between two feature vectors; a pair is
// band-similar when this score >= band.
inline double feature_band_score(const TopoFeatures& a, const TopoFeatures& b) {
    double s = detail::ratio_similarity(a.degree, b.degree);
    s = std::min(s, detail::ratio_similarity(a.avg_neighbor_degree, b.avg_neighbor_degree));
    s = std::min(s, detail::ratio_similarity(a.local_clustering, b.local_clustering));
    s = std::min(s, detail::ratio_similarity(a.avg_neighbor_clustering, b.avg_neighbor_clustering));
    return s;
}

namespace detail {

// Complete-linkage agglomeration over one candidate component.
//
// `items` are node ids, `sim(u, v)` a symmetric similarity.  Clusters are
// merged closest pair first, where cluster similarity is the minimum pairwise
// similarity across the two clusters (so every member of a finished cluster
// is within `threshold` of every other).  Ties are broken by the smallest
// (min representative, max representative) pair of node ids; merging never
// increases any cluster similarity, so the merge sequence cut at a higher
// threshold is a prefix of the sequence cut at a lower one.
template <typename SimFn>
inline std::vector<std::vector<NodeId>> complete_linkage(const std::vector<NodeId>& items,
                                                         SimFn&& sim, double threshold) {
    const std::size_t k = items.size();
    std::vector<std::vector<NodeId>> clusters(k);
    for (std::size_t i = 0; i < k; ++i) clusters[i] = {items[i]};
    if (k < 2) return clusters;

    // Dense pairwise similarity; components handed to this routine are small.
    std::vector<std::vector<double>> s(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            s[i][j] = s[j][i] = sim(items[i], items[j]);

    std::vector<bool> alive(k, true);
    std::vector<NodeId> rep(k); // smallest node id in cluster, for tie breaks
    for (std::size_t i = 0; i < k; ++i) rep[i] = items[i];

    while (true) {
        double best = -1.0;
        std::size_t bi = 0, bj = 0;
        NodeId best_lo = 0, best_hi = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < k; ++j) {
                if (!alive[j]) continue;
                const double v = s[i][j];
                if (v < threshold) continue;
                const NodeId lo = std::min(rep[i], rep[j]);
                const NodeId hi = std::max(rep[i], rep[j]);
                if (v > best || (v == best && (lo < best_lo || (lo == best_lo && hi < best_hi)))) {
                    best = v;
                    bi = i; bj = j;
                    best_lo = lo; best_hi = hi;
                }
            }
        }
        if (best < threshold || best < 0.0) break;
        // Merge bj into bi; complete linkage keeps the pairwise minimum.
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters[bj].clear();
        alive[bj] = false;
        rep[bi] = std::min(rep[bi], rep[bj]);
        for (std::size_t t = 0; t < k; ++t) {
            if (!alive[t] || t == bi) continue;
            const double m = std::min(s[bi][t], s[bj][t]);
            s[bi][t] = s[t][bi] = m;
        }
    }

    std::vector<std::vector<NodeId>> out;
    for (std::size_t i = 0; i < k; ++i) {
        if (!alive[i]) continue;
        std::sort(clusters[i].begin(), clusters[i].end());
        out.push_back(std::move(clusters[i]));
    }
    std::sort(out.begin(), out.end(),
              [](const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
                  return a.front() < b.front();
              });
    return out;
}

} // namespace detail

// Group nodes whose boards overlap by Jaccard >= threshold, complete linkage.
// Candidate pairs come from the shared-director inverted index (disjoint
// boards can never reach a positive threshold); agglomeration runs per
// connected component of the candidate graph, which is exact for complete
// linkage because clusters spanning components would contain a cross pair
// below threshold.  Returns a full partition including singletons, blocks
// sorted by smallest member.
inline std::vector<std::vector<NodeId>> cluster_boards(const FirmGraph& g,
                                                       double threshold = 0.5) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw DomainValueError("cluster_boards: threshold must lie in (0, 1]");
    const std::size_t n = g.nodes.size();

    std::unordered_map<DirectorId, std::vector<NodeId>> firms_of_director;
    for (NodeId v = 0; v < n; ++v)
        for (DirectorId d : g.nodes[v].board) firms_of_director[d].push_back(v);

    // Candidate pairs sharing a director, kept when J >= threshold.
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (auto& [d, firms] : firms_of_director)
        for (std::size_t i = 0; i < firms.size(); ++i)
            for (std::size_t j = i + 1; j < firms.size(); ++j)
                pairs.emplace_back(std::min(firms[i], firms[j]), std::max(firms[i], firms[j]));
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    pairs.erase(std::remove_if(pairs.begin(), pairs.end(),
                               [&](const std::pair<NodeId, NodeId>& p) {
                                   return board_jaccard(g.nodes[p.first].board,
                                                        g.nodes[p.second].board) < threshold;
                               }),
                pairs.end());

    // Union-find over above-threshold pairs to get candidate components.
    std::vector<NodeId> parent(n);
    for (NodeId v = 0; v < n; ++v) parent[v] = v;
    auto find = [&parent](NodeId v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    std::vector<bool> in_component(n, false);
    for (const auto& [u, v] : pairs) {
        parent[find(u)] = find(v);
        in_component[u] = in_component[v] = true;
    }
    std::map<NodeId, std::vector<NodeId>> components; // root -> sorted members
    for (NodeId v = 0; v < n; ++v)
        if (in_component[v]) components[find(v)].push_back(v);

    std::vector<std::vector<NodeId>> partition;
    for (auto& [root, members] : components) {
        auto blocks = detail::complete_linkage(
            members,
            [&](NodeId a, NodeId b) { return board_jaccard(g.nodes[a].board, g.nodes[b].board); },
            threshold);
        for (auto& b : blocks) partition.push_back(std::move(b));
    }
    for (NodeId v = 0; v < n; ++v)
        if (!in_component[v]) partition.push_back({v});
    std::sort(partition.begin(), partition.end(),
              [](const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
                  return a.front() < b.front();
              });
    return partition;
}

struct MergeReport {
    std::string stage;
    std::map<std::string, double> parameters;
    std::vector<std::vector<std::string>> clusters; // merged blocks only, firm ids
    std::size_t nodes_before = 0, nodes_after = 0;
    std::size_t edges_before = 0, edges_after = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["stage"] = stage;
        j["parameters"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : parameters) j["parameters"][k] = v;
        j["clusters"] = clusters;
        j["nodes_before"] = nodes_before;
        j["nodes_after"] = nodes_after;
        j["edges_before"] = edges_before;
        j["edges_after"] = edges_after;
        return j;
    }
};

namespace detail {

inline std::pair<FirmGraph, MergeReport> apply_merge(const FirmGraph& g,
                                                     std::vector<std::vector<NodeId>> partition,
                                                     std::string stage,
                                                     std::map<std::string, double> parameters) {
    MergeReport report;
    report.stage = std::move(stage);
    report.parameters = std::move(parameters);
    report.nodes_before = g.node_count();
    report.edges_before = g.edge_count();
    for (const auto& block : partition) {
        if (block.size() < 2) continue;
        std::vector<std::string> ids;
        for (NodeId v : block)
            ids.insert(ids.end(), g.nodes[v].member_firm_ids.begin(),
                       g.nodes[v].member_firm_ids.end());
        std::sort(ids.begin(), ids.end());
        report.clusters.push_back(std::move(ids));
    }
    std::sort(report.clusters.begin(), report.clusters.end());
    FirmGraph merged = merge_nodes(g, partition, report.stage);
    report.nodes_after = merged.node_count();
    report.edges_after = merged.edge_count();
    return {std::move(merged), std::move(report)};
}

} // namespace detail

// Step 1: exact merge on (board set, guo key).  Firms with identical boards
// merge when their guo ids are equal or both absent.
inline std::pair<FirmGraph, MergeReport> step1_exact_merge(const FirmGraph& g) {
    std::map<std::pair<std::vector<DirectorId>, std::string>, std::vector<NodeId>> groups;
    for (NodeId v = 0; v < g.nodes.size(); ++v) {
        const FirmNode& n = g.nodes[v];
        // Absent guo is its own key; '\x01' cannot collide with a real id
        // because real ids come from trimmed CSV cells.
        const std::string guo_key = n.guo_id ? "=" + *n.guo_id : std::string("\x01");
        groups[{n.board, guo_key}].push_back(v);
    }
    std::vector<std::vector<NodeId>> partition;
    partition.reserve(groups.size());
    for (auto& [key, members] : groups) partition.push_back(std::move(members));
    return detail::apply_merge(g, std::move(partition), "step1_exact_merge", {});
}

// Step 2: board clusters by Jaccard, then complete-linkage agglomeration on
// the four-feature band inside each cluster.  Features frozen at stage entry.
inline std::pair<FirmGraph, MergeReport> step2_topo_merge(const FirmGraph& g,
                                                          double jaccard_threshold = 0.5,
                                                          double band = 0.8) {
    if (band <= 0.0 || band > 1.0)
        throw DomainValueError("step2_topo_merge: band must lie in (0, 1]");
    const auto features = topo_features(g);
    const auto board_blocks = cluster_boards(g, jaccard_threshold);

    std::vector<std::vector<NodeId>> partition;
    for (const auto& block : board_blocks) {
        if (block.size() < 2) {
            partition.push_back(block);
            continue;
        }
        auto sub = detail::complete_linkage(
            block,
            [&](NodeId a, NodeId b) { return feature_band_score(features[a], features[b]); },
            band);
        for (auto& s : sub) partition.push_back(std::move(s));
    }
    return detail::apply_merge(g, std::move(partition), "step2_topo_merge",
                               {{"jaccard_threshold", jaccard_threshold}, {"band", band}});
}

// Full correction: step 1 then step 2.
inline std::pair<FirmGraph, std::vector<MergeReport>> run_accuracy_pipeline(
    const FirmGraph& g, double jaccard_threshold = 0.5, double band = 0.8) {
    auto [g1, r1] = step1_exact_merge(g);
    auto [g2, r2] = step2_topo_merge(g1, jaccard_threshold, band);
    std::vector<MergeReport> reports;
    reports.push_back(std::move(r1));
    reports.push_back(std::move(r2));
    return {std::move(g2), std::move(reports)};
}

} // namespace netqual
