#pragma once

// Firm-firm interlock graph.
//
// project() inverts director affiliations into an index director -> firms and
// expands each entry into a clique: two firms are adjacent iff they share at
// least one director.  Nodes are indexed by sorted firm_id so the layout is a
// pure function of the input table.  The graph stays simple (no self loops,
// no parallel edges) through every transformation, which merge_nodes and the
// exporters rely on.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "netqual/errors.hpp"
#include "netqual/tables.hpp"
#include "netqual/util.hpp"

namespace netqual {

using NodeId = std::uint32_t;
using DirectorId = std::uint32_t;

// Numeric attribute that survives merging: values are summed; if any merged
// member lacked the value, the sum is marked partial.
template <typename T>
struct MergedValue {
    std::optional<T> value;
    bool partial = false;
};

struct FirmNode {
    std::vector<std::string> member_firm_ids; // sorted; >1 after a merge
    std::vector<DirectorId> board;            // sorted director indices
    std::string country;
    std::optional<std::string> guo_id;
    MergedValue<double> revenue_usd;
    MergedValue<std::int64_t> employees;
    MergedValue<double> market_cap_usd;

    const std::string& primary_id() const { return member_firm_ids.front(); }
};

struct FirmGraph {
    std::vector<FirmNode> nodes;
    std::vector<std::vector<NodeId>> adj; // sorted neighbour lists
    std::vector<std::string> director_names;
    std::vector<std::string> provenance;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const {
        std::size_t twice = 0;
        for (const auto& n : adj) twice += n.size();
        return twice / 2;
    }
    std::size_t degree(NodeId v) const { return adj[v].size(); }
    bool has_edge(NodeId u, NodeId v) const {
        return std::binary_search(adj[u].begin(), adj[u].end(), v);
    }
};

namespace detail {

inline void build_adjacency(FirmGraph& g, std::vector<std::pair<NodeId, NodeId>>& edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.adj.assign(g.nodes.size(), {});
    for (const auto& [u, v] : edges) {
        g.adj[u].push_back(v);
        g.adj[v].push_back(u);
    }
    for (auto& nbrs : g.adj) std::sort(nbrs.begin(), nbrs.end());
}

} // namespace detail

// Build the interlock graph from company + affiliation tables, optionally
// restricted to firms registered in one country.  Firms without any
// affiliation become isolated nodes with an empty board.
inline FirmGraph project(const AffiliationTable& table,
                         const std::optional<std::string>& country = std::nullopt) {
    FirmGraph g;
    std::unordered_map<std::string, NodeId> node_of;
    node_of.reserve(table.companies.size());
    for (const auto& c : table.companies) { // already sorted by firm_id
        if (country && c.country != *country) continue;
        FirmNode node;
        node.member_firm_ids = {c.firm_id};
        node.country = c.country;
        node.guo_id = c.guo_id;
        node.revenue_usd.value = c.revenue_usd;
        node.employees.value = c.employees;
        node.market_cap_usd.value = c.market_cap_usd;
        node_of.emplace(c.firm_id, static_cast<NodeId>(g.nodes.size()));
        g.nodes.push_back(std::move(node));
    }
    if (g.nodes.empty()) throw EmptyInputError("projection produced no nodes");

    // Inverted index director -> firm nodes.  Positions are sorted by
    // (director_id, firm_id), so each director's firm list arrives in order.
    std::map<std::string, std::vector<NodeId>> firms_of_director;
    for (const auto& p : table.positions) {
        auto it = node_of.find(p.firm_id);
        if (it == node_of.end()) continue; // filtered out by country
        firms_of_director[p.director_id].push_back(it->second);
    }

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (auto& [director, firms] : firms_of_director) {
        std::sort(firms.begin(), firms.end());
        firms.erase(std::unique(firms.begin(), firms.end()), firms.end());
        const auto did = static_cast<DirectorId>(g.director_names.size());
        g.director_names.push_back(director);
        for (NodeId f : firms) g.nodes[f].board.push_back(did);
        for (std::size_t i = 0; i < firms.size(); ++i)
            for (std::size_t j = i + 1; j < firms.size(); ++j)
                edges.emplace_back(firms[i], firms[j]);
    }
    for (auto& node : g.nodes) std::sort(node.board.begin(), node.board.end());
    detail::build_adjacency(g, edges);
    g.provenance.push_back("project(" + std::to_string(g.nodes.size()) + " nodes)");
    return g;
}

// Connected components by index; component ids are assigned in order of each
// component's smallest node, so they are deterministic.
inline std::vector<std::uint32_t> connected_components(const FirmGraph& g,
                                                       std::size_t* count_out = nullptr) {
    std::vector<std::uint32_t> comp(g.nodes.size(), UINT32_MAX);
    std::uint32_t next = 0;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < g.nodes.size(); ++s) {
        if (comp[s] != UINT32_MAX) continue;
        comp[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v : g.adj[u])
                if (comp[v] == UINT32_MAX) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    if (count_out) *count_out = next;
    return comp;
}

// Induced subgraph on the given sorted node set; relative order (and thereby
// firm_id order) is preserved.
inline FirmGraph induced_subgraph(const FirmGraph& g, const std::vector<NodeId>& keep) {
    FirmGraph out;
    out.director_names = g.director_names;
    out.provenance = g.provenance;
    std::vector<NodeId> new_id(g.nodes.size(), UINT32_MAX);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        new_id[keep[i]] = static_cast<NodeId>(i);
        out.nodes.push_back(g.nodes[keep[i]]);
    }
    out.adj.assign(keep.size(), {});
    for (NodeId old : keep) {
        auto& nbrs = out.adj[new_id[old]];
        for (NodeId v : g.adj[old])
            if (new_id[v] != UINT32_MAX) nbrs.push_back(new_id[v]);
        // neighbours arrive sorted because relative order is preserved
    }
    return out;
}

// Largest connected component; ties go to the component containing the
// smallest node index (= smallest firm_id under projection order).
inline FirmGraph giant_component(const FirmGraph& g) {
    if (g.nodes.empty()) throw EmptyInputError("giant_component of an empty graph");
    std::size_t count = 0;
    const auto comp = connected_components(g, &count);
    std::vector<std::size_t> size(count, 0);
    for (auto c : comp) ++size[c];
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < count; ++c)
        if (size[c] > size[best]) best = c; // first max wins = smallest node id
    std::vector<NodeId> keep;
    keep.reserve(size[best]);
    for (NodeId v = 0; v < g.nodes.size(); ++v)
        if (comp[v] == best) keep.push_back(v);
    FirmGraph out = induced_subgraph(g, keep);
    out.provenance.push_back("giant_component(" + std::to_string(out.nodes.size()) + "/" +
                             std::to_string(g.nodes.size()) + " nodes)");
    return out;
}

namespace detail {

template <typename T>
inline MergedValue<T> merge_values(const std::vector<const MergedValue<T>*>& parts) {
    MergedValue<T> out;
    std::size_t present = 0;
    T sum{};
    for (const auto* p : parts) {
        if (p->value) {
            sum += *p->value;
            ++present;
        }
        out.partial = out.partial || p->partial;
    }
    if (present > 0) out.value = sum;
    if (present < parts.size() && present > 0) out.partial = true;
    return out;
}

} // namespace detail

// Collapse each block of the partition into one node.  Blocks must cover
// every node exactly once.  Boards and member lists are unioned, numeric
// attributes summed (partial when any member lacked them), guo kept only if
// unanimous among members that have one.  Edges are rewired with self loops
// and duplicates removed.  New nodes are ordered by smallest old node id.
inline FirmGraph merge_nodes(const FirmGraph& g,
                             const std::vector<std::vector<NodeId>>& partition,
                             const std::string& label = "merge") {
    std::vector<std::uint32_t> block_of(g.nodes.size(), UINT32_MAX);
    for (std::size_t b = 0; b < partition.size(); ++b) {
        if (partition[b].empty()) throw InvalidPartitionError("empty block in partition");
        for (NodeId v : partition[b]) {
            if (v >= g.nodes.size())
                throw InvalidPartitionError("partition references node " + std::to_string(v) +
                                            " outside the graph");
            if (block_of[v] != UINT32_MAX)
                throw InvalidPartitionError("node " + std::to_string(v) +
                                            " appears in more than one block");
            block_of[v] = static_cast<std::uint32_t>(b);
        }
    }
    for (NodeId v = 0; v < g.nodes.size(); ++v)
        if (block_of[v] == UINT32_MAX)
            throw InvalidPartitionError("node " + std::to_string(v) + " missing from partition");

    // Order blocks by their smallest member so new indices are deterministic.
    std::vector<NodeId> block_min(partition.size());
    std::vector<std::uint32_t> order(partition.size());
    for (std::size_t b = 0; b < partition.size(); ++b)
        block_min[b] = *std::min_element(partition[b].begin(), partition[b].end());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return block_min[a] < block_min[b]; });
    std::vector<std::uint32_t> new_of_block(partition.size());
    for (std::size_t i = 0; i < order.size(); ++i) new_of_block[order[i]] = static_cast<std::uint32_t>(i);

    FirmGraph out;
    out.director_names = g.director_names;
    out.provenance = g.provenance;
    out.nodes.resize(partition.size());
    for (std::size_t b = 0; b < partition.size(); ++b) {
        std::vector<NodeId> members = partition[b];
        std::sort(members.begin(), members.end());
        FirmNode node;
        std::vector<const MergedValue<double>*> rev, cap;
        std::vector<const MergedValue<std::int64_t>*> emp;
        std::vector<std::string> guos;
        bool guo_missing = false;
        for (NodeId v : members) {
            const FirmNode& m = g.nodes[v];
            node.member_firm_ids.insert(node.member_firm_ids.end(), m.member_firm_ids.begin(),
                                        m.member_firm_ids.end());
            node.board.insert(node.board.end(), m.board.begin(), m.board.end());
            rev.push_back(&m.revenue_usd);
            cap.push_back(&m.market_cap_usd);
            emp.push_back(&m.employees);
            if (m.guo_id) guos.push_back(*m.guo_id);
            else guo_missing = true;
        }
        std::sort(node.member_firm_ids.begin(), node.member_firm_ids.end());
        std::sort(node.board.begin(), node.board.end());
        node.board.erase(std::unique(node.board.begin(), node.board.end()), node.board.end());
        node.country = g.nodes[members.front()].country;
        if (!guo_missing && !guos.empty() &&
            std::all_of(guos.begin(), guos.end(), [&](const std::string& s) { return s == guos.front(); }))
            node.guo_id = guos.front();
        node.revenue_usd = detail::merge_values(rev);
        node.market_cap_usd = detail::merge_values(cap);
        node.employees = detail::merge_values(emp);
        out.nodes[new_of_block[b]] = std::move(node);
    }

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < g.nodes.size(); ++u) {
        const NodeId bu = new_of_block[block_of[u]];
        for (NodeId v : g.adj[u]) {
            if (v <= u) continue;
            const NodeId bv = new_of_block[block_of[v]];
            if (bu == bv) continue;
            edges.emplace_back(std::min(bu, bv), std::max(bu, bv));
        }
    }
    detail::build_adjacency(out, edges);
    out.provenance.push_back(label + "(" + std::to_string(g.nodes.size()) + " -> " +
                             std::to_string(out.nodes.size()) + " nodes)");
    return out;
}

// ---- import / export ---------------------------------------------------

// Edge list: one "u<TAB>v" line per edge with u < v by primary firm_id,
// lines sorted ascending.  Byte-stable.
inline void export_edgelist(const FirmGraph& g, std::ostream& os) {
    std::vector<std::pair<std::string, std::string>> lines;
    for (NodeId u = 0; u < g.nodes.size(); ++u)
        for (NodeId v : g.adj[u]) {
            if (v <= u) continue;
            std::string a = g.nodes[u].primary_id(), b = g.nodes[v].primary_id();
            if (b < a) std::swap(a, b);
            lines.emplace_back(std::move(a), std::move(b));
        }
    std::sort(lines.begin(), lines.end());
    for (const auto& [a, b] : lines) os << a << '\t' << b << '\n';
}

// Node table: primary id, members joined by '|', attributes with partial
// markers.  Sorted by primary id.
inline void export_nodes(const FirmGraph& g, std::ostream& os) {
    os << "node_id\tmembers\tcountry\tguo_id\trevenue_usd\trevenue_partial\temployees\t"
          "employees_partial\tmarket_cap_usd\tmarket_cap_partial\tdegree\n";
    std::vector<NodeId> order(g.nodes.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return g.nodes[a].primary_id() < g.nodes[b].primary_id();
    });
    for (NodeId v : order) {
        const FirmNode& n = g.nodes[v];
        os << n.primary_id() << '\t';
        for (std::size_t i = 0; i < n.member_firm_ids.size(); ++i) {
            if (i) os << '|';
            os << n.member_firm_ids[i];
        }
        os << '\t' << n.country << '\t' << (n.guo_id ? *n.guo_id : "") << '\t'
           << (n.revenue_usd.value ? format_double(*n.revenue_usd.value) : "") << '\t'
           << (n.revenue_usd.partial ? "1" : "0") << '\t'
           << (n.employees.value ? std::to_string(*n.employees.value) : "") << '\t'
           << (n.employees.partial ? "1" : "0") << '\t'
           << (n.market_cap_usd.value ? format_double(*n.market_cap_usd.value) : "") << '\t'
           << (n.market_cap_usd.partial ? "1" : "0") << '\t' << g.degree(v) << '\n';
    }
}

// Read a plain tab- or whitespace-separated edge list (as written by
// export_edgelist).  Nodes are created in sorted id order with empty boards;
// the result supports every metrics / diffusion operation.
inline FirmGraph import_edgelist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::pair<std::string, std::string>> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t cut = t.find_first_of("\t ");
        if (cut == std::string::npos)
            throw SchemaError("line " + std::to_string(lineno) + " of '" + path +
                              "': expected two ids");
        std::string a = trim(t.substr(0, cut));
        std::string b = trim(t.substr(cut + 1));
        if (a.empty() || b.empty())
            throw SchemaError("line " + std::to_string(lineno) + " of '" + path +
                              "': expected two ids");
        raw.emplace_back(std::move(a), std::move(b));
    }
    std::vector<std::string> ids;
    for (const auto& [a, b] : raw) {
        ids.push_back(a);
        ids.push_back(b);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw EmptyInputError("edge list '" + path + "' has no edges");

    FirmGraph g;
    std::unordered_map<std::string, NodeId> node_of;
    for (const auto& id : ids) {
        FirmNode n;
        n.member_firm_ids = {id};
        node_of.emplace(id, static_cast<NodeId>(g.nodes.size()));
        g.nodes.push_back(std::move(n));
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& [a, b] : raw) {
        NodeId u = node_of[a], v = node_of[b];
        if (u == v) continue; // self affiliations carry no interlock signal
        edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    detail::build_adjacency(g, edges);
    g.provenance.push_back("import_edgelist(" + path + ")");
    return g;
}

// Convenience for tests and synthetic experiments: build a graph with n
// anonymous nodes from an explicit edge list.
inline FirmGraph graph_from_edges(std::size_t n,
                                  std::vector<std::pair<NodeId, NodeId>> edges) {
    FirmGraph g;
    g.nodes.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "N%06zu", v);
        g.nodes[v].member_firm_ids = {buf};
    }
    for (auto& [u, v] : edges) {
        if (u == v) throw DomainValueError("self loop in edge list");
        if (u >= n || v >= n) throw DomainValueError("edge endpoint out of range");
        if (v < u) std::swap(u, v);
    }
    detail::build_adjacency(g, edges);
    return g;
}

} // namespace netqual
