// graph.cpp - typed graphs, morphism checks and isomorphism search

#include "sdm/graph.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <sstream>
#include <tuple>

namespace sdm {

namespace {

std::uint64_t next_revision()
{
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

} // namespace

// ---------------------------------------------------------------- TypeGraph

void TypeGraph::add_node_type(const std::string& type, std::optional<std::string> parent)
{
    if (node_types_.count(type))
        throw GraphError("duplicate node type '" + type + "'");
    node_types_.emplace(type, std::move(parent));
}

void TypeGraph::add_edge_type(const std::string& type, const std::string& src, const std::string& trg)
{
    if (edge_types_.count(type))
        throw GraphError("duplicate edge type '" + type + "'");
    edge_types_.emplace(type, EdgeType{src, trg});
}

void TypeGraph::check() const
{
    for (const auto& [type, parent] : node_types_) {
        if (parent && !node_types_.count(*parent))
            throw GraphError("node type '" + type + "' has unknown parent '" + *parent + "'");
        // walk up; a chain longer than the type count is a cycle
        std::size_t steps = 0;
        auto cur = parent;
        while (cur) {
            if (*cur == type || ++steps > node_types_.size())
                throw GraphError("inheritance cycle through node type '" + type + "'");
            auto it = node_types_.find(*cur);
            cur = it == node_types_.end() ? std::nullopt : it->second;
        }
    }
    for (const auto& [type, et] : edge_types_) {
        if (!node_types_.count(et.src) || !node_types_.count(et.trg))
            throw GraphError("edge type '" + type + "' names an unknown endpoint type");
    }
}

const EdgeType& TypeGraph::edge_type(const std::string& type) const
{
    auto it = edge_types_.find(type);
    if (it == edge_types_.end())
        throw GraphError("unknown edge type '" + type + "'");
    return it->second;
}

std::optional<std::string> TypeGraph::parent(const std::string& type) const
{
    auto it = node_types_.find(type);
    return it == node_types_.end() ? std::nullopt : it->second;
}

bool TypeGraph::conforms(const std::string& type, const std::string& ancestor) const
{
    std::optional<std::string> cur = type;
    std::size_t steps = 0;
    while (cur && steps++ <= node_types_.size()) {
        if (*cur == ancestor)
            return true;
        auto it = node_types_.find(*cur);
        if (it == node_types_.end())
            return false;
        cur = it->second;
    }
    return false;
}

// --------------------------------------------------------------- TypedGraph

TypedGraph::TypedGraph(TypeGraphPtr tg) : tg_(std::move(tg)), revision_(next_revision()) {}

void TypedGraph::touch() { revision_ = next_revision(); }

void TypedGraph::add_node(const NodeId& id, const std::string& type)
{
    if (has_id(id))
        throw GraphError("duplicate id '" + id + "'");
    nodes_.emplace(id, Node{type});
    touch();
}

void TypedGraph::add_edge(const EdgeId& id, const std::string& type, const NodeId& src, const NodeId& trg)
{
    if (has_id(id))
        throw GraphError("duplicate id '" + id + "'");
    if (!has_node(src) || !has_node(trg))
        throw GraphError("edge '" + id + "' has a dangling endpoint");
    edges_.emplace(id, Edge{type, src, trg});
    touch();
}

std::vector<EdgeId> TypedGraph::remove_node(const NodeId& id)
{
    if (!has_node(id))
        throw GraphError("no node '" + id + "'");
    auto incident = incident_edges(id);
    for (const auto& e : incident)
        edges_.erase(e);
    nodes_.erase(id);
    touch();
    return incident;
}

void TypedGraph::remove_edge(const EdgeId& id)
{
    if (!edges_.erase(id))
        throw GraphError("no edge '" + id + "'");
    touch();
}

const Node& TypedGraph::node(const NodeId& id) const
{
    auto it = nodes_.find(id);
    if (it == nodes_.end())
        throw GraphError("no node '" + id + "'");
    return it->second;
}

const Edge& TypedGraph::edge(const EdgeId& id) const
{
    auto it = edges_.find(id);
    if (it == edges_.end())
        throw GraphError("no edge '" + id + "'");
    return it->second;
}

std::vector<EdgeId> TypedGraph::out_edges(const NodeId& id) const
{
    std::vector<EdgeId> out;
    for (const auto& [eid, e] : edges_)
        if (e.src == id)
            out.push_back(eid);
    return out;
}

std::vector<EdgeId> TypedGraph::in_edges(const NodeId& id) const
{
    std::vector<EdgeId> in;
    for (const auto& [eid, e] : edges_)
        if (e.trg == id)
            in.push_back(eid);
    return in;
}

std::vector<EdgeId> TypedGraph::incident_edges(const NodeId& id) const
{
    std::vector<EdgeId> inc;
    for (const auto& [eid, e] : edges_)
        if (e.src == id || e.trg == id)
            inc.push_back(eid);
    return inc;
}

bool TypedGraph::operator==(const TypedGraph& other) const
{
    return type_graph_name() == other.type_graph_name() && nodes_ == other.nodes_ && edges_ == other.edges_;
}

// ------------------------------------------------------------------- typing

TypingReport validate_typing(const TypedGraph& g, const TypeGraph& tg)
{
    TypingReport report;
    for (const auto& [id, n] : g.nodes()) {
        if (!tg.has_node_type(n.type))
            report.violations.push_back({id, "node-type", "unknown node type '" + n.type + "'"});
    }
    for (const auto& [id, e] : g.edges()) {
        if (!g.has_node(e.src) || !g.has_node(e.trg)) {
            report.violations.push_back({id, "endpoint", "edge endpoint missing from the graph"});
            continue;
        }
        if (!tg.has_edge_type(e.type)) {
            report.violations.push_back({id, "edge-type", "unknown edge type '" + e.type + "'"});
            continue;
        }
        const auto& et = tg.edge_type(e.type);
        const auto& st = g.node(e.src).type;
        const auto& tt = g.node(e.trg).type;
        if (!tg.conforms(st, et.src))
            report.violations.push_back({id, "source-conformance",
                                         "source type '" + st + "' does not conform to '" + et.src + "'"});
        if (!tg.conforms(tt, et.trg))
            report.violations.push_back({id, "target-conformance",
                                         "target type '" + tt + "' does not conform to '" + et.trg + "'"});
    }
    return report;
}

// ---------------------------------------------------------------- morphisms

bool is_morphism(const Morphism& m, const TypedGraph& from, const TypedGraph& to, bool exact_types)
{
    auto type_ok = [&](const std::string& pattern, const std::string& host) {
        if (exact_types || !to.type_graph())
            return pattern == host;
        return to.type_graph()->conforms(host, pattern);
    };
    for (const auto& [a, b] : m.nodes) {
        if (!from.has_node(a) || !to.has_node(b))
            return false;
        if (!type_ok(from.node(a).type, to.node(b).type))
            return false;
    }
    for (const auto& [a, b] : m.edges) {
        if (!from.has_edge(a) || !to.has_edge(b))
            return false;
        const auto& ea = from.edge(a);
        const auto& eb = to.edge(b);
        if (ea.type != eb.type)
            return false;
        auto s = m.nodes.find(ea.src);
        auto t = m.nodes.find(ea.trg);
        // domain must be a subgraph
        if (s == m.nodes.end() || t == m.nodes.end())
            return false;
        if (s->second != eb.src || t->second != eb.trg)
            return false;
    }
    return true;
}

bool is_injective(const Morphism& m)
{
    std::set<std::string> seen_n, seen_e;
    for (const auto& [a, b] : m.nodes)
        if (!seen_n.insert(b).second)
            return false;
    for (const auto& [a, b] : m.edges)
        if (!seen_e.insert(b).second)
            return false;
    return true;
}

bool is_total(const Morphism& m, const TypedGraph& from)
{
    for (const auto& [id, n] : from.nodes())
        if (!m.nodes.count(id))
            return false;
    for (const auto& [id, e] : from.edges())
        if (!m.edges.count(id))
            return false;
    return true;
}

// -------------------------------------------------------------- isomorphism

namespace {

using PairCounts = std::map<std::pair<NodeId, NodeId>, std::map<std::string, int>>;

PairCounts pair_counts(const TypedGraph& g)
{
    PairCounts pc;
    for (const auto& [id, e] : g.edges())
        ++pc[{e.src, e.trg}][e.type];
    return pc;
}

const std::map<std::string, int>& counts_between(const PairCounts& pc, const NodeId& a, const NodeId& b)
{
    static const std::map<std::string, int> empty;
    auto it = pc.find({a, b});
    return it == pc.end() ? empty : it->second;
}

std::string node_signature(const TypedGraph& g, const NodeId& id)
{
    std::vector<std::string> out, in;
    int loops = 0;
    for (const auto& [eid, e] : g.edges()) {
        if (e.src == id)
            out.push_back(e.type);
        if (e.trg == id)
            in.push_back(e.type);
        if (e.src == id && e.trg == id)
            ++loops;
    }
    std::sort(out.begin(), out.end());
    std::sort(in.begin(), in.end());
    std::ostringstream os;
    os << g.node(id).type << "|o";
    for (const auto& t : out)
        os << ',' << t;
    os << "|i";
    for (const auto& t : in)
        os << ',' << t;
    os << "|l" << loops;
    return os.str();
}

} // namespace

std::string invariant_key(const TypedGraph& g)
{
    std::vector<std::string> sigs;
    for (const auto& [id, n] : g.nodes())
        sigs.push_back(node_signature(g, id));
    std::sort(sigs.begin(), sigs.end());
    std::ostringstream os;
    os << g.node_count() << '/' << g.edge_count();
    for (const auto& s : sigs)
        os << ';' << s;
    return os.str();
}

std::optional<Morphism> find_isomorphism(const TypedGraph& g, const TypedGraph& h)
{
    if (g.type_graph_name() != h.type_graph_name())
        throw GraphError("isomorphism check across different type graphs ('" + g.type_graph_name() + "' vs '" +
                         h.type_graph_name() + "')");
    if (g.node_count() != h.node_count() || g.edge_count() != h.edge_count())
        return std::nullopt;

    std::map<NodeId, std::string> gsig, hsig;
    for (const auto& [id, n] : g.nodes())
        gsig[id] = node_signature(g, id);
    for (const auto& [id, n] : h.nodes())
        hsig[id] = node_signature(h, id);
    {
        std::multiset<std::string> a, b;
        for (const auto& [id, s] : gsig)
            a.insert(s);
        for (const auto& [id, s] : hsig)
            b.insert(s);
        if (a != b)
            return std::nullopt;
    }

    const PairCounts gpc = pair_counts(g);
    const PairCounts hpc = pair_counts(h);

    std::vector<NodeId> order;
    for (const auto& [id, n] : g.nodes())
        order.push_back(id);

    Morphism m;
    std::set<NodeId> used;

    std::function<bool(std::size_t)> extend = [&](std::size_t i) -> bool {
        if (i == order.size())
            return true;
        const NodeId& u = order[i];
        for (const auto& [v, vs] : hsig) {
            if (used.count(v) || vs != gsig[u])
                continue;
            bool ok = counts_between(gpc, u, u) == counts_between(hpc, v, v);
            for (std::size_t j = 0; ok && j < i; ++j) {
                const NodeId& w = order[j];
                const NodeId& x = m.nodes[w];
                ok = counts_between(gpc, u, w) == counts_between(hpc, v, x) &&
                     counts_between(gpc, w, u) == counts_between(hpc, x, v);
            }
            if (!ok)
                continue;
            m.nodes[u] = v;
            used.insert(v);
            if (extend(i + 1))
                return true;
            m.nodes.erase(u);
            used.erase(v);
        }
        return false;
    };
    if (!extend(0))
        return std::nullopt;

    // parallel edges are interchangeable; pair them up in id order
    std::map<std::tuple<NodeId, NodeId, std::string>, std::vector<EdgeId>> hbuckets;
    for (const auto& [id, e] : h.edges())
        hbuckets[{e.src, e.trg, e.type}].push_back(id);
    for (const auto& [id, e] : g.edges()) {
        auto& bucket = hbuckets[{m.nodes[e.src], m.nodes[e.trg], e.type}];
        if (bucket.empty())
            return std::nullopt;
        m.edges[id] = bucket.front();
        bucket.erase(bucket.begin());
    }
    return m;
}

bool isomorphic(const TypedGraph& g, const TypedGraph& h) { return find_isomorphism(g, h).has_value(); }

} // namespace sdm
