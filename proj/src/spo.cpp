// spo.cpp

#include "sdm/spo.hpp"

#include <deque>
#include <functional>
#include <unordered_map>

namespace sdm {

// --------------------------------------------------------------------- Rule

void Rule::check() const
{
    const auto tgname = lhs.type_graph_name();
    if (rhs.type_graph_name() != tgname)
        throw RuleError("rule '" + name + "': lhs and rhs use different type graphs");
    if (!is_morphism(map, lhs, rhs, true))
        throw RuleError("rule '" + name + "': mapping is not a typed partial morphism with subgraph domain");
    if (!is_injective(map))
        throw RuleError("rule '" + name + "': mapping is not injective");
    for (std::size_t i = 0; i < nacs.size(); ++i) {
        const auto& nac = nacs[i];
        if (nac.graph.type_graph_name() != tgname)
            throw RuleError("rule '" + name + "': NAC " + std::to_string(i) + " uses a different type graph");
        if (!is_morphism(nac.embed, lhs, nac.graph, true) || !is_total(nac.embed, lhs) ||
            !is_injective(nac.embed))
            throw RuleError("rule '" + name + "': NAC " + std::to_string(i) +
                            " embedding is not a total injective morphism");
    }
}

// ----------------------------------------------------------------- matching

std::vector<Morphism> find_morphisms(const TypedGraph& pattern, const TypedGraph& host, const Morphism& seed,
                                     bool injective, std::size_t limit)
{
    std::vector<Morphism> out;
    const TypeGraph* tg = host.type_graph().get();
    auto conforms = [&](const std::string& host_type, const std::string& pattern_type) {
        return tg ? tg->conforms(host_type, pattern_type) : host_type == pattern_type;
    };

    // seeds must be consistent on their own
    for (const auto& [p, h] : seed.nodes)
        if (!pattern.has_node(p) || !host.has_node(h) || !conforms(host.node(h).type, pattern.node(p).type))
            return out;

    std::vector<NodeId> free_nodes;
    for (const auto& [id, n] : pattern.nodes())
        if (!seed.nodes.count(id))
            free_nodes.push_back(id);
    std::vector<EdgeId> pedges;
    for (const auto& [id, e] : pattern.edges())
        pedges.push_back(id);

    // host adjacency counts for pruning
    std::map<std::tuple<NodeId, NodeId, std::string>, int> host_counts;
    for (const auto& [id, e] : host.edges())
        ++host_counts[{e.src, e.trg, e.type}];

    Morphism cur = seed;
    std::set<NodeId> used_nodes;
    std::set<EdgeId> used_edges;
    for (const auto& [p, h] : seed.nodes)
        used_nodes.insert(h);
    for (const auto& [p, h] : seed.edges)
        used_edges.insert(h);
    if (injective && (used_nodes.size() != seed.nodes.size() || used_edges.size() != seed.edges.size()))
        return out;

    auto done = [&] { return limit != 0 && out.size() >= limit; };

    // pattern edges whose endpoints are both mapped must have enough host
    // edges between the images
    auto edges_feasible = [&] {
        std::map<std::tuple<NodeId, NodeId, std::string>, int> need;
        for (const auto& eid : pedges) {
            const auto& e = pattern.edge(eid);
            auto s = cur.nodes.find(e.src);
            auto t = cur.nodes.find(e.trg);
            if (s == cur.nodes.end() || t == cur.nodes.end())
                continue;
            ++need[{s->second, t->second, e.type}];
        }
        for (const auto& [key, n] : need) {
            auto it = host_counts.find(key);
            int have = it == host_counts.end() ? 0 : it->second;
            if (have == 0 || (injective && have < n))
                return false;
        }
        return true;
    };

    std::function<void(std::size_t)> assign_edges = [&](std::size_t i) {
        if (done())
            return;
        if (i == pedges.size()) {
            out.push_back(cur);
            return;
        }
        const auto& pid = pedges[i];
        const auto& pe = pattern.edge(pid);
        const NodeId& hs = cur.nodes.at(pe.src);
        const NodeId& ht = cur.nodes.at(pe.trg);
        if (auto it = seed.edges.find(pid); it != seed.edges.end()) {
            if (!host.has_edge(it->second))
                return;
            const auto& he = host.edge(it->second);
            if (he.type == pe.type && he.src == hs && he.trg == ht)
                assign_edges(i + 1);
            return;
        }
        for (const auto& [hid, he] : host.edges()) {
            if (he.type != pe.type || he.src != hs || he.trg != ht)
                continue;
            if (injective && used_edges.count(hid))
                continue;
            cur.edges[pid] = hid;
            used_edges.insert(hid);
            assign_edges(i + 1);
            cur.edges.erase(pid);
            used_edges.erase(hid);
            if (done())
                return;
        }
    };

    std::function<void(std::size_t)> assign_nodes = [&](std::size_t i) {
        if (done())
            return;
        if (i == free_nodes.size()) {
            assign_edges(0);
            return;
        }
        const auto& pid = free_nodes[i];
        const auto& ptype = pattern.node(pid).type;
        for (const auto& [hid, hn] : host.nodes()) {
            if (injective && used_nodes.count(hid))
                continue;
            if (!conforms(hn.type, ptype))
                continue;
            cur.nodes[pid] = hid;
            if (edges_feasible()) {
                used_nodes.insert(hid);
                assign_nodes(i + 1);
                used_nodes.erase(hid);
            }
            cur.nodes.erase(pid);
            if (done())
                return;
        }
    };

    if (edges_feasible())
        assign_nodes(0);
    return out;
}

std::vector<Match> find_matches(const Rule& rule, const TypedGraph& host, const PartialAssignment& partial,
                                const MatchOptions& options)
{
    Morphism seed;
    std::set<NodeId> images;
    for (const auto& [l, h] : partial) {
        if (!rule.lhs.has_node(l))
            throw RuleError("pre-match names unknown pattern node '" + l + "'");
        if (!host.has_node(h))
            throw RuleError("pre-match maps '" + l + "' to missing host node '" + h + "'");
        const auto& tg = host.type_graph();
        const auto& ht = host.node(h).type;
        const auto& lt = rule.lhs.node(l).type;
        if (tg ? !tg->conforms(ht, lt) : ht != lt)
            throw RuleError("pre-match maps '" + l + "' (" + lt + ") to '" + h + "' (" + ht + ")");
        if (!images.insert(h).second)
            throw RuleError("pre-match is not injective at host node '" + h + "'");
        seed.nodes[l] = h;
    }
    std::vector<Match> out;
    for (auto& m : find_morphisms(rule.lhs, host, seed, true)) {
        Match match{std::move(m), host.revision()};
        bool ok = true;
        for (const auto& nac : rule.nacs) {
            if (!check_nac(nac, match, host, options.injective_nac)) {
                ok = false;
                break;
            }
        }
        if (ok)
            out.push_back(std::move(match));
    }
    return out;
}

bool check_nac(const NAC& nac, const Match& match, const TypedGraph& host, bool injective)
{
    Morphism seed;
    for (const auto& [l, n] : nac.embed.nodes)
        seed.nodes[n] = match.morphism.nodes.at(l);
    for (const auto& [l, n] : nac.embed.edges)
        seed.edges[n] = match.morphism.edges.at(l);
    return find_morphisms(nac.graph, host, seed, injective, 1).empty();
}

// ---------------------------------------------------------------- FreshIds

NodeId FreshIds::node(const TypedGraph& avoid)
{
    for (;;) {
        NodeId id = "n#" + std::to_string(next_node_++);
        if (!avoid.has_id(id))
            return id;
    }
}

EdgeId FreshIds::edge(const TypedGraph& avoid)
{
    for (;;) {
        EdgeId id = "e#" + std::to_string(next_edge_++);
        if (!avoid.has_id(id))
            return id;
    }
}

// ------------------------------------------------------------- application

ApplyResult apply_rule(const Rule& rule, const Match& match, const TypedGraph& host, FreshIds& ids)
{
    if (match.host_revision != host.revision())
        throw StaleMatchError("rule '" + rule.name + "': match was computed against an older host revision");
    const auto& m = match.morphism;
    if (!is_total(m, rule.lhs) || !is_injective(m) || !is_morphism(m, rule.lhs, host, false))
        throw RuleError("rule '" + rule.name + "': match is not a total injective morphism into the host");

    ApplyResult res;
    res.result = host;
    TypedGraph& h = res.result;

    for (const auto& [lid, le] : rule.lhs.edges()) {
        if (!rule.map.edges.count(lid)) {
            const auto& hid = m.edges.at(lid);
            if (h.has_edge(hid)) {
                h.remove_edge(hid);
                res.deleted.insert(hid);
            }
        }
    }
    for (const auto& [lid, ln] : rule.lhs.nodes()) {
        if (!rule.map.nodes.count(lid)) {
            const auto& hid = m.nodes.at(lid);
            for (const auto& e : h.remove_node(hid))
                res.deleted.insert(e);  // dangling edges go with the node
            res.deleted.insert(hid);
        }
    }

    std::map<NodeId, NodeId> r_preimage_n;
    for (const auto& [l, r] : rule.map.nodes)
        r_preimage_n[r] = l;
    std::map<EdgeId, EdgeId> r_preimage_e;
    for (const auto& [l, r] : rule.map.edges)
        r_preimage_e[r] = l;

    for (const auto& [rid, rn] : rule.rhs.nodes()) {
        if (auto it = r_preimage_n.find(rid); it != r_preimage_n.end()) {
            res.rhs_embedding.nodes[rid] = m.nodes.at(it->second);
        } else {
            auto fresh = ids.node(h);
            h.add_node(fresh, rn.type);
            res.created.insert(fresh);
            res.rhs_embedding.nodes[rid] = fresh;
        }
    }
    for (const auto& [rid, re] : rule.rhs.edges()) {
        if (auto it = r_preimage_e.find(rid); it != r_preimage_e.end()) {
            res.rhs_embedding.edges[rid] = m.edges.at(it->second);
        } else {
            auto fresh = ids.edge(h);
            h.add_edge(fresh, re.type, res.rhs_embedding.nodes.at(re.src), res.rhs_embedding.nodes.at(re.trg));
            res.created.insert(fresh);
            res.rhs_embedding.edges[rid] = fresh;
        }
    }

    for (const auto& [id, n] : host.nodes())
        if (!res.deleted.count(id))
            res.comorphism.nodes[id] = id;
    for (const auto& [id, e] : host.edges())
        if (!res.deleted.count(id))
            res.comorphism.edges[id] = id;
    return res;
}

ApplyResult apply_rule(const Rule& rule, const Match& match, const TypedGraph& host)
{
    FreshIds ids;
    return apply_rule(rule, match, host, ids);
}

// ------------------------------------------------------------- enumeration

long find_isomorphic(const std::vector<TypedGraph>& members, const TypedGraph& g)
{
    for (std::size_t i = 0; i < members.size(); ++i)
        if (isomorphic(members[i], g))
            return static_cast<long>(i);
    return -1;
}

Language enumerate_language(const GraphGrammar& grammar, std::size_t max_nodes)
{
    if (max_nodes < grammar.start.node_count())
        throw std::invalid_argument("max_nodes is smaller than the start graph");
    Language lang;
    for (const auto& r : grammar.rules)
        if (r.rhs.node_count() < r.lhs.node_count())
            lang.warnings.push_back("rule '" + r.name + "' shrinks graphs; node-count pruning may be incomplete");

    std::unordered_map<std::string, std::vector<std::size_t>> buckets;
    auto add = [&](const TypedGraph& g) {
        auto& bucket = buckets[invariant_key(g)];
        for (auto idx : bucket)
            if (isomorphic(lang.members[idx], g))
                return false;
        bucket.push_back(lang.members.size());
        lang.members.push_back(g);
        return true;
    };

    std::deque<std::size_t> queue;
    add(grammar.start);
    queue.push_back(0);
    while (!queue.empty()) {
        // copy: members may reallocate while expanding
        TypedGraph g = lang.members[queue.front()];
        queue.pop_front();
        for (const auto& rule : grammar.rules) {
            for (const auto& match : find_matches(rule, g)) {
                FreshIds ids;
                auto res = apply_rule(rule, match, g, ids);
                if (res.result.node_count() > max_nodes)
                    continue;
                if (add(res.result))
                    queue.push_back(lang.members.size() - 1);
            }
        }
    }
    return lang;
}

} // namespace sdm
