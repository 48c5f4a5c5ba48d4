// rule_io.cpp

#include "sdm/rule_io.hpp"

namespace sdm {

namespace {

json pairs_to_json(const Morphism& m, const char* from, const char* to)
{
    json arr = json::array();
    for (const auto& [a, b] : m.nodes)
        arr.push_back({{from, a}, {to, b}});
    for (const auto& [a, b] : m.edges)
        arr.push_back({{from, a}, {to, b}});
    return arr;
}

Morphism pairs_from_json(const json& arr, const TypedGraph& src, const TypedGraph& dst, const char* from,
                         const char* to)
{
    if (!arr.is_array())
        throw ParseError(std::string("mapping must be an array of {\"") + from + "\",\"" + to + "\"}");
    Morphism m;
    for (const auto& p : arr) {
        if (!p.is_object() || !p.contains(from) || !p.contains(to) || !p[from].is_string() || !p[to].is_string())
            throw ParseError(std::string("mapping entry needs string fields '") + from + "' and '" + to + "'");
        auto a = p[from].get<std::string>();
        auto b = p[to].get<std::string>();
        if (src.has_node(a)) {
            if (!dst.has_node(b))
                throw ParseError("mapping sends node '" + a + "' to unknown node '" + b + "'");
            if (!m.nodes.emplace(a, b).second)
                throw ParseError("node '" + a + "' mapped twice");
        } else if (src.has_edge(a)) {
            if (!dst.has_edge(b))
                throw ParseError("mapping sends edge '" + a + "' to unknown edge '" + b + "'");
            if (!m.edges.emplace(a, b).second)
                throw ParseError("edge '" + a + "' mapped twice");
        } else {
            throw ParseError("mapping names unknown element '" + a + "'");
        }
    }
    return m;
}

} // namespace

json rule_to_json(const Rule& rule)
{
    json nacs = json::array();
    for (const auto& nac : rule.nacs)
        nacs.push_back({{"graph", graph_to_json(nac.graph)}, {"embed", pairs_to_json(nac.embed, "l", "n")}});
    return {{"name", rule.name},
            {"lhs", graph_to_json(rule.lhs)},
            {"rhs", graph_to_json(rule.rhs)},
            {"map", pairs_to_json(rule.map, "l", "r")},
            {"nacs", nacs}};
}

Rule rule_from_json(const json& j, const TypeGraphPtr& tg)
{
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string() || !j.contains("lhs") || !j.contains("rhs"))
        throw ParseError("rule needs 'name', 'lhs' and 'rhs'");
    Rule r;
    r.name = j["name"].get<std::string>();
    r.lhs = graph_from_json(j["lhs"], tg);
    r.rhs = graph_from_json(j["rhs"], tg);
    if (j.contains("map"))
        r.map = pairs_from_json(j["map"], r.lhs, r.rhs, "l", "r");
    if (j.contains("nacs")) {
        if (!j["nacs"].is_array())
            throw ParseError("'nacs' must be an array");
        for (const auto& n : j["nacs"]) {
            if (!n.is_object() || !n.contains("graph"))
                throw ParseError("NAC needs a 'graph'");
            NAC nac;
            nac.graph = graph_from_json(n["graph"], tg);
            nac.embed = pairs_from_json(n.value("embed", json::array()), r.lhs, nac.graph, "l", "n");
            r.nacs.push_back(std::move(nac));
        }
    }
    try {
        r.check();
    } catch (const RuleError& err) {
        throw ParseError(err.what());
    }
    return r;
}

} // namespace sdm
