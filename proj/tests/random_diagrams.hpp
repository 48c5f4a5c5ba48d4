// random_diagrams.hpp - random story diagrams over a list type graph

#ifndef SDM_TEST_RANDOM_DIAGRAMS_HPP
#define SDM_TEST_RANDOM_DIAGRAMS_HPP

#include <memory>
#include <random>

#include "sdm/model.hpp"

namespace sdm::testing {

inline TypeGraphPtr list_types()
{
    static const TypeGraphPtr tg = [] {
        auto t = std::make_shared<TypeGraph>("List");
        t->add_node_type("Node");
        t->add_edge_type("next", "Node", "Node");
        return t;
    }();
    return tg;
}

inline StoryPattern random_pattern(std::mt19937& rng)
{
    auto coin = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng) == 0; };
    StoryPattern p;
    p.rule.name = "random";
    p.rule.lhs = TypedGraph(list_types());
    p.rule.lhs.add_node("this", "Node");
    for (const char* v : {"a", "b"})
        if (coin(2))
            p.rule.lhs.add_node(v, "Node");
    std::vector<NodeId> ln;
    for (const auto& [id, n] : p.rule.lhs.nodes())
        ln.push_back(id);
    auto pick = [&](const std::vector<NodeId>& v) {
        return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
    };
    int le = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int i = 0; i < le; ++i)
        p.rule.lhs.add_edge("l" + std::to_string(i), "next", pick(ln), pick(ln));
    p.rule.rhs = TypedGraph(list_types());
    for (const auto& id : ln)
        if (id == "this" || !coin(3)) {
            p.rule.rhs.add_node(id, "Node");
            p.rule.map.nodes[id] = id;
        }
    for (const auto& [id, e] : p.rule.lhs.edges())
        if (p.rule.rhs.has_node(e.src) && p.rule.rhs.has_node(e.trg) && coin(2)) {
            p.rule.rhs.add_edge(id, "next", e.src, e.trg);
            p.rule.map.edges[id] = id;
        }
    if (coin(2))
        p.rule.rhs.add_node("c", "Node");
    std::vector<NodeId> rn;
    for (const auto& [id, n] : p.rule.rhs.nodes())
        rn.push_back(id);
    int re = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int i = 0; i < re; ++i)
        p.rule.rhs.add_edge("r" + std::to_string(i), "next", pick(rn), pick(rn));
    for (const auto& id : ln)
        p.var_names[id] = id;
    for (const auto& id : rn)
        p.var_names[id] = id;
    p.bound_vars.insert("this");
    for (const auto& id : ln)
        if (id != "this" && coin(3))
            p.bound_vars.insert(id);
    p.rule.check();
    p.check();
    return p;
}

inline TypedGraph random_list_model(std::mt19937& rng)
{
    TypedGraph g(list_types());
    int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < n; ++i)
        g.add_node("n" + std::to_string(i), "Node");
    int e = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int i = 0; i < e; ++i)
        g.add_edge("x" + std::to_string(i), "next", "n" + std::to_string(std::uniform_int_distribution<int>(0, n - 1)(rng)),
                   "n" + std::to_string(std::uniform_int_distribution<int>(0, n - 1)(rng)));
    return g;
}


// Random patterns on every story node of cfg; nullptr when the bound
// marks do not survive the static check.
inline std::shared_ptr<StoryDiagram> random_diagram(const TypedGraph& cfg, std::mt19937& rng)
{
    auto d = std::make_shared<StoryDiagram>();
    d->model_types = list_types();
    d->cfg = cfg;
    d->params = {{"this", "Node"}};
    for (const auto& [id, n] : cfg.nodes())
        if (n.type == "CFNode")
            d->patterns[id] = random_pattern(rng);
    d->validation = validate_control_flow(cfg);
    d->classes = classify_nodes(cfg, d->validation);
    d->scopes = analyze_scopes(*d);
    if (!validate_binding_marks(*d).ok)
        return nullptr;
    return d;
}

} // namespace sdm::testing

#endif // SDM_TEST_RANDOM_DIAGRAMS_HPP
