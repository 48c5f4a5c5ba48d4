// syntax.cpp

#include "sdm/syntax.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <unordered_map>

namespace sdm {

namespace {

using namespace cfg_types;

struct RuleShape {
    std::string name;
    RuleFamily family;
    std::vector<std::pair<NodeId, std::string>> nodes;             // beyond a and b
    std::vector<std::tuple<NodeId, std::string, NodeId>> edges;    // P/Q are polarity placeholders
    std::vector<NodeId> primary_nodes;
    std::vector<NodeId> other_nodes;
};

std::string other_polarity(const std::string& p) { return p == success ? failure : success; }

SyntaxRule build(const RuleShape& shape, const std::string& primary, const TypeGraphPtr& tg)
{
    const std::string secondary = other_polarity(primary);
    auto resolve = [&](const std::string& t) { return t == "P" ? primary : t == "Q" ? secondary : t; };
    auto sub = [&](std::string name) {
        for (auto [from, to] : {std::pair{"{P}", primary}, std::pair{"{Q}", secondary}}) {
            auto pos = name.find(from);
            if (pos != std::string::npos)
                name.replace(pos, 3, to);
        }
        return name;
    };

    Rule r;
    r.name = sub(shape.name);
    r.lhs = TypedGraph(tg);
    r.lhs.add_node("a", abstract_node);
    r.lhs.add_node("b", abstract_node);
    r.lhs.add_edge("a_next_b", next, "a", "b");
    r.rhs = TypedGraph(tg);
    r.rhs.add_node("a", abstract_node);
    r.rhs.add_node("b", abstract_node);
    for (const auto& [id, type] : shape.nodes)
        r.rhs.add_node(id, type);
    for (const auto& [s, t, d] : shape.edges) {
        auto type = resolve(t);
        r.rhs.add_edge(s + "_" + type + "_" + d, type, s, d);
    }
    r.map.nodes = {{"a", "a"}, {"b", "b"}};
    r.check();
    return SyntaxRule{std::move(r), shape.family, primary, shape.primary_nodes, shape.other_nodes};
}

std::vector<SyntaxRule> make_table()
{
    auto tg = syntax_type_graph();
    const std::pair<NodeId, std::string> c{"c", cf_node}, x{"x", cf_node}, x1{"x1", cf_node}, x2{"x2", cf_node},
        y{"y", cf_node}, z{"z", stop_node};

    const RuleShape seq{"seq", RuleFamily::sequential, {x}, {{"a", next, "x"}, {"x", next, "b"}}, {}, {}};
    const RuleShape join{"cond-join",
                         RuleFamily::joining,
                         {c, x},
                         {{"a", next, "c"}, {"c", "P", "x"}, {"x", next, "b"}, {"c", "Q", "b"}},
                         {"x"},
                         {}};
    // the new (Q) branch holds only a stop node; P continues at b
    const RuleShape cstop{"cond-{Q}-stop",
                          RuleFamily::non_joining,
                          {c, z},
                          {{"a", next, "c"}, {"c", "P", "b"}, {"c", "Q", "z"}},
                          {},
                          {"z"}};
    const RuleShape cnode{"cond-{Q}-node-stop",
                          RuleFamily::non_joining,
                          {c, y, z},
                          {{"a", next, "c"}, {"c", "P", "b"}, {"c", "Q", "y"}, {"y", next, "z"}},
                          {},
                          {"y", "z"}};
    const RuleShape loop1{"loop-{P}-direct",
                          RuleFamily::loop,
                          {c},
                          {{"a", next, "c"}, {"c", "P", "c"}, {"c", "Q", "b"}},
                          {},
                          {}};
    const RuleShape loop2{"loop-{P}-2",
                          RuleFamily::loop,
                          {c, x1},
                          {{"a", next, "c"}, {"c", "P", "x1"}, {"x1", next, "c"}, {"c", "Q", "b"}},
                          {"x1"},
                          {}};
    const RuleShape loop2y{"loop-{P}-2-exit-node",
                           RuleFamily::loop,
                           {c, x1, y},
                           {{"a", next, "c"}, {"c", "P", "x1"}, {"x1", next, "c"}, {"c", "Q", "y"}, {"y", next, "b"}},
                           {"x1"},
                           {"y"}};
    const RuleShape loop3{"loop-{P}-3",
                          RuleFamily::loop,
                          {c, x1, x2},
                          {{"a", next, "c"}, {"c", "P", "x1"}, {"x1", next, "x2"}, {"x2", next, "c"}, {"c", "Q", "b"}},
                          {"x1", "x2"},
                          {}};
    const RuleShape loop3y{"loop-{P}-3-exit-node",
                           RuleFamily::loop,
                           {c, x1, x2, y},
                           {{"a", next, "c"},
                            {"c", "P", "x1"},
                            {"x1", next, "x2"},
                            {"x2", next, "c"},
                            {"c", "Q", "y"},
                            {"y", next, "b"}},
                           {"x1", "x2"},
                           {"y"}};

    std::vector<SyntaxRule> t;
    t.push_back(build(seq, success, tg));
    t.push_back(build(join, success, tg));
    for (const auto& shape : {cstop, cnode})
        for (const char* p : {success, failure})
            t.push_back(build(shape, p, tg));
    for (const auto& shape : {loop1, loop2, loop2y, loop3, loop3y})
        for (const char* p : {success, failure})
            t.push_back(build(shape, p, tg));
    return t;
}

} // namespace

const char* to_string(RuleFamily f)
{
    switch (f) {
    case RuleFamily::sequential: return "sequential";
    case RuleFamily::joining: return "joining";
    case RuleFamily::non_joining: return "non-joining";
    case RuleFamily::loop: return "loop";
    }
    return "?";
}

const char* to_string(NodeKind k)
{
    switch (k) {
    case NodeKind::sequential: return "sequential";
    case NodeKind::conditional_joining: return "conditional-joining";
    case NodeKind::conditional_nonjoining: return "conditional-nonjoining";
    case NodeKind::loop_head_success: return "loop-head-success";
    case NodeKind::loop_head_failure: return "loop-head-failure";
    }
    return "?";
}

TypeGraphPtr syntax_type_graph()
{
    static const TypeGraphPtr tg = [] {
        auto t = std::make_shared<TypeGraph>("TG_Syntax");
        t->add_node_type(abstract_node);
        t->add_node_type(cf_node, abstract_node);
        t->add_node_type(start_node, abstract_node);
        t->add_node_type(stop_node, abstract_node);
        for (const char* e : {next, success, failure})
            t->add_edge_type(e, abstract_node, abstract_node);
        t->check();
        return t;
    }();
    return tg;
}

TypedGraph syntax_start_graph()
{
    TypedGraph g(syntax_type_graph());
    g.add_node("start", start_node);
    g.add_node("story", cf_node);
    g.add_node("stop", stop_node);
    g.add_edge("start_next_story", next, "start", "story");
    g.add_edge("story_next_stop", next, "story", "stop");
    return g;
}

const std::vector<SyntaxRule>& syntax_rule_table()
{
    static const std::vector<SyntaxRule> table = make_table();
    return table;
}

std::vector<Rule> syntax_rules()
{
    std::vector<Rule> out;
    for (const auto& sr : syntax_rule_table())
        out.push_back(sr.rule);
    return out;
}

GraphGrammar syntax_grammar() { return GraphGrammar{syntax_start_graph(), syntax_rules()}; }

// --------------------------------------------------------------- validation

namespace {

class BackwardSearch {
public:
    explicit BackwardSearch(const TypedGraph& start) : start_(start)
    {
        const auto& table = syntax_rule_table();
        order_.resize(table.size());
        std::iota(order_.begin(), order_.end(), 0);
        // largest right-hand side first, then table order
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t i, std::size_t j) {
            return table[i].rule.rhs.node_count() > table[j].rule.rhs.node_count();
        });
    }

    bool reduce(const TypedGraph& h)
    {
        if (h.node_count() < start_.node_count())
            return false;
        if (h.node_count() == start_.node_count()) {
            auto iso = find_isomorphism(start_, h);
            if (!iso)
                return false;
            start_roles = iso->nodes;
            return true;
        }
        auto key = invariant_key(h);
        auto& bucket = failed_[key];
        for (const auto& f : bucket)
            if (isomorphic(f, h))
                return false;

        const auto& table = syntax_rule_table();
        for (auto idx : order_) {
            const auto& rule = table[idx].rule;
            for (const auto& m : find_morphisms(rule.rhs, h, {}, true)) {
                if (!exact_image(rule, m, h))
                    continue;
                TypedGraph prev = h;
                for (const auto& [rid, rn] : rule.rhs.nodes())
                    if (!rule.lhs.has_node(rid))
                        prev.remove_node(m.nodes.at(rid));
                prev.add_edge("r#" + std::to_string(counter_++), next, m.nodes.at("a"), m.nodes.at("b"));
                steps.push_back({idx, rule.name, m.nodes});
                if (reduce(prev))
                    return true;
                steps.pop_back();
            }
        }
        failed_[key].push_back(h);
        return false;
    }

    std::vector<DerivationStep> steps;  // backward order
    std::map<NodeId, NodeId> start_roles;

private:
    // the created nodes carry no edges beyond the rule's own
    static bool exact_image(const Rule& rule, const Morphism& m, const TypedGraph& h)
    {
        for (const auto& [rid, rn] : rule.rhs.nodes()) {
            if (rule.lhs.has_node(rid))
                continue;
            if (h.incident_edges(m.nodes.at(rid)).size() != rule.rhs.incident_edges(rid).size())
                return false;
        }
        return true;
    }

    const TypedGraph& start_;
    std::vector<std::size_t> order_;
    std::unordered_map<std::string, std::vector<TypedGraph>> failed_;
    std::size_t counter_ = 0;
};

} // namespace

CfgValidation validate_control_flow(const TypedGraph& cfg)
{
    CfgValidation out;
    if (cfg.type_graph_name() != syntax_type_graph()->name()) {
        out.reason = "graph is not typed over " + syntax_type_graph()->name();
        return out;
    }
    auto typing = validate_typing(cfg, *syntax_type_graph());
    if (!typing.ok()) {
        out.reason = "typing violation at '" + typing.violations.front().element + "': " +
                     typing.violations.front().message;
        return out;
    }
    for (const auto& [id, n] : cfg.nodes()) {
        if (n.type == abstract_node) {
            out.reason = "node '" + id + "' has the abstract type " + std::string(abstract_node);
            return out;
        }
    }
    const TypedGraph start = syntax_start_graph();
    BackwardSearch search(start);
    if (!search.reduce(cfg)) {
        out.reason = "no inverse derivation reduces the graph to the start graph";
        return out;
    }
    out.valid = true;
    out.start_roles = search.start_roles;
    out.derivation.assign(search.steps.rbegin(), search.steps.rend());
    return out;
}

// ----------------------------------------------------------- classification

NodeClassification classify_nodes(const TypedGraph& cfg) { return classify_nodes(cfg, validate_control_flow(cfg)); }

NodeClassification classify_nodes(const TypedGraph& cfg, const CfgValidation& validation)
{
    if (!validation.valid)
        throw CfgError("cannot classify an invalid control-flow graph: " + validation.reason);
    NodeClassification nc;
    for (const auto& [id, n] : cfg.nodes())
        if (n.type == cf_node)
            nc.classes[id] = NodeClass{};

    auto stops_from = [&](const NodeId& from, const NodeId& avoid) {
        std::vector<NodeId> stops;
        std::set<NodeId> seen{from};
        std::deque<NodeId> queue{from};
        while (!queue.empty()) {
            auto n = queue.front();
            queue.pop_front();
            if (cfg.node(n).type == stop_node)
                stops.push_back(n);
            for (const auto& e : cfg.out_edges(n)) {
                const auto& t = cfg.edge(e).trg;
                if (t != avoid && seen.insert(t).second)
                    queue.push_back(t);
            }
        }
        std::sort(stops.begin(), stops.end());
        return stops;
    };

    const auto& table = syntax_rule_table();
    for (const auto& step : validation.derivation) {
        const auto& sr = table[step.rule_index];
        if (sr.family == RuleFamily::sequential)
            continue;
        const NodeId& c = step.roles.at("c");
        auto& cls = nc.classes.at(c);
        switch (sr.family) {
        case RuleFamily::joining:
            cls.kind = NodeKind::conditional_joining;
            cls.join = step.roles.at("b");
            break;
        case RuleFamily::non_joining:
            cls.kind = NodeKind::conditional_nonjoining;
            cls.branch_stops = stops_from(step.roles.at("b"), c);
            cls.branch_stops.push_back(step.roles.at("z"));
            break;
        case RuleFamily::loop:
            cls.kind = sr.primary == success ? NodeKind::loop_head_success : NodeKind::loop_head_failure;
            break;
        default:
            break;
        }
    }
    return nc;
}

} // namespace sdm
