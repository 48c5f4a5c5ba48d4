// model.cpp

#include "sdm/model.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

#include "sdm/rule_io.hpp"

namespace sdm {

using namespace cfg_types;

// ---- StoryPattern ---------------------------------------------------------

std::optional<NodeId> StoryPattern::lhs_node(const std::string& var) const
{
    for (const auto& [id, n] : rule.lhs.nodes())
        if (var_names.at(id) == var)
            return id;
    return std::nullopt;
}

std::optional<NodeId> StoryPattern::rhs_node(const std::string& var) const
{
    for (const auto& [id, n] : rule.rhs.nodes())
        if (var_names.at(id) == var)
            return id;
    return std::nullopt;
}

std::string StoryPattern::type_of(const std::string& var) const
{
    if (auto l = lhs_node(var))
        return rule.lhs.node(*l).type;
    if (auto r = rhs_node(var))
        return rule.rhs.node(*r).type;
    throw DiagramError("pattern '" + rule.name + "' has no variable '" + var + "'");
}

std::set<std::string> StoryPattern::lhs_vars() const
{
    std::set<std::string> out;
    for (const auto& [id, n] : rule.lhs.nodes())
        out.insert(var_names.at(id));
    return out;
}

std::set<std::string> StoryPattern::deleted_vars() const
{
    std::set<std::string> out;
    for (const auto& [id, n] : rule.lhs.nodes())
        if (!rule.map.nodes.count(id))
            out.insert(var_names.at(id));
    return out;
}

std::set<std::string> StoryPattern::created_vars() const
{
    std::set<NodeId> image;
    for (const auto& [l, r] : rule.map.nodes)
        image.insert(r);
    std::set<std::string> out;
    for (const auto& [id, n] : rule.rhs.nodes())
        if (!image.count(id))
            out.insert(var_names.at(id));
    return out;
}

void StoryPattern::check() const
{
    const std::string where = "pattern '" + rule.name + "': ";
    std::map<std::string, NodeId> l_names, r_names;
    for (const auto& [id, n] : rule.lhs.nodes()) {
        auto it = var_names.find(id);
        if (it == var_names.end())
            throw DiagramError(where + "node '" + id + "' has no variable name");
        if (!l_names.emplace(it->second, id).second)
            throw DiagramError(where + "variable '" + it->second + "' names two nodes");
    }
    std::map<NodeId, NodeId> preimage;
    for (const auto& [l, r] : rule.map.nodes)
        preimage[r] = l;
    for (const auto& [id, n] : rule.rhs.nodes()) {
        auto it = var_names.find(id);
        if (it == var_names.end())
            throw DiagramError(where + "node '" + id + "' has no variable name");
        auto pre = preimage.find(id);
        if (pre != preimage.end()) {
            if (var_names.at(pre->second) != it->second)
                throw DiagramError(where + "preserved node '" + id + "' is renamed");
            continue;
        }
        if (l_names.count(it->second) || !r_names.emplace(it->second, id).second)
            throw DiagramError(where + "variable '" + it->second + "' names two nodes");
    }
    for (const auto& v : bound_vars)
        if (!l_names.count(v))
            throw DiagramError(where + "bound variable '" + v + "' is not in the left-hand side");
}

// ---- ScopeTree ------------------------------------------------------------

std::size_t ScopeTree::depth_of(TemplateId t) const
{
    std::size_t d = 1;
    while (templates.at(t).parent) {
        t = *templates.at(t).parent;
        ++d;
    }
    return d;
}

std::size_t ScopeTree::depth() const
{
    std::size_t d = 0;
    for (const auto& t : templates)
        d = std::max(d, depth_of(t.id));
    return d;
}

bool ScopeTree::is_ancestor_or_self(TemplateId ancestor, TemplateId t) const
{
    for (;;) {
        if (t == ancestor)
            return true;
        if (!templates.at(t).parent)
            return false;
        t = *templates.at(t).parent;
    }
}

std::vector<TemplateId> ScopeTree::chain(TemplateId t) const
{
    std::vector<TemplateId> out{t};
    while (templates.at(t).parent) {
        t = *templates.at(t).parent;
        out.push_back(t);
    }
    return out;
}

std::optional<std::size_t> ScopeTree::resolve(TemplateId t, const std::string& name) const
{
    for (auto s : chain(t))
        for (std::size_t i = 0; i < variables.size(); ++i)
            if (variables[i].scope == s && variables[i].name == name)
                return i;
    return std::nullopt;
}

NodeId StoryDiagram::first_node() const
{
    const auto& start = validation.start_roles.at("start");
    return cfg.edge(cfg.out_edges(start).at(0)).trg;
}

// ---- analyze_scopes -------------------------------------------------------

namespace {

struct FlowEdge {
    NodeId src, trg;
    std::string type;
};

// Template placement obtained by replaying the derivation on a plain
// adjacency list. Templates are numbered in creation order here and
// renumbered breadth-first afterwards.
struct Replay {
    std::vector<FlowEdge> edges;
    std::map<NodeId, TemplateId> place;
    std::vector<ScopeTemplate> tmpl;

    TemplateId fresh(TemplateId parent, const NodeId& owner, const std::string& branch)
    {
        ScopeTemplate t;
        t.id = tmpl.size();
        t.parent = parent;
        t.owner = owner;
        t.branch = branch;
        tmpl.push_back(t);
        return t.id;
    }

    bool in_subtree(TemplateId t, TemplateId root) const
    {
        for (;;) {
            if (t == root)
                return true;
            if (!tmpl[t].parent)
                return false;
            t = *tmpl[t].parent;
        }
    }
};

ScopeTree replay_scopes(const StoryDiagram& d)
{
    const auto& table = syntax_rule_table();
    Replay rp;
    rp.tmpl.push_back(ScopeTemplate{});
    const auto& sr = d.validation.start_roles;
    for (const auto& [role, id] : sr)
        rp.place[id] = 0;
    rp.edges.push_back({sr.at("start"), sr.at("story"), next});
    rp.edges.push_back({sr.at("story"), sr.at("stop"), next});

    for (const auto& step : d.validation.derivation) {
        const auto& rule = table.at(step.rule_index);
        auto role = [&](const char* r) { return step.roles.at(r); };
        const NodeId a = role("a"), b = role("b");
        auto it = std::find_if(rp.edges.begin(), rp.edges.end(),
                               [&](const FlowEdge& e) { return e.src == a && e.trg == b && e.type == next; });
        if (it == rp.edges.end())
            throw DiagramError("derivation replay lost the edge " + a + " -> " + b);
        rp.edges.erase(it);
        for (const auto& [id, e] : rule.rule.rhs.edges())
            rp.edges.push_back({step.roles.at(e.src), step.roles.at(e.trg), e.type});

        const TemplateId ta = rp.place.at(a);
        if (rule.family == RuleFamily::sequential) {
            rp.place[role("x")] = ta;
            continue;
        }
        const NodeId c = role("c");
        rp.place[c] = ta;
        const std::string p = rule.primary, q = p == success ? failure : success;
        const TemplateId tp = rp.fresh(ta, c, p);
        const TemplateId tq = rp.fresh(ta, c, q);
        for (const auto& n : rule.primary_nodes)
            rp.place[step.roles.at(n)] = tp;
        // a loop's exit node y is indistinguishable from a node placed
        // before b by an earlier sequential step, so it stays outside
        for (const auto& n : rule.other_nodes)
            rp.place[step.roles.at(n)] = rule.family == RuleFamily::loop ? ta : tq;

        if (rule.family == RuleFamily::non_joining) {
            // everything after b that lived alongside a now continues in
            // the primary branch
            std::set<NodeId> seen;
            std::deque<NodeId> todo;
            if (rp.in_subtree(rp.place.at(b), ta)) {
                todo.push_back(b);
                seen.insert(b);
            }
            while (!todo.empty()) {
                auto n = todo.front();
                todo.pop_front();
                for (const auto& e : rp.edges)
                    if (e.src == n && e.trg != c && !seen.count(e.trg) && rp.in_subtree(rp.place.at(e.trg), ta)) {
                        seen.insert(e.trg);
                        todo.push_back(e.trg);
                    }
            }
            for (const auto& n : seen)
                if (rp.place.at(n) == ta)
                    rp.place[n] = tp;
            for (auto& t : rp.tmpl)
                if (t.parent == ta && t.owner && seen.count(*t.owner))
                    t.parent = tp;
        }
    }

    // breadth-first renumbering, children ordered by (owner, branch)
    std::vector<TemplateId> order{0};
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::vector<TemplateId> kids;
        for (const auto& t : rp.tmpl)
            if (t.parent == order[i])
                kids.push_back(t.id);
        std::sort(kids.begin(), kids.end(), [&](TemplateId x, TemplateId y) {
            return std::tie(*rp.tmpl[x].owner, rp.tmpl[x].branch) < std::tie(*rp.tmpl[y].owner, rp.tmpl[y].branch);
        });
        order.insert(order.end(), kids.begin(), kids.end());
    }
    std::vector<TemplateId> renum(rp.tmpl.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        renum[order[i]] = i;

    ScopeTree tree;
    for (auto old : order) {
        ScopeTemplate t = rp.tmpl[old];
        t.id = renum[old];
        if (t.parent)
            t.parent = renum[*t.parent];
        tree.templates.push_back(t);
    }
    for (const auto& [n, t] : rp.place) {
        tree.placement[n] = renum[t];
        if (d.cfg.node(n).type == cf_node)
            tree.templates[renum[t]].members.insert(n);
    }
    for (const auto& t : tree.templates)
        if (t.owner)
            tree.branches[*t.owner][t.branch] = t.id;
    return tree;
}

// Breadth-first position of every node from the start node.
std::map<NodeId, std::size_t> flow_order(const StoryDiagram& d)
{
    std::map<NodeId, std::size_t> pos;
    std::deque<NodeId> todo{d.validation.start_roles.at("start")};
    pos[todo.front()] = 0;
    while (!todo.empty()) {
        auto n = todo.front();
        todo.pop_front();
        for (const auto& e : d.cfg.out_edges(n)) {
            const auto& t = d.cfg.edge(e).trg;
            if (pos.emplace(t, pos.size()).second)
                todo.push_back(t);
        }
    }
    return pos;
}

bool related(const TypeGraph& tg, const std::string& a, const std::string& b)
{
    return tg.conforms(a, b) || tg.conforms(b, a);
}

} // namespace

ScopeTree analyze_scopes(const StoryDiagram& d)
{
    if (!d.validation.valid)
        throw InvalidCfgError("cannot analyse scopes of an invalid control-flow graph: " + d.validation.reason);
    ScopeTree tree = replay_scopes(d);

    for (const auto& p : d.params) {
        tree.variables.push_back(CFVariable{p.name, p.type, 0});
        tree.templates[0].declared_vars.insert(p.name);
    }

    // outer scopes first so that branches find enclosing declarations
    auto order = flow_order(d);
    std::vector<std::tuple<std::size_t, std::size_t, std::string, NodeId>> occ;
    for (const auto& [node, pat] : d.patterns) {
        std::set<std::string> names;
        for (const auto& [elem, name] : pat.var_names)
            names.insert(name);
        for (const auto& name : names)
            occ.emplace_back(tree.depth_of(tree.placement.at(node)), order.at(node), name, node);
    }
    std::sort(occ.begin(), occ.end());
    for (const auto& [depth, pos, name, node] : occ) {
        const auto t = tree.placement.at(node);
        const auto type = d.patterns.at(node).type_of(name);
        if (auto v = tree.resolve(t, name)) {
            if (!related(*d.model_types, type, tree.variables[*v].type))
                throw DiagramError("node '" + node + "': variable '" + name + "' of type '" + type +
                                   "' shadows an enclosing variable of type '" + tree.variables[*v].type + "'");
            continue;
        }
        tree.variables.push_back(CFVariable{name, type, t});
        tree.templates[t].declared_vars.insert(name);
    }
    return tree;
}

// ---- validate_binding_marks -----------------------------------------------

namespace {

// name -> "fresh": bound in this instance rather than inherited on entry
using AbstractScope = std::map<std::string, bool>;
using AbstractStack = std::vector<std::pair<TemplateId, AbstractScope>>;
using AbstractState = std::pair<NodeId, AbstractStack>;

void abstract_update(AbstractScope& s, const StoryPattern& p)
{
    for (const auto& v : p.deleted_vars())
        s.erase(v);
    auto deleted = p.deleted_vars();
    for (const auto& v : p.lhs_vars())
        if (!deleted.count(v))
            s.emplace(v, true);
    for (const auto& v : p.created_vars())
        s[v] = true;
}

// Leave branch instances until the top matches the target's template.
bool abstract_enter(const ScopeTree& tree, AbstractStack& st, TemplateId target)
{
    while (st.back().first != target) {
        if (st.size() == 1)
            return false;
        auto branch = std::move(st.back().second);
        st.pop_back();
        auto& parent = st.back().second;
        for (auto it = parent.begin(); it != parent.end();) {
            auto b = branch.find(it->first);
            if (b == branch.end() || b->second)
                it = parent.erase(it);
            else
                ++it;
        }
    }
    return tree.is_ancestor_or_self(st.back().first, target);
}

} // namespace

BindingReport validate_binding_marks(const StoryDiagram& d)
{
    const auto& tree = d.scopes;
    BindingReport report;
    std::set<std::pair<NodeId, std::string>> reported;
    std::map<AbstractState, std::optional<AbstractState>> pred;
    std::deque<AbstractState> todo;

    AbstractScope root;
    for (const auto& p : d.params)
        root[p.name] = false;
    AbstractState init{d.first_node(), {{0, root}}};
    pred.emplace(init, std::nullopt);
    todo.push_back(init);

    auto path_to = [&](const AbstractState& s) {
        std::vector<NodeId> path;
        std::optional<AbstractState> cur = s;
        while (cur) {
            path.push_back(cur->first);
            cur = pred.at(*cur);
        }
        path.push_back(d.validation.start_roles.at("start"));
        std::reverse(path.begin(), path.end());
        return path;
    };
    auto push = [&](AbstractState next, const AbstractState& from) {
        if (pred.emplace(next, from).second)
            todo.push_back(std::move(next));
    };
    auto move_to = [&](AbstractStack st, const NodeId& trg, const AbstractState& from) {
        if (!abstract_enter(tree, st, tree.placement.at(trg)))
            throw DiagramError("control flow from '" + from.first + "' to '" + trg + "' crosses scopes inconsistently");
        if (d.cfg.node(trg).type == stop_node)
            return;
        push({trg, std::move(st)}, from);
    };

    while (!todo.empty()) {
        auto state = todo.front();
        todo.pop_front();
        const auto& [node, stack] = state;
        const auto& pat = d.patterns.at(node);
        for (const auto& v : pat.bound_vars)
            if (!stack.back().second.count(v) && reported.emplace(node, v).second)
                report.violations.push_back({node, v, path_to(state)});

        const auto& cls = d.classes.classes.at(node);
        if (cls.kind == NodeKind::sequential) {
            auto st = stack;
            abstract_update(st.back().second, pat);
            for (const auto& e : d.cfg.out_edges(node))
                move_to(st, d.cfg.edge(e).trg, state);
            continue;
        }
        for (const auto& e : d.cfg.out_edges(node)) {
            const auto& edge = d.cfg.edge(e);
            auto st = stack;
            AbstractScope child;
            for (const auto& [name, fresh] : stack.back().second)
                child[name] = false;
            if (edge.type == success)
                abstract_update(child, pat);
            st.emplace_back(tree.branches.at(node).at(edge.type), std::move(child));
            move_to(std::move(st), edge.trg, state);
        }
    }
    report.ok = report.violations.empty();
    return report;
}

// ---- loading --------------------------------------------------------------

namespace {

StoryPattern pattern_from_json(const json& j, const TypeGraphPtr& tg, const NodeId& node)
{
    if (!j.is_object() || !j.contains("rule"))
        throw ParseError("pattern for node '" + node + "' needs a 'rule'");
    StoryPattern p;
    p.rule = rule_from_json(j["rule"], tg);
    std::map<NodeId, NodeId> preimage;
    for (const auto& [l, r] : p.rule.map.nodes)
        preimage[r] = l;
    if (j.contains("vars")) {
        if (!j["vars"].is_array())
            throw ParseError("pattern for node '" + node + "': 'vars' must be an array");
        for (const auto& v : j["vars"]) {
            if (!v.is_object() || !v.contains("elem") || !v["elem"].is_string())
                throw ParseError("pattern for node '" + node + "': variable entry needs an 'elem'");
            auto elem = v["elem"].get<std::string>();
            if (!p.rule.lhs.has_node(elem) && !p.rule.rhs.has_node(elem))
                throw ParseError("pattern for node '" + node + "': unknown element '" + elem + "'");
            auto name = v.contains("name") ? v["name"].get<std::string>() : elem;
            if (!p.var_names.emplace(elem, name).second)
                throw ParseError("pattern for node '" + node + "': element '" + elem + "' named twice");
            if (v.value("bound", false)) {
                if (!p.rule.lhs.has_node(elem))
                    throw DiagramError("pattern for node '" + node + "': bound variable '" + name +
                                       "' is not in the left-hand side");
                p.bound_vars.insert(name);
            }
        }
    }
    for (const auto& [id, n] : p.rule.lhs.nodes())
        p.var_names.emplace(id, id);
    for (const auto& [id, n] : p.rule.rhs.nodes()) {
        auto pre = preimage.find(id);
        p.var_names.emplace(id, pre != preimage.end() ? p.var_names.at(pre->second) : id);
    }
    p.check();
    return p;
}

} // namespace

StoryDiagram story_diagram_from_json(const json& j)
{
    if (!j.is_object())
        throw ParseError("story diagram must be a JSON object");
    for (const char* key : {"typegraph", "cfg", "params", "patterns"})
        if (!j.contains(key))
            throw ParseError(std::string("story diagram lacks '") + key + "'");
    StoryDiagram d;
    d.model_types = type_graph_from_json(j["typegraph"]);
    d.cfg = graph_from_json(j["cfg"], syntax_type_graph());

    if (!j["params"].is_array())
        throw ParseError("'params' must be an array");
    for (const auto& p : j["params"]) {
        if (!p.is_object() || !p.contains("name") || !p.contains("type"))
            throw ParseError("parameter needs 'name' and 'type'");
        d.params.push_back({p["name"].get<std::string>(), p["type"].get<std::string>()});
    }
    if (d.params.size() != 1 || d.params[0].name != "this")
        throw DiagramError("exactly one parameter named 'this' is supported");
    if (!d.model_types->has_node_type(d.params[0].type))
        throw DiagramError("parameter 'this' has unknown type '" + d.params[0].type + "'");

    if (!j["patterns"].is_array())
        throw ParseError("'patterns' must be an array");
    for (const auto& p : j["patterns"]) {
        if (!p.is_object() || !p.contains("node") || !p["node"].is_string())
            throw ParseError("pattern entry needs a 'node'");
        auto node = p["node"].get<std::string>();
        if (!d.cfg.has_node(node) || d.cfg.node(node).type != cf_node)
            throw DiagramError("pattern attached to '" + node + "', which is not a story node");
        if (d.patterns.count(node))
            throw DiagramError("node '" + node + "' has two patterns");
        d.patterns.emplace(node, pattern_from_json(p, d.model_types, node));
    }

    d.validation = validate_control_flow(d.cfg);
    if (!d.validation.valid)
        throw InvalidCfgError("invalid control-flow graph: " + d.validation.reason);
    for (const auto& [id, n] : d.cfg.nodes())
        if (n.type == cf_node && !d.patterns.count(id))
            throw DiagramError("story node '" + id + "' has no pattern");
    d.classes = classify_nodes(d.cfg, d.validation);
    d.scopes = analyze_scopes(d);

    auto report = validate_binding_marks(d);
    if (!report.ok) {
        const auto& v = report.violations.front();
        std::string path;
        for (const auto& n : v.path)
            path += (path.empty() ? "" : " -> ") + n;
        throw BindingError("node '" + v.node + "': variable '" + v.variable + "' may be unbound (path " + path +
                           ")");
    }
    return d;
}

StoryDiagram load_story_diagram(const std::string& path)
{
    return story_diagram_from_json(parse_json(read_text_file(path)));
}

json story_diagram_to_json(const StoryDiagram& d)
{
    json params = json::array();
    for (const auto& p : d.params)
        params.push_back({{"name", p.name}, {"type", p.type}});
    json patterns = json::array();
    for (const auto& [node, p] : d.patterns) {
        json vars = json::array();
        for (const auto& [elem, name] : p.var_names) {
            json v = {{"elem", elem}, {"name", name}};
            if (p.rule.lhs.has_node(elem) && p.bound_vars.count(name))
                v["bound"] = true;
            vars.push_back(v);
        }
        patterns.push_back({{"node", node}, {"rule", rule_to_json(p.rule)}, {"vars", vars}});
    }
    return {{"typegraph", type_graph_to_json(*d.model_types)},
            {"cfg", graph_to_json(d.cfg)},
            {"params", params},
            {"patterns", patterns}};
}

} // namespace sdm
