// step.cpp

#include "sdm/step.hpp"

#include <algorithm>
#include <sstream>

namespace sdm {

using namespace cfg_types;

const char* to_string(Strategy s) { return s == Strategy::conservative ? "conservative" : "optimistic"; }

const char* to_string(MatchOrder m) { return m == MatchOrder::lex ? "lex" : "random"; }

const char* to_string(Status s)
{
    switch (s) {
    case Status::running:
        return "running";
    case Status::terminated:
        return "terminated";
    case Status::error:
        return "error";
    case Status::nonterminating:
        return "nonterminating";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s)
{
    if (s == "conservative")
        return Strategy::conservative;
    if (s == "optimistic")
        return Strategy::optimistic;
    throw std::invalid_argument("unknown strategy '" + s + "'");
}

MatchOrder match_order_from_string(const std::string& s)
{
    if (s == "lex")
        return MatchOrder::lex;
    if (s == "random")
        return MatchOrder::random;
    throw std::invalid_argument("unknown match order '" + s + "'");
}

// ---- state graph ----------------------------------------------------------

TypeGraphPtr state_type_graph()
{
    static const TypeGraphPtr tg = [] {
        auto t = std::make_shared<TypeGraph>("SDM_State");
        t->add_node_type(abstract_node);
        for (const char* n : {cf_node, start_node, stop_node})
            t->add_node_type(n, std::string(abstract_node));
        for (const char* n : {"PositionToken", "ScopeTemplate", "ScopeInstance", "CFVariable", "VariableBinding",
                              "Variable", "PatternInvocation"})
            t->add_node_type(n);
        for (const char* e : {next, success, failure})
            t->add_edge_type(e, abstract_node, abstract_node);
        t->add_edge_type("at", "PositionToken", abstract_node);
        t->add_edge_type("contains", "ScopeTemplate", abstract_node);
        t->add_edge_type("parentScope", "ScopeTemplate", "ScopeTemplate");
        t->add_edge_type("declares", "ScopeTemplate", "CFVariable");
        t->add_edge_type("instanceOf", "ScopeInstance", "ScopeTemplate");
        t->add_edge_type("parentInstance", "ScopeInstance", "ScopeInstance");
        t->add_edge_type("bindingScope", "VariableBinding", "ScopeInstance");
        t->add_edge_type("boundVariable", "VariableBinding", "CFVariable");
        t->add_edge_type("value", "VariableBinding", "Variable");
        t->add_edge_type("invocationOf", "PatternInvocation", cf_node);
        t->add_edge_type("constructedVariables", "PatternInvocation", "CFVariable");
        t->add_edge_type("destructedVariables", "PatternInvocation", "CFVariable");
        t->check();
        return t;
    }();
    return tg;
}

TypedGraph ExecState::to_graph(const StoryDiagram& d) const
{
    TypedGraph g(state_type_graph());
    auto link = [&](const std::string& type, const std::string& s, const std::string& t) {
        g.add_edge(s + "|" + type + "|" + t, type, s, t);
    };
    auto cfg_id = [](const NodeId& n) { return "cfg:" + n; };
    auto tmpl_id = [](TemplateId t) { return "tmpl:" + std::to_string(t); };
    auto var_id = [](std::size_t v) { return "cfvar:" + std::to_string(v); };
    auto scope_id = [](InstanceId i) { return "scope:" + std::to_string(i); };

    for (const auto& [id, n] : d.cfg.nodes())
        g.add_node(cfg_id(id), n.type);
    for (const auto& [id, e] : d.cfg.edges())
        g.add_edge("cfg:" + id, e.type, cfg_id(e.src), cfg_id(e.trg));

    const auto& tree = d.scopes;
    for (const auto& t : tree.templates)
        g.add_node(tmpl_id(t.id), "ScopeTemplate");
    for (const auto& t : tree.templates) {
        if (t.parent)
            link("parentScope", tmpl_id(t.id), tmpl_id(*t.parent));
    }
    for (const auto& [n, t] : tree.placement)
        link("contains", tmpl_id(t), cfg_id(n));
    for (std::size_t v = 0; v < tree.variables.size(); ++v) {
        g.add_node(var_id(v), "CFVariable");
        link("declares", tmpl_id(tree.variables[v].scope), var_id(v));
    }

    g.add_node("token", "PositionToken");
    if (token)
        link("at", "token", cfg_id(*token));

    for (std::size_t i = 0; i < scopes.size(); ++i) {
        const auto& s = scopes[i];
        g.add_node(scope_id(s.id), "ScopeInstance");
        link("instanceOf", scope_id(s.id), tmpl_id(s.tmpl));
        if (i > 0)
            link("parentInstance", scope_id(s.id), scope_id(scopes[i - 1].id));
        for (const auto& [name, b] : s.bindings) {
            auto bid = "binding:" + std::to_string(s.id) + ":" + name;
            auto vid = "var:" + b.model_node;
            g.add_node(bid, "VariableBinding");
            if (!g.has_node(vid))
                g.add_node(vid, "Variable");
            link("bindingScope", bid, scope_id(s.id));
            link("boundVariable", bid, var_id(b.variable));
            link("value", bid, vid);
        }
    }
    for (const auto& [node, rec] : invocations) {
        auto iid = "inv:" + node;
        g.add_node(iid, "PatternInvocation");
        link("invocationOf", iid, cfg_id(node));
        const auto t = tree.placement.at(node);
        for (const auto& v : rec.constructed)
            if (auto idx = tree.resolve(t, v))
                link("constructedVariables", iid, var_id(*idx));
        for (const auto& v : rec.destructed)
            if (auto idx = tree.resolve(t, v))
                link("destructedVariables", iid, var_id(*idx));
    }
    return g;
}

// ---- initialization and invocation ----------------------------------------

Configuration initialize(std::shared_ptr<const StoryDiagram> d, TypedGraph model, const NodeId& this_node,
                         const RunOptions& options)
{
    if (!d)
        throw ExecError("no diagram");
    if (model.type_graph_name() != d->model_types->name())
        throw ExecError("model is typed over '" + model.type_graph_name() + "', diagram expects '" +
                        d->model_types->name() + "'");
    const auto& param = d->params.at(0);
    if (!model.has_node(this_node))
        throw ExecError("model has no node '" + this_node + "'");
    if (!d->model_types->conforms(model.node(this_node).type, param.type))
        throw ExecError("node '" + this_node + "' has type '" + model.node(this_node).type + "', expected '" +
                        param.type + "'");

    Configuration c;
    c.diagram = d;
    c.model = std::move(model);
    c.options = options;
    c.rng.seed(options.seed);
    ScopeInstance root;
    root.id = c.state.next_instance++;
    root.tmpl = 0;
    root.bindings[param.name] = Binding{*d->scopes.resolve(0, param.name), this_node};
    c.state.scopes.push_back(std::move(root));
    c.state.token = d->first_node();
    return c;
}

PatternInvocationResult invoke_pattern(Configuration& c)
{
    if (c.status != Status::running || !c.state.token)
        throw ExecError("invoke_pattern on a configuration that is not running");
    const auto& d = *c.diagram;
    const NodeId node = *c.state.token;
    const auto& pat = d.patterns.at(node);
    const auto& cur = c.state.current();
    const auto& tg = *c.model.type_graph();

    PatternInvocationResult out;
    PartialAssignment partial;
    for (const auto& [l, n] : pat.rule.lhs.nodes()) {
        const auto& name = pat.var_of(l);
        auto it = cur.bindings.find(name);
        if (it == cur.bindings.end()) {
            // a bound mark whose binding vanished through an alias: nothing
            // can match
            if (pat.bound_vars.count(name))
                return out;
            continue;
        }
        const auto& mid = it->second.model_node;
        if (!c.model.has_node(mid) || !tg.conforms(c.model.node(mid).type, n.type))
            return out;  // dangling binding
        partial[l] = mid;
    }

    std::vector<Match> ms;
    try {
        ms = find_matches(pat.rule, c.model, partial);
    } catch (const RuleError&) {
        return out;  // two variables bound to one object
    }
    if (ms.empty())
        return out;
    std::size_t pick = 0;
    if (c.options.order == MatchOrder::random)
        pick = std::uniform_int_distribution<std::size_t>(0, ms.size() - 1)(c.rng);
    out.matched = true;
    out.match = ms[pick];

    const auto& m = out.match.morphism;
    auto deleted = pat.deleted_vars();
    for (const auto& [l, h] : m.nodes) {
        const auto& name = pat.var_of(l);
        out.nodes.push_back({name, h});
        if (!pat.rule.map.nodes.count(l))
            out.deleted_nodes.insert(h);
        if (deleted.count(name))
            out.destructed.insert(name);
        else if (!partial.count(l))
            out.constructed.insert(name);
    }
    for (const auto& [l, h] : m.edges)
        out.edges.push_back({l, h});

    auto res = apply_rule(pat.rule, out.match, c.model, c.ids);
    for (const auto& name : pat.created_vars()) {
        auto r = *pat.rhs_node(name);
        out.created.push_back({name, res.rhs_embedding.nodes.at(r)});
        out.constructed.insert(name);
    }
    c.model = std::move(res.result);
    ++c.model_rev;

    if (c.options.strategy == Strategy::conservative)
        for (const auto& [name, b] : cur.bindings)
            if (out.deleted_nodes.count(b.model_node) && !out.constructed.count(name))
                out.destructed.insert(name);
    std::sort(out.nodes.begin(), out.nodes.end(),
              [](const VarAssignment& a, const VarAssignment& b) { return a.var < b.var; });
    return out;
}

std::vector<BindingUpdate> binding_updates(const Configuration& c, const NodeId& node,
                                           const PatternInvocationResult& r)
{
    std::vector<BindingUpdate> out;
    if (!r.matched)
        return out;
    const auto& tree = c.diagram->scopes;
    const auto t = tree.placement.at(node);
    for (const auto& v : r.destructed)
        out.push_back({v, std::nullopt});
    auto bind = [&](const VarAssignment& a) {
        if (!r.constructed.count(a.var))
            return;
        auto idx = tree.resolve(t, a.var);
        if (!idx)
            throw ExecError("variable '" + a.var + "' at node '" + node + "' has no declaration");
        out.push_back({a.var, Binding{*idx, a.model_id}});
    };
    for (const auto& a : r.nodes)
        bind(a);
    for (const auto& a : r.created)
        bind(a);
    return out;
}

void apply_binding_update(ScopeInstance& s, const BindingUpdate& u)
{
    if (u.value)
        s.bindings[u.var] = *u.value;
    else
        s.bindings.erase(u.var);
}

// ---- stepping -------------------------------------------------------------

namespace {

NodeId follow(const TypedGraph& cfg, const NodeId& node, const std::string& type)
{
    for (const auto& e : cfg.out_edges(node))
        if (cfg.edge(e).type == type)
            return cfg.edge(e).trg;
    throw ExecError("node '" + node + "' has no outgoing " + type + " edge");
}

void apply_updates(ScopeInstance& s, const std::vector<BindingUpdate>& ups, const std::vector<std::size_t>& order)
{
    if (order.empty()) {
        for (const auto& u : ups)
            apply_binding_update(s, u);
        return;
    }
    if (order.size() != ups.size())
        throw std::invalid_argument("update order has the wrong length");
    for (auto i : order)
        apply_binding_update(s, ups.at(i));
}

// Conservative deletion: bindings to deleted objects vanish from every
// other active instance too.
void purge(Configuration& c, const std::set<NodeId>& deleted, const ScopeInstance* except,
           std::vector<std::string>& events)
{
    if (c.options.strategy != Strategy::conservative || deleted.empty())
        return;
    for (auto& s : c.state.scopes) {
        if (&s == except)
            continue;
        for (auto it = s.bindings.begin(); it != s.bindings.end();) {
            if (deleted.count(it->second.model_node)) {
                events.push_back("purge " + std::to_string(s.id) + " " + it->first);
                it = s.bindings.erase(it);
            } else {
                ++it;
            }
        }
    }
}

} // namespace

void exit_branch_join(Configuration& c, std::vector<std::string>* events)
{
    auto& scopes = c.state.scopes;
    if (scopes.size() < 2)
        throw ExecError("no branch scope to leave");
    auto branch = std::move(scopes.back());
    scopes.pop_back();
    auto& parent = scopes.back();
    auto note = [&](const std::string& e) {
        if (events)
            events->push_back(e);
    };
    note("exit " + std::to_string(branch.id));
    if (c.options.strategy == Strategy::conservative) {
        for (auto it = parent.bindings.begin(); it != parent.bindings.end();) {
            auto b = branch.bindings.find(it->first);
            if (b == branch.bindings.end() || !(b->second == it->second)) {
                note("drop " + std::to_string(parent.id) + " " + it->first);
                it = parent.bindings.erase(it);
            } else {
                ++it;
            }
        }
    } else {
        for (const auto& [name, b] : branch.bindings) {
            auto it = parent.bindings.find(name);
            if (it == parent.bindings.end() || !(it->second == b)) {
                note("adopt " + std::to_string(parent.id) + " " + name);
                parent.bindings[name] = b;
            }
        }
    }
}

StepRecord step(Configuration& c, const std::vector<std::size_t>& order)
{
    if (c.status != Status::running || !c.state.token)
        throw ExecError("step on a configuration that is not running");
    const auto& d = *c.diagram;
    const NodeId node = *c.state.token;
    StepRecord rec;
    rec.step = c.steps++;
    rec.node = node;
    rec.scope = c.state.current().id;

    if (d.cfg.node(node).type == stop_node) {
        c.status = Status::terminated;
        rec.outcome = "terminated";
        rec.model_rev = c.model_rev;
        return rec;
    }

    rec.rule = d.patterns.at(node).rule.name;
    auto r = invoke_pattern(c);
    rec.outcome = r.matched ? "matched" : "failed";
    c.state.invocations[node] = InvocationRecord{r.constructed, r.destructed};
    auto ups = binding_updates(c, node, r);

    NodeId target;
    if (d.classes.classes.at(node).kind == NodeKind::sequential) {
        if (!r.matched) {
            c.state.token.reset();
            c.status = Status::error;
            c.failed_node = node;
            rec.invocation = std::move(r);
            rec.model_rev = c.model_rev;
            return rec;
        }
        apply_updates(c.state.current(), ups, order);
        purge(c, r.deleted_nodes, &c.state.current(), rec.scope_events);
        target = follow(d.cfg, node, next);
    } else {
        const std::string polarity = r.matched ? success : failure;
        ScopeInstance child;
        child.id = c.state.next_instance++;
        child.tmpl = d.scopes.branches.at(node).at(polarity);
        child.bindings = c.state.current().bindings;
        apply_updates(child, ups, order);
        purge(c, r.deleted_nodes, nullptr, rec.scope_events);
        rec.scope_events.push_back("enter " + std::to_string(child.id) + " " + node + "/" + polarity);
        c.state.scopes.push_back(std::move(child));
        target = follow(d.cfg, node, polarity);
    }

    c.state.token = target;
    const auto want = d.scopes.placement.at(target);
    while (c.state.current().tmpl != want) {
        if (c.state.scopes.size() == 1)
            throw ExecError("control flow into '" + target + "' leaves the scope tree");
        exit_branch_join(c, &rec.scope_events);
    }
    rec.invocation = std::move(r);
    rec.model_rev = c.model_rev;
    return rec;
}

RunResult run(Configuration c, std::size_t max_steps)
{
    if (max_steps == 0)
        throw std::invalid_argument("max_steps must be positive");
    RunResult out;
    while (c.status == Status::running && c.steps < max_steps)
        out.trace.push_back(step(c));
    if (c.status == Status::running)
        c.status = Status::nonterminating;
    out.final = std::move(c);
    return out;
}

// ---- traces ---------------------------------------------------------------

namespace {

json assignments(const std::vector<VarAssignment>& v, const char* key, const char* val)
{
    json arr = json::array();
    for (const auto& a : v)
        arr.push_back({{key, a.var}, {val, a.model_id}});
    return arr;
}

std::vector<VarAssignment> assignments_from(const json& arr, const char* key, const char* val)
{
    std::vector<VarAssignment> out;
    for (const auto& a : arr)
        out.push_back({a.at(key).get<std::string>(), a.at(val).get<std::string>()});
    return out;
}

} // namespace

json step_record_to_json(const StepRecord& r)
{
    const auto& inv = r.invocation;
    return {{"step", r.step},
            {"node", r.node},
            {"outcome", r.outcome},
            {"rule", r.rule},
            {"scope", r.scope},
            {"match", assignments(inv.nodes, "var", "model_node")},
            {"match_edges", assignments(inv.edges, "elem", "model_edge")},
            {"created", assignments(inv.created, "var", "model_node")},
            {"constructed", inv.constructed},
            {"destructed", inv.destructed},
            {"scope_events", r.scope_events},
            {"model_rev", r.model_rev}};
}

std::string trace_to_jsonl(const Trace& t)
{
    std::string out;
    for (const auto& r : t)
        out += step_record_to_json(r).dump() + "\n";
    return out;
}

TypedGraph replay_step(const StoryDiagram& d, const TypedGraph& g, const StepRecord& r, FreshIds& ids)
{
    if (r.outcome != "matched")
        return g;
    const auto& pat = d.patterns.at(r.node);
    const std::string at = "step " + std::to_string(r.step) + ": ";
    PartialAssignment partial;
    Morphism want;
    for (const auto& a : r.invocation.nodes) {
        auto l = pat.lhs_node(a.var);
        if (!l)
            throw ExecError(at + "unknown variable '" + a.var + "'");
        partial[*l] = a.model_id;
        want.nodes[*l] = a.model_id;
    }
    for (const auto& a : r.invocation.edges)
        want.edges[a.var] = a.model_id;
    std::vector<Match> ms;
    try {
        ms = find_matches(pat.rule, g, partial);
    } catch (const RuleError& e) {
        throw ExecError(at + e.what());
    }
    auto it = std::find_if(ms.begin(), ms.end(), [&](const Match& m) {
        return m.morphism.nodes == want.nodes && m.morphism.edges == want.edges;
    });
    if (it == ms.end())
        throw ExecError(at + "recorded match does not apply");
    auto res = apply_rule(pat.rule, *it, g, ids);
    for (const auto& a : r.invocation.created) {
        auto rn = pat.rhs_node(a.var);
        if (!rn || res.rhs_embedding.nodes.at(*rn) != a.model_id)
            throw ExecError(at + "created ids differ");
    }
    return std::move(res.result);
}

TypedGraph replay_trace(const StoryDiagram& d, const TypedGraph& initial, const Trace& t)
{
    TypedGraph g = initial;
    FreshIds ids;
    for (const auto& r : t)
        g = replay_step(d, g, r, ids);
    return g;
}

TypedGraph replay_trace_jsonl(const StoryDiagram& d, const TypedGraph& initial, const std::string& jsonl)
{
    Trace t;
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto j = parse_json(line);
        StepRecord r;
        try {
            r.step = j.at("step").get<std::size_t>();
            r.node = j.at("node").get<std::string>();
            r.outcome = j.at("outcome").get<std::string>();
            r.invocation.nodes = assignments_from(j.at("match"), "var", "model_node");
            r.invocation.edges = assignments_from(j.at("match_edges"), "elem", "model_edge");
            r.invocation.created = assignments_from(j.at("created"), "var", "model_node");
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad trace record: ") + e.what());
        }
        t.push_back(std::move(r));
    }
    return replay_trace(d, initial, t);
}

} // namespace sdm
