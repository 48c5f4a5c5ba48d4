// oracle.cpp

#include "sdm/oracle.hpp"

namespace sdm {

using namespace cfg_types;

bool SemSet::add(const TypedGraph& in, const TypedGraph& out)
{
    if (contains(in, out))
        return false;
    pairs_.push_back({in, out});
    return true;
}

void SemSet::merge(const SemSet& other)
{
    for (const auto& p : other.pairs_)
        add(p.input, p.output);
    incomplete = incomplete || other.incomplete;
    depth_bound = std::max(depth_bound, other.depth_bound);
}

bool SemSet::contains(const TypedGraph& in, const TypedGraph& out) const
{
    for (const auto& p : pairs_)
        if (isomorphic(p.input, in) && isomorphic(p.output, out))
            return true;
    return false;
}

std::vector<TypedGraph> SemSet::outputs() const
{
    std::vector<TypedGraph> out;
    for (const auto& p : pairs_)
        out.push_back(p.output);
    return out;
}

bool applicable(const Rule& r, const TypedGraph& g) { return !find_matches(r, g).empty(); }

SemSet sem_node(const Rule& r, const TypedGraph& g)
{
    SemSet s;
    auto ms = find_matches(r, g);
    if (ms.empty()) {
        s.add(g, g);
        return s;
    }
    for (const auto& m : ms)
        s.add(g, apply_rule(r, m, g).result);
    return s;
}

namespace {

// all graphs reachable from `inputs` through one Sem(r), up to iso
std::vector<TypedGraph> image(const Rule& r, const std::vector<TypedGraph>& inputs)
{
    SemSet acc;
    for (const auto& g : inputs)
        for (const auto& h : sem_node(r, g).outputs())
            acc.add(h, h);
    return acc.outputs();
}

} // namespace

SemSet sem_seq(const std::vector<Rule>& rules, const TypedGraph& g)
{
    if (rules.empty())
        throw std::invalid_argument("sem_seq needs at least one rule");
    std::vector<TypedGraph> cur{g};
    for (const auto& r : rules)
        cur = image(r, cur);
    SemSet s;
    for (const auto& h : cur)
        s.add(g, h);
    return s;
}

SemSet sem_if(const Rule& r1, const Rule& r2, const Rule& r3, const TypedGraph& g)
{
    return applicable(r1, g) ? sem_seq({r1, r2}, g) : sem_seq({r1, r3}, g);
}

namespace {

void unroll_while(const Rule& r1, const Rule& r2, const TypedGraph& input, const TypedGraph& g, std::size_t depth,
                  SemSet& out)
{
    if (!applicable(r1, g)) {
        out.add(input, g);  // Sem(n1) = {(G,G)}
        return;
    }
    if (depth == 0) {
        out.incomplete = true;
        return;
    }
    for (const auto& h : image(r2, image(r1, {g})))
        unroll_while(r1, r2, input, h, depth - 1, out);
}

} // namespace

SemSet sem_while(const Rule& r1, const Rule& r2, const TypedGraph& g, std::size_t depth_bound)
{
    SemSet s;
    s.depth_bound = depth_bound;
    unroll_while(r1, r2, g, g, depth_bound, s);
    return s;
}

// ---- whole diagrams -------------------------------------------------------

namespace {

struct Denoter {
    const StoryDiagram& d;
    const OracleOptions& options;
    bool incomplete = false;

    NodeId follow(const NodeId& n, const std::string& type) const
    {
        for (const auto& e : d.cfg.out_edges(n))
            if (d.cfg.edge(e).type == type)
                return d.cfg.edge(e).trg;
        throw std::logic_error("missing " + type + " edge at " + n);
    }

    // final graphs reachable from (node, g)
    void run(const NodeId& node, const TypedGraph& g, std::size_t fuel, SemSet& out)
    {
        if (d.cfg.node(node).type == stop_node) {
            out.add(g, g);
            return;
        }
        const auto& rule = d.patterns.at(node).rule;
        const auto kind = d.classes.classes.at(node).kind;
        if (kind == NodeKind::loop_head_failure)
            throw OracleRefusal("loop at '" + node + "' recurs along failure, which the denotational formulas do not cover");
        if (kind == NodeKind::sequential) {
            for (const auto& h : sem_node(rule, g).outputs())
                run(follow(node, next), h, fuel, out);
            return;
        }
        bool ok = applicable(rule, g);
        if (kind == NodeKind::loop_head_success && ok) {
            if (fuel == 0) {
                incomplete = true;
                return;
            }
            --fuel;
        }
        if (!ok) {
            run(follow(node, failure), g, fuel, out);
            return;
        }
        for (const auto& h : sem_node(rule, g).outputs())
            run(follow(node, success), h, fuel, out);
    }
};

} // namespace

SemSet sem_diagram(const StoryDiagram& d, const TypedGraph& g, const OracleOptions& options)
{
    Denoter den{d, options};
    SemSet finals;
    den.run(d.first_node(), g, options.loop_bound, finals);
    SemSet s;
    for (const auto& h : finals.outputs())
        s.add(g, h);
    s.incomplete = den.incomplete;
    s.depth_bound = options.loop_bound;
    return s;
}

// ---- cross-check ----------------------------------------------------------

OracleVerdict cross_check(const StoryDiagram& d, const TypedGraph& model, const NodeId& this_node, const Trace& trace,
                          Status final_status, const OracleOptions& options)
{
    if (model.node_count() > options.max_model_nodes)
        throw OracleRefusal("model has " + std::to_string(model.node_count()) + " nodes; the oracle accepts at most " +
                            std::to_string(options.max_model_nodes));
    if (!model.has_node(this_node))
        throw ExecError("model has no node '" + this_node + "'");

    OracleVerdict v;
    TypedGraph g = model;
    FreshIds ids;
    for (const auto& r : trace) {
        const std::string at = "step " + std::to_string(r.step) + " (" + r.node + "): ";
        if (r.outcome == "terminated")
            continue;
        const auto& pat = d.patterns.at(r.node);
        const auto kind = d.classes.classes.at(r.node).kind;
        if (r.outcome == "matched") {
            if (g.node_count() > options.max_step_nodes) {
                v.incomplete = true;
                v.notes.push_back(at + "working graph has " + std::to_string(g.node_count()) +
                                  " nodes; remaining steps not checked");
                break;
            }
            auto next = replay_step(d, g, r, ids);
            auto sem = sem_node(pat.rule, g);
            if (sem.contains(g, next)) {
                v.notes.push_back(at + "pair in Sem(" + r.node + ")");
            } else {
                v.agree = false;
                v.notes.push_back(at + "DISAGREEMENT: step result is not in Sem(" + r.node + ")");
            }
            g = std::move(next);
            continue;
        }
        // failed invocation
        bool free_match = applicable(pat.rule, g);
        if (kind == NodeKind::sequential) {
            v.divergent = true;
            v.notes.push_back(at + divergence_abrupt);
            if (free_match)
                v.notes.push_back(at + divergence_bindings);
        } else if (free_match) {
            v.divergent = true;
            v.notes.push_back(at + divergence_bindings);
        } else {
            v.notes.push_back(at + "no match either way; Sem(" + r.node + ") = {(G,G)}");
        }
    }

    if (v.incomplete) {
        v.notes.push_back("composite check skipped: per-step check was cut off");
        return v;
    }
    if (v.divergent) {
        v.notes.push_back("composite check skipped: the run left the semantics' common ground");
        return v;
    }
    if (final_status != Status::terminated) {
        v.notes.push_back(std::string("composite check skipped: run ended ") + to_string(final_status));
        return v;
    }
    SemSet sem;
    try {
        sem = sem_diagram(d, model, options);
    } catch (const OracleRefusal& e) {
        v.incomplete = true;
        v.notes.push_back(std::string("composite check skipped: ") + e.what());
        return v;
    }
    v.incomplete = sem.incomplete;
    if (sem.contains(model, g)) {
        v.notes.push_back("(initial, final) pair in Sem of the diagram (" + std::to_string(sem.size()) +
                          " pairs)");
    } else if (sem.incomplete) {
        v.notes.push_back("(initial, final) pair not found, but the loop unrolling was cut off; inconclusive");
    } else {
        v.agree = false;
        v.notes.push_back("DISAGREEMENT: (initial, final) pair is not in Sem of the diagram");
    }
    return v;
}

} // namespace sdm
