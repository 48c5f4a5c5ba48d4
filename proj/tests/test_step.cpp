#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "random_diagrams.hpp"
#include "sdm/step.hpp"

using namespace sdm;
using namespace sdm::testing;

namespace {

std::set<std::string> names(const ScopeInstance& s)
{
    std::set<std::string> out;
    for (const auto& [n, b] : s.bindings)
        out.insert(n);
    return out;
}

std::size_t count_type(const TypedGraph& g, const std::string& type)
{
    std::size_t k = 0;
    for (const auto& [id, n] : g.nodes())
        k += n.type == type;
    return k;
}

std::size_t count_edges(const TypedGraph& g, const std::string& type)
{
    std::size_t k = 0;
    for (const auto& [id, e] : g.edges())
        k += e.type == type;
    return k;
}

void check_state_invariants(const Configuration& c)
{
    auto g = c.state.to_graph(*c.diagram);
    CHECK(validate_typing(g, *state_type_graph()).ok());
    CHECK(count_type(g, "PositionToken") == 1);
    CHECK((count_edges(g, "at") == 1) == (c.status == Status::running || c.status == Status::terminated ||
                                           c.status == Status::nonterminating));
    if (c.status == Status::error)
        CHECK_FALSE(c.state.token);
    // each binding: one scope, one variable, one value
    for (const auto& [id, n] : g.nodes()) {
        if (n.type != "VariableBinding")
            continue;
        std::map<std::string, int> out;
        for (const auto& e : g.out_edges(id))
            ++out[g.edge(e).type];
        CHECK(out == std::map<std::string, int>{{"bindingScope", 1}, {"boundVariable", 1}, {"value", 1}});
    }
    if (c.options.strategy == Strategy::conservative)
        for (const auto& s : c.state.scopes)
            for (const auto& [name, b] : s.bindings)
                CHECK_MESSAGE(c.model.has_node(b.model_node), "dangling binding " << name);
}

} // namespace

TEST_CASE("initialize")
{
    SUBCASE("minimal")
    {
        auto c = start("minimal.json", "list1.json", "n0");
        CHECK(c.state.token == NodeId("story"));
        REQUIRE(c.state.scopes.size() == 1);
        CHECK(c.state.current().bindings.size() == 1);
        CHECK(c.state.current().bindings.at("this").model_node == "n0");
        CHECK(c.status == Status::running);
    }
    SUBCASE("DeleteNextObject")
    {
        auto c = start("dno.json", "list3.json", "n0");
        CHECK(c.state.token == NodeId("c1"));
        CHECK(names(c.state.current()) == std::set<std::string>{"this"});
    }
    SUBCASE("bad this")
    {
        auto d = diagram("loop.json");
        CHECK_THROWS_AS(initialize(d, model(*d, "inventory5.json"), "i0"), ExecError);
        CHECK_THROWS_AS(initialize(d, model(*d, "inventory5.json"), "nope"), ExecError);
        auto m = diagram("minimal.json");
        CHECK_THROWS_AS(initialize(m, model(*d, "inventory5.json"), "this"), ExecError);
    }
}

TEST_CASE("invoke_pattern")
{
    SUBCASE("empty effect")
    {
        auto c = start("minimal.json", "list1.json", "n0");
        auto before = c.model;
        auto r = invoke_pattern(c);
        CHECK(r.matched);
        CHECK(r.constructed.empty());
        CHECK(r.destructed.empty());
        CHECK(c.model == before);
    }
    SUBCASE("deleting next")
    {
        auto c = start("dno.json", "list3.json", "n0");
        auto r = invoke_pattern(c);
        REQUIRE(r.matched);
        CHECK(r.destructed == std::set<std::string>{"next"});
        CHECK(r.constructed == std::set<std::string>{"nextNext"});
        CHECK_FALSE(c.model.has_node("n1"));
        CHECK(c.model.edge_count() == 1);
    }
    SUBCASE("creating newNext")
    {
        auto c = start("dno.json", "list1.json", "n0");
        step(c);  // c1 fails
        step(c);  // c2 fails
        REQUIRE(c.state.token == NodeId("j"));
        auto r = invoke_pattern(c);
        REQUIRE(r.matched);
        CHECK(r.constructed == std::set<std::string>{"newNext"});
        CHECK(r.created.size() == 1);
    }
    SUBCASE("no match leaves the model alone")
    {
        auto c = start("seqfail.json", "list1.json", "n0");
        step(c);
        auto before = c.model;
        CHECK_FALSE(invoke_pattern(c).matched);
        CHECK(c.model == before);
    }
}

TEST_CASE("step")
{
    SUBCASE("minimal")
    {
        auto c = start("minimal.json", "list1.json", "n0");
        auto r = step(c);
        CHECK(r.outcome == "matched");
        CHECK(c.state.token == NodeId("stop"));
        CHECK(c.status == Status::running);
        CHECK(step(c).outcome == "terminated");
        CHECK(c.status == Status::terminated);
        CHECK_THROWS_AS(step(c), ExecError);
    }
    SUBCASE("sequential failure detaches the token")
    {
        auto c = start("seqfail.json", "list1.json", "n0");
        step(c);
        auto r = step(c);
        CHECK(r.outcome == "failed");
        CHECK(c.status == Status::error);
        CHECK(c.failed_node == NodeId("s2"));
        CHECK_FALSE(c.state.token);
        CHECK(count_edges(c.state.to_graph(*c.diagram), "at") == 0);
    }
    SUBCASE("outer conditional succeeds")
    {
        auto c = start("dno.json", "list3.json", "n0");
        step(c);
        CHECK(c.state.token == NodeId("stop1"));
        REQUIRE(c.state.scopes.size() == 2);
        CHECK(c.state.current().tmpl == c.diagram->scopes.branches.at("c1").at("success"));
        // next was deleted by the match, so only the survivors stay bound
        CHECK(names(c.state.current()) == std::set<std::string>{"nextNext", "this"});
        CHECK(names(c.state.scopes[0]) == std::set<std::string>{"this"});
    }
    SUBCASE("loop head re-entry uses a fresh instance")
    {
        auto c = start("loop.json", "inventory5.json", "this");
        std::set<InstanceId> seen;
        while (c.status == Status::running) {
            if (c.state.token == NodeId("h")) {
                CHECK(c.state.scopes.size() == 1);
                CHECK(names(c.state.current()) == std::set<std::string>{"this"});
            }
            auto r = step(c);
            if (r.node == "h") {
                CHECK(seen.insert(c.state.current().id).second);
            }
        }
        CHECK(seen.size() == 6);
    }
}

TEST_CASE("exit_branch_join")
{
    SUBCASE("untouched branch")
    {
        for (auto s : {Strategy::conservative, Strategy::optimistic}) {
            auto c = start("join.json", "list1.json", "n0", {s});
            // s0 fails on a single node, so drive the join by hand
            c.state.scopes.push_back(ScopeInstance{99, 1, c.state.current().bindings});
            auto before = c.state.scopes[0].bindings;
            exit_branch_join(c);
            CHECK(c.state.scopes.size() == 1);
            CHECK(c.state.scopes[0].bindings == before);
        }
    }
    SUBCASE("deleted in the branch")
    {
        for (auto s : {Strategy::conservative, Strategy::optimistic}) {
            auto c = start("join.json", "list3.json", "n0", {s});
            step(c);  // s0 binds n = n1
            step(c);  // c deletes n1
            REQUIRE(c.state.token == NodeId("d"));
            CHECK_FALSE(c.state.current().bindings.count("n"));
            step(c);  // d, then join
            REQUIRE(c.state.scopes.size() == 1);
            const auto& root = c.state.scopes[0].bindings;
            if (s == Strategy::conservative) {
                CHECK_FALSE(root.count("n"));
                CHECK(root.count("m") == 0);  // branch-local
            } else {
                REQUIRE(root.count("n"));
                CHECK_FALSE(c.model.has_node(root.at("n").model_node));
                CHECK(root.count("m") == 1);
            }
        }
    }
}

TEST_CASE("run")
{
    SUBCASE("minimal")
    {
        auto res = run(start("minimal.json", "list1.json", "n0"));
        CHECK(res.final.status == Status::terminated);
        CHECK(res.trace.size() == 2);
    }
    SUBCASE("DeleteNextObject on lists of length 1 to 5")
    {
        for (int k = 1; k <= 5; ++k) {
            auto c = start("dno.json", "list" + std::to_string(k) + ".json", "n0");
            auto initial = c.model;
            auto res = run(c);
            CAPTURE(k);
            REQUIRE(res.final.status == Status::terminated);
            const auto& m = res.final.model;
            CHECK(successors(m, "n0") == 1);
            CHECK(replay_trace(*c.diagram, initial, res.trace) == m);
            if (k >= 3) {
                CHECK(m.node_count() == initial.node_count() - 1);
                CHECK(res.trace.back().node == "stop1");
            } else {
                CHECK(res.trace.back().node == "stop2");
                CHECK(res.trace[res.trace.size() - 2].invocation.created.size() == 1);
                CHECK(m.node_count() == 2);
            }
        }
    }
    SUBCASE("loop")
    {
        auto c = start("loop.json", "inventory5.json", "this");
        auto res = run(c);
        CHECK(res.final.status == Status::terminated);
        CHECK(count_type(res.final.model, "Item") == 0);
        CHECK(count_type(res.final.model, "Log") == 5);
        auto cut = run(c, 1);
        CHECK(cut.final.status == Status::nonterminating);
        CHECK(cut.trace.size() == 1);
        CHECK_THROWS_AS(run(c, 0), std::invalid_argument);
    }
    SUBCASE("join policies")
    {
        auto cons = run(start("join.json", "list3.json", "n0", {Strategy::conservative}));
        CHECK(cons.final.status == Status::terminated);
        auto opt = run(start("join.json", "list3.json", "n0", {Strategy::optimistic}));
        CHECK(opt.final.status == Status::error);
        CHECK(opt.final.failed_node == NodeId("j"));
    }
}

// ---- properties over the fixture corpus -----------------------------------

namespace {

struct Case {
    std::string diagram, model, self;
};

std::vector<Case> corpus()
{
    std::vector<Case> out{{"minimal.json", "list1.json", "n0"},   {"seqfail.json", "list1.json", "n0"},
                          {"seqfail.json", "list2.json", "n0"},   {"twoseq.json", "list1.json", "n0"},
                          {"loop.json", "inventory5.json", "this"}};
    for (int k = 1; k <= 5; ++k)
        for (const char* d : {"dno.json", "join.json"})
            out.push_back({d, "list" + std::to_string(k) + ".json", "n0"});
    return out;
}

} // namespace

TEST_CASE("interpreter properties on fixtures")
{
    for (const auto& cs : corpus())
        for (auto strategy : {Strategy::conservative, Strategy::optimistic})
            for (auto order : {MatchOrder::lex, MatchOrder::random}) {
                CAPTURE(cs.diagram);
                CAPTURE(cs.model);
                RunOptions opts{strategy, order, 7};
                auto c = start(cs.diagram, cs.model, cs.self, opts);
                const auto initial = c.model;

                // determinism
                auto a = run(c), b = run(c);
                CHECK(trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace));
                CHECK(a.final.model == b.final.model);

                // replay, also through the serialized trace
                CHECK(replay_trace(*c.diagram, initial, a.trace) == a.final.model);
                CHECK(replay_trace_jsonl(*c.diagram, initial, trace_to_jsonl(a.trace)) == a.final.model);

                // step-wise invariants, and update order does not matter
                std::mt19937 rng(3);
                while (c.status == Status::running) {
                    auto probe = c;
                    auto r = step(c);
                    check_state_invariants(c);
                    auto ups = binding_updates(probe, r.node, r.invocation);
                    if (ups.size() > 1) {
                        std::vector<std::size_t> perm(ups.size());
                        std::iota(perm.begin(), perm.end(), 0);
                        std::shuffle(perm.begin(), perm.end(), rng);
                        step(probe, perm);
                        CHECK(probe.state.to_graph(*probe.diagram) == c.state.to_graph(*c.diagram));
                        CHECK(probe.model == c.model);
                    }
                    if (r.outcome == "failed" &&
                        c.diagram->classes.classes.at(r.node).kind == NodeKind::sequential) {
                        CHECK(c.status == Status::error);
                        CHECK(c.failed_node == r.node);
                    }
                }
                CHECK(c.model == a.final.model);
            }
}


TEST_CASE("interpreter properties on random diagrams")
{
    auto lang = enumerate_language(syntax_grammar(), 6);
    std::mt19937 rng(2024);
    int loaded = 0, errors = 0, budget = 0;
    for (int round = 0; round < 300; ++round) {
        const auto& cfg = lang.members[std::uniform_int_distribution<std::size_t>(0, lang.members.size() - 1)(rng)];
        auto d = random_diagram(cfg, rng);
        if (!d)
            continue;
        ++loaded;
        std::shared_ptr<const StoryDiagram> cd = d;
        for (int m = 0; m < 2; ++m) {
            auto model = random_list_model(rng);
            for (auto strategy : {Strategy::conservative, Strategy::optimistic}) {
                auto c = initialize(cd, model, "n0", {strategy});
                auto res = run(c, 60);
                CHECK(trace_to_jsonl(res.trace) == trace_to_jsonl(run(c, 60).trace));
                CHECK(replay_trace(*cd, model, res.trace) == res.final.model);
                errors += res.final.status == Status::error;
                budget += res.final.status == Status::nonterminating;
                if (res.final.status == Status::error) {
                    const auto& last = res.trace.back();
                    CHECK(last.outcome == "failed");
                    CHECK(res.final.failed_node == last.node);
                    CHECK(cd->classes.classes.at(last.node).kind == NodeKind::sequential);
                }
                for (std::size_t i = 0; c.status == Status::running && i < 60; ++i) {
                    step(c);
                    check_state_invariants(c);
                }
            }
        }
    }
    CHECK(loaded > 50);
    CHECK(errors > 0);
    MESSAGE("random diagrams: " << loaded << " loaded, " << errors << " errors, " << budget << " budget stops");
}
