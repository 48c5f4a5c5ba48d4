// cli.cpp

#include "sdm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <ostream>

#include "sdm/oracle.hpp"
#include "sdm/rule_io.hpp"

namespace sdm::cli {

using namespace cfg_types;

void check(const CliConfig& c)
{
    if (c.order == MatchOrder::random && !c.seed)
        throw UsageError("--match-order random needs --seed");
    if (c.order == MatchOrder::lex && c.seed)
        throw UsageError("--seed only applies to --match-order random");
    if (c.max_steps == 0)
        throw UsageError("--max-steps must be positive");
    if ((c.subcommand == "run" || c.subcommand == "oracle") && c.this_id.empty())
        throw UsageError("--this is required");
}

namespace {

// maps the library's exceptions to exit codes
int guarded(std::ostream& err, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const InvalidCfgError& e) {
        err << e.what() << '\n';
        return exit_invalid;
    } catch (const BindingError& e) {
        err << "binding marks: " << e.what() << '\n';
        return exit_invalid;
    } catch (const DiagramError& e) {
        err << "invalid diagram: " << e.what() << '\n';
        return exit_invalid;
    } catch (const CfgError& e) {
        err << "invalid control flow graph: " << e.what() << '\n';
        return exit_invalid;
    } catch (const RuleError& e) {
        err << "invalid pattern: " << e.what() << '\n';
        return exit_invalid;
    } catch (const ParseError& e) {
        err << "cannot load input: " << e.what() << '\n';
        return exit_io;
    } catch (const GraphError& e) {
        err << "malformed graph: " << e.what() << '\n';
        return exit_io;
    } catch (const ExecError& e) {
        err << "bad input: " << e.what() << '\n';
        return exit_io;
    } catch (const OracleRefusal& e) {
        err << "oracle refused: " << e.what() << '\n';
        return exit_oracle_refused;
    }
}

std::shared_ptr<const StoryDiagram> load_diagram(const std::string& path)
{
    return std::make_shared<const StoryDiagram>(load_story_diagram(path));
}

Configuration prepare(const CliConfig& c, std::shared_ptr<const StoryDiagram>& d, TypedGraph& model)
{
    check(c);
    if (c.inputs.size() != 2)
        throw UsageError("expected <diagram> <model>");
    d = load_diagram(c.inputs[0]);
    model = parse_graph(read_text_file(c.inputs[1]), d->model_types);
    return initialize(d, model, c.this_id, {c.strategy, c.order, c.seed.value_or(0)});
}

std::string roles_text(const std::map<NodeId, NodeId>& roles)
{
    std::string s;
    for (const auto& [role, node] : roles)
        s += " " + role + "=" + node;
    return s;
}

} // namespace

int cmd_validate(const std::string& diagram_path, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        auto d = load_diagram(diagram_path);
        out << "valid: " << diagram_path << '\n';
        out << "derivation (" << d->validation.derivation.size() << " steps from" << roles_text(d->validation.start_roles)
            << "):\n";
        std::size_t k = 0;
        for (const auto& s : d->validation.derivation)
            out << "  " << ++k << ". " << s.rule_name << roles_text(s.roles) << '\n';
        out << "nodes:\n";
        for (const auto& [n, cls] : d->classes.classes) {
            out << "  " << n << ' ' << to_string(cls.kind);
            if (cls.join)
                out << " join=" << *cls.join;
            out << '\n';
        }
        out << "scopes: " << d->scopes.templates.size() << " templates, depth " << d->scopes.depth() << ", "
            << d->scopes.variables.size() << " variables\n";
        return int(exit_ok);
    });
}

int cmd_run(const CliConfig& c, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&]() -> int {
        std::shared_ptr<const StoryDiagram> d;
        TypedGraph model;
        auto res = run(prepare(c, d, model), c.max_steps);
        const auto& f = res.final;
        write_text_file(c.out, serialize_graph(f.model) + "\n");
        write_text_file(c.trace, trace_to_jsonl(res.trace));
        if (c.state)
            write_text_file(*c.state, serialize_graph(f.state.to_graph(*d)) + "\n");
        if (c.verbosity > 0)
            for (const auto& r : res.trace)
                out << "step " << r.step << ' ' << r.node << ' ' << r.outcome << '\n';
        out << "status: " << to_string(f.status) << '\n';
        out << "steps: " << f.steps << ", rule applications: " << f.model_rev << '\n';
        out << "model: " << c.out << " (" << f.model.node_count() << " nodes, " << f.model.edge_count()
            << " edges)\n";
        out << "trace: " << c.trace << '\n';
        switch (f.status) {
        case Status::terminated:
            return exit_ok;
        case Status::error:
            out << "pattern failed at node " << f.failed_node.value_or("?") << '\n';
            return exit_pattern_failed;
        case Status::nonterminating:
            out << "step budget of " << c.max_steps << " exhausted\n";
            return exit_budget;
        case Status::running:
            break;
        }
        throw std::logic_error("run returned while still running");
    });
}

std::string canonical_cfg(const TypedGraph& cfg)
{
    std::vector<NodeId> starts;
    for (const auto& [id, n] : cfg.nodes())
        if (n.type == start_node)
            starts.push_back(id);
    if (starts.size() != 1)
        throw CfgError("expected exactly one start node");

    std::map<NodeId, std::size_t> num;
    std::function<void(const NodeId&)> visit = [&](const NodeId& n) {
        num.emplace(n, num.size());
        std::vector<std::pair<std::string, NodeId>> outs;
        for (const auto& e : cfg.out_edges(n))
            outs.emplace_back(cfg.edge(e).type, cfg.edge(e).trg);
        std::sort(outs.begin(), outs.end());
        for (const auto& [t, m] : outs)
            if (!num.count(m))
                visit(m);
    };
    visit(starts.front());
    for (const auto& [id, n] : cfg.nodes())
        if (!num.count(id))
            visit(id);  // unreachable (not a language member)

    std::vector<std::string> nodes(num.size());
    for (const auto& [id, i] : num)
        nodes[i] = std::to_string(i) + ":" + cfg.node(id).type;
    std::vector<std::tuple<std::size_t, std::string, std::size_t>> edges;
    for (const auto& [id, e] : cfg.edges())
        edges.emplace_back(num.at(e.src), e.type, num.at(e.trg));
    std::sort(edges.begin(), edges.end());

    std::string s;
    for (const auto& n : nodes)
        s += (s.empty() ? "" : " ") + n;
    s += " |";
    for (const auto& [a, t, b] : edges)
        s += " " + std::to_string(a) + "-" + t + "->" + std::to_string(b);
    return s;
}

int cmd_enumerate(std::size_t max_nodes, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        if (max_nodes < 3)
            throw UsageError("--max-nodes must be at least 3 (the smallest member has 3 nodes)");
        auto lang = enumerate_language(syntax_grammar(), max_nodes);
        for (const auto& w : lang.warnings)
            err << "warning: " << w << '\n';
        std::vector<std::pair<std::size_t, std::string>> rows;
        for (const auto& g : lang.members)
            rows.emplace_back(g.node_count(), canonical_cfg(g));
        std::sort(rows.begin(), rows.end());
        std::size_t k = 0;
        for (const auto& [n, s] : rows)
            out << ++k << '\t' << s << '\n';
        out << "count: " << rows.size() << '\n';
        return int(exit_ok);
    });
}

int cmd_oracle(const CliConfig& c, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        std::shared_ptr<const StoryDiagram> d;
        TypedGraph model;
        check(c);
        if (c.inputs.size() != 2)
            throw UsageError("expected <diagram> <model>");
        d = load_diagram(c.inputs[0]);
        model = parse_graph(read_text_file(c.inputs[1]), d->model_types);
        OracleOptions opts;
        if (model.node_count() > opts.max_model_nodes)  // before spending a run on it
            throw OracleRefusal("model has " + std::to_string(model.node_count()) +
                                " nodes; the oracle accepts at most " + std::to_string(opts.max_model_nodes));
        auto res = run(initialize(d, model, c.this_id, {c.strategy, c.order, c.seed.value_or(0)}), c.max_steps);
        auto v = cross_check(*d, model, c.this_id, res.trace, res.final.status, opts);
        out << "run: " << to_string(res.final.status) << " after " << res.final.steps << " steps\n";
        for (const auto& n : v.notes)
            out << "  " << n << '\n';
        if (!v.agree) {
            out << "verdict: DISAGREEMENT\n";
            return int(exit_disagreement);
        }
        out << "verdict: agree";
        if (v.divergent)
            out << " (documented divergence)";
        if (v.incomplete)
            out << " (inconclusive: bound reached)";
        out << '\n';
        return int(exit_ok);
    });
}

int cmd_export_rules(const std::string& dir, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        std::filesystem::create_directories(dir);
        auto path = [&](const std::string& f) { return (std::filesystem::path(dir) / f).string(); };
        write_text_file(path("type_graph.json"), type_graph_to_json(*syntax_type_graph()).dump(2) + "\n");
        write_text_file(path("start_graph.json"), serialize_graph(syntax_start_graph()) + "\n");
        const auto& table = syntax_rule_table();
        for (std::size_t i = 0; i < table.size(); ++i) {
            const auto& sr = table[i];
            json j = rule_to_json(sr.rule);
            j["family"] = to_string(sr.family);
            j["primary"] = sr.primary;
            j["provisional"] = true;  // reconstructed table, see README
            char prefix[8];
            std::snprintf(prefix, sizeof prefix, "%02zu_", i + 1);
            write_text_file(path(prefix + sr.rule.name + ".json"), j.dump(2) + "\n");
        }
        out << "wrote " << table.size() << " rules to " << dir << '\n';
        return int(exit_ok);
    });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Story diagram engine: validate, run, enumerate and oracle-check story diagrams", "sdm"};
    app.require_subcommand(1);

    CliConfig c;
    std::string diagram, model, strategy = "conservative", order = "lex", dir;
    std::uint64_t seed = 0;
    std::map<std::string, Strategy> strategies{{"conservative", Strategy::conservative},
                                               {"optimistic", Strategy::optimistic}};
    std::map<std::string, MatchOrder> orders{{"lex", MatchOrder::lex}, {"random", MatchOrder::random}};

    auto* validate = app.add_subcommand("validate", "check a story diagram and print a derivation witness");
    validate->add_option("diagram", diagram, "story diagram JSON")->required();

    auto exec_flags = [&](CLI::App* s) {
        s->add_option("diagram", diagram, "story diagram JSON")->required();
        s->add_option("model", model, "model graph JSON")->required();
        s->add_option("--this", c.this_id, "model node bound to `this`")->required();
        s->add_option("--strategy", c.strategy, "join policy")
            ->transform(CLI::CheckedTransformer(strategies, CLI::ignore_case));
        s->add_option("--match-order", c.order, "lex or random (random needs --seed)")
            ->transform(CLI::CheckedTransformer(orders, CLI::ignore_case));
        s->add_option("--seed", seed, "seed for --match-order random");
        s->add_option("--max-steps", c.max_steps, "step budget")->check(CLI::PositiveNumber);
    };
    auto* run_cmd = app.add_subcommand("run", "execute a story diagram on a model");
    exec_flags(run_cmd);
    run_cmd->add_option("--out", c.out, "final model file");
    run_cmd->add_option("--trace", c.trace, "JSONL trace file");
    run_cmd->add_option("--state", c.state, "final execution state graph file");
    run_cmd->add_flag("-v,--verbose", c.verbosity, "print one line per step");

    auto* oracle = app.add_subcommand("oracle", "compare a run with the denotational semantics");
    exec_flags(oracle);

    auto* enumerate = app.add_subcommand("enumerate", "list the valid control flow graphs up to a size");
    enumerate->add_option("--max-nodes", c.max_nodes, "node bound (at least 3)")->required();

    auto* export_rules = app.add_subcommand("export-rules", "write the control flow grammar as rule files");
    export_rules->add_option("dir", dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    auto* sub = app.get_subcommands().front();
    c.subcommand = sub->get_name();
    if ((sub == run_cmd || sub == oracle) && sub->count("--seed"))
        c.seed = seed;
    c.inputs = {diagram, model};

    if (sub == validate)
        return cmd_validate(diagram, out, err);
    if (sub == enumerate)
        return cmd_enumerate(c.max_nodes, out, err);
    if (sub == export_rules)
        return cmd_export_rules(dir, out, err);
    if (sub == run_cmd)
        return cmd_run(c, out, err);
    return cmd_oracle(c, out, err);
}

} // namespace sdm::cli
