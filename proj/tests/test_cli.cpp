#include <doctest.h>

#include <filesystem>
#include <unistd.h>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "sdm/cli.hpp"
#include "sdm/oracle.hpp"
#include "sdm/rule_io.hpp"

using namespace sdm;
using namespace sdm::cli;
using namespace sdm::testing;
namespace fs = std::filesystem;

namespace {

struct Out {
    int code = -1;
    std::string out, err;
};

Out sdm_cmd(std::vector<std::string> args)
{
    args.insert(args.begin(), "sdm");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream o, e;
    Out r;
    r.code = run_cli(int(argv.size()), argv.data(), o, e);
    r.out = o.str();
    r.err = e.str();
    return r;
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int k = 0;
        path = fs::temp_directory_path() / ("sdm_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(k++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string model_path(const std::string& name) { return fixture("models/" + name); }

} // namespace

TEST_CASE("validate")
{
    auto ok = sdm_cmd({"validate", fixture("minimal.json")});
    CHECK(ok.code == exit_ok);
    CHECK(ok.out.find("derivation (0 steps") != std::string::npos);

    auto dno = sdm_cmd({"validate", fixture("dno.json")});
    CHECK(dno.code == exit_ok);
    CHECK(dno.out.find("cond-join") != std::string::npos);
    CHECK(dno.out.find("c1 conditional-nonjoining") != std::string::npos);

    CHECK(sdm_cmd({"validate", fixture("start_stop.json")}).code == exit_invalid);
    CHECK(sdm_cmd({"validate", fixture("join_bound.json")}).code == exit_invalid);

    TempDir t;
    write_text_file(t / "bad.json", "{\"typegraph\": ");
    CHECK(sdm_cmd({"validate", t / "bad.json"}).code == exit_io);
    CHECK(sdm_cmd({"validate", t / "missing.json"}).code == exit_io);
    CHECK(sdm_cmd({"validate"}).code == exit_usage);
}

TEST_CASE("run")
{
    TempDir t;
    auto args = [&](std::vector<std::string> a) {
        a.insert(a.end(), {"--out", t / "model.json", "--trace", t / "trace.jsonl"});
        return a;
    };
    SUBCASE("the delete-next diagram on a 3-node list")
    {
        auto r = sdm_cmd(args({"run", fixture("dno.json"), model_path("list3.json"), "--this", "n0", "--state",
                               t / "state.json"}));
        CHECK(r.code == exit_ok);
        CHECK(r.out.find("status: terminated") != std::string::npos);
        auto d = diagram("dno.json");
        auto g = parse_graph(read_text_file(t / "model.json"), d->model_types);
        CHECK(g.node_count() == 2);
        CHECK(successors(g, "n0") == 1);
        // the trace replays to the written model
        CHECK(isomorphic(replay_trace_jsonl(*d, model(*d, "list3.json"), read_text_file(t / "trace.jsonl")), g));
        auto st = parse_graph(read_text_file(t / "state.json"), state_type_graph());
        CHECK(st.has_node("token"));
    }
    SUBCASE("sequential failure names the node")
    {
        auto r = sdm_cmd(args({"run", fixture("seqfail.json"), model_path("list1.json"), "--this", "n0", "--state",
                               t / "state.json"}));
        CHECK(r.code == exit_pattern_failed);
        CHECK(r.out.find("pattern failed at node s2") != std::string::npos);
        auto st = parse_graph(read_text_file(t / "state.json"), state_type_graph());
        bool at = false;
        for (const auto& [id, e] : st.edges())
            at = at || e.type == "at";
        CHECK_FALSE(at);
    }
    SUBCASE("budget")
    {
        auto r = sdm_cmd(args({"run", fixture("loop.json"), model_path("inventory5.json"), "--this", "this",
                               "--max-steps", "1"}));
        CHECK(r.code == exit_budget);
        CHECK(fs::exists(t / "trace.jsonl"));
    }
    SUBCASE("flags")
    {
        auto base = std::vector<std::string>{"run", fixture("loop.json"), model_path("inventory5.json"), "--this", "this"};
        auto with = [&](std::vector<std::string> extra) {
            auto a = base;
            a.insert(a.end(), extra.begin(), extra.end());
            return args(a);
        };
        CHECK(sdm_cmd(with({"--match-order", "random"})).code == exit_usage);
        CHECK(sdm_cmd(with({"--seed", "4"})).code == exit_usage);
        CHECK(sdm_cmd(with({"--strategy", "hopeful"})).code == exit_usage);
        CHECK(sdm_cmd(with({"--max-steps", "0"})).code == exit_usage);
        CHECK(sdm_cmd(args({"run", fixture("loop.json"), model_path("inventory5.json")})).code == exit_usage);
        CHECK(sdm_cmd(with({"--strategy", "optimistic", "--match-order", "random", "--seed", "4"})).code == exit_ok);
        auto wrong = args({"run", fixture("loop.json"), model_path("inventory5.json"), "--this", "ghost"});
        CHECK(sdm_cmd(wrong).code == exit_io);
    }
    SUBCASE("outputs are deterministic for fixed flags and seed")
    {
        for (const char* order : {"lex", "random"}) {
            std::vector<std::string> files;
            for (int i = 0; i < 2; ++i) {
                std::vector<std::string> a{"run",         fixture("dno.json"), model_path("list4.json"),
                                           "--this",      "n0",                "--match-order",
                                           order,         "--out",             t / ("m" + std::to_string(i)),
                                           "--trace",     t / ("t" + std::to_string(i)), "--state",
                                           t / ("s" + std::to_string(i))};
                if (std::string(order) == "random")
                    a.insert(a.end(), {"--seed", "11"});
                REQUIRE(sdm_cmd(a).code == exit_ok);
            }
            for (const char* f : {"m", "t", "s"})
                CHECK(read_text_file(t / (std::string(f) + "0")) == read_text_file(t / (std::string(f) + "1")));
        }
    }
}

TEST_CASE("enumerate")
{
    auto three = sdm_cmd({"enumerate", "--max-nodes", "3"});
    CHECK(three.code == exit_ok);
    CHECK(three.out == "1\t0:StartNode 1:CFNode 2:StopNode | 0-next->1 1-next->2\ncount: 1\n");
    CHECK(canonical_cfg(syntax_start_graph()) == "0:StartNode 1:CFNode 2:StopNode | 0-next->1 1-next->2");

    auto four = sdm_cmd({"enumerate", "--max-nodes", "4"});
    CHECK(four.out.find("0:StartNode 1:CFNode 2:CFNode 3:StopNode | 0-next->1 1-next->2 2-next->3") !=
          std::string::npos);
    CHECK(four.out.find("count: 6\n") != std::string::npos);

    CHECK(sdm_cmd({"enumerate", "--max-nodes", "2"}).code == exit_usage);
    CHECK(sdm_cmd({"enumerate"}).code == exit_usage);
}

TEST_CASE("canonical_cfg is a complete invariant on the language")
{
    auto lang = enumerate_language(syntax_grammar(), 6);
    std::set<std::string> seen;
    std::mt19937 rng(5);
    for (const auto& g : lang.members) {
        auto key = canonical_cfg(g);
        CHECK(seen.insert(key).second);
        // renamed copy, inserted in shuffled order
        std::vector<NodeId> ids;
        for (const auto& [id, n] : g.nodes())
            ids.push_back(id);
        std::shuffle(ids.begin(), ids.end(), rng);
        std::map<NodeId, NodeId> rename;
        TypedGraph h(g.type_graph());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            rename[ids[i]] = "q" + std::to_string(ids.size() - i);
            h.add_node(rename[ids[i]], g.node(ids[i]).type);
        }
        std::size_t k = 0;
        for (const auto& [id, e] : g.edges())
            h.add_edge("f" + std::to_string(k++), e.type, rename[e.src], rename[e.trg]);
        CHECK(canonical_cfg(h) == key);
    }
    CHECK(seen.size() == 188);
}

TEST_CASE("oracle")
{
    auto minimal = sdm_cmd({"oracle", fixture("minimal.json"), model_path("list1.json"), "--this", "n0"});
    CHECK(minimal.code == exit_ok);
    auto two = sdm_cmd({"oracle", fixture("twoseq.json"), model_path("list1.json"), "--this", "n0"});
    CHECK(two.code == exit_ok);
    CHECK(two.out.find("pair in Sem") != std::string::npos);
    auto fail = sdm_cmd({"oracle", fixture("seqfail.json"), model_path("list1.json"), "--this", "n0"});
    CHECK(fail.code == exit_ok);
    CHECK(fail.out.find(divergence_abrupt) != std::string::npos);

    TempDir t;
    auto d = diagram("minimal.json");
    TypedGraph big(d->model_types);
    for (int i = 0; i < 7; ++i)
        big.add_node("n" + std::to_string(i), "Node");
    write_text_file(t / "big.json", serialize_graph(big));
    auto refused = sdm_cmd({"oracle", fixture("minimal.json"), t / "big.json", "--this", "n0"});
    CHECK(refused.code == exit_oracle_refused);
    CHECK(refused.err.find("at most 6") != std::string::npos);
}

TEST_CASE("export-rules matches the built-in table and the shipped files")
{
    TempDir t;
    REQUIRE(sdm_cmd({"export-rules", t / "rules"}).code == exit_ok);
    const auto& table = syntax_rule_table();
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(t / "rules")) {
        auto name = entry.path().filename().string();
        CHECK(read_text_file(entry.path().string()) == read_text_file(std::string(SDM_SYNTAX_DIR) + "/" + name));
        if (name == "type_graph.json" || name == "start_graph.json")
            continue;
        ++files;
        auto j = parse_json(read_text_file(entry.path().string()));
        CHECK(j.at("provisional") == true);
        auto r = rule_from_json(j, syntax_type_graph());
        std::size_t i = std::stoul(name.substr(0, 2)) - 1;
        REQUIRE(i < table.size());
        CHECK(r.name == table[i].rule.name);
        CHECK(isomorphic(r.rhs, table[i].rule.rhs));
        CHECK(rule_to_json(r) == rule_to_json(table[i].rule));
    }
    CHECK(files == 16);
}
