// cli.hpp - the `sdm` command-line front end; each command returns its exit code

#ifndef SDM_CLI_HPP
#define SDM_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdm/step.hpp"

namespace sdm::cli {

// stable contract
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_invalid = 2,         // invalid cfg, binding marks, other diagram errors
    exit_io = 3,              // unreadable or malformed input
    exit_pattern_failed = 4,
    exit_budget = 5,
    exit_oracle_refused = 6,
    exit_disagreement = 7,
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CliConfig {
    std::string subcommand;
    std::vector<std::string> inputs;  // diagram, model
    std::string this_id;
    Strategy strategy = Strategy::conservative;
    MatchOrder order = MatchOrder::lex;
    std::optional<std::uint64_t> seed;
    std::size_t max_steps = 10000;
    std::string out = "model.out.json";
    std::string trace = "trace.jsonl";
    std::optional<std::string> state;
    std::size_t max_nodes = 0;  // enumerate
    int verbosity = 0;
};

// Throws UsageError (seed iff random order, max_steps > 0, ...).
void check(const CliConfig& c);

int cmd_validate(const std::string& diagram_path, std::ostream& out, std::ostream& err);
int cmd_run(const CliConfig& c, std::ostream& out, std::ostream& err);
int cmd_enumerate(std::size_t max_nodes, std::ostream& out, std::ostream& err);
int cmd_oracle(const CliConfig& c, std::ostream& out, std::ostream& err);
int cmd_export_rules(const std::string& dir, std::ostream& out, std::ostream& err);

// Canonical text of a control-flow graph: nodes numbered by a depth-first
// walk from the start node taking edges in type order. Every member of the
// language is reachable from its start node and has at most one out-edge of
// each type, so the numbering is unique.
std::string canonical_cfg(const TypedGraph& cfg);

// Parses argv and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sdm::cli

#endif // SDM_CLI_HPP
