// step.hpp - the step-semantics interpreter for story diagrams

#ifndef SDM_STEP_HPP
#define SDM_STEP_HPP

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sdm/model.hpp"

namespace sdm {

class ExecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Strategy { conservative, optimistic };
enum class MatchOrder { lex, random };
enum class Status { running, terminated, error, nonterminating };

const char* to_string(Strategy s);
const char* to_string(MatchOrder m);
const char* to_string(Status s);
Strategy strategy_from_string(const std::string& s);
MatchOrder match_order_from_string(const std::string& s);

using InstanceId = std::size_t;

struct Binding {
    std::size_t variable = 0;  // index into ScopeTree::variables
    NodeId model_node;
    bool operator==(const Binding&) const = default;
};

struct ScopeInstance {
    InstanceId id = 0;
    TemplateId tmpl = 0;
    std::map<std::string, Binding> bindings;
};

struct InvocationRecord {
    std::set<std::string> constructed;
    std::set<std::string> destructed;
};

// Runtime state. Only the active chain of scope instances exists; branch
// instances are discarded when left.
struct ExecState {
    std::optional<NodeId> token;        // nullopt = detached
    std::vector<ScopeInstance> scopes;  // root first, current last
    InstanceId next_instance = 0;
    std::map<NodeId, InvocationRecord> invocations;  // latest per story node

    ScopeInstance& current() { return scopes.back(); }
    const ScopeInstance& current() const { return scopes.back(); }

    // The state as a graph over state_type_graph(), cfg nodes included.
    TypedGraph to_graph(const StoryDiagram& d) const;
};

TypeGraphPtr state_type_graph();

struct RunOptions {
    Strategy strategy = Strategy::conservative;
    MatchOrder order = MatchOrder::lex;
    std::uint64_t seed = 0;
};

struct Configuration {
    std::shared_ptr<const StoryDiagram> diagram;
    TypedGraph model;
    ExecState state;
    RunOptions options;
    Status status = Status::running;
    std::optional<NodeId> failed_node;
    FreshIds ids;
    std::mt19937_64 rng;
    std::uint64_t model_rev = 0;  // rule applications so far
    std::size_t steps = 0;
};

struct VarAssignment {
    std::string var;
    std::string model_id;
};

struct PatternInvocationResult {
    bool matched = false;
    std::set<std::string> constructed;
    std::set<std::string> destructed;
    // present when matched
    Match match;
    std::vector<VarAssignment> nodes;    // L variable -> model node
    std::vector<VarAssignment> edges;    // L edge -> model edge
    std::vector<VarAssignment> created;  // created variable -> new model node
    std::set<NodeId> deleted_nodes;
};

// Throws ExecError when this_node is missing or mistyped.
Configuration initialize(std::shared_ptr<const StoryDiagram> d, TypedGraph model, const NodeId& this_node,
                         const RunOptions& options = {});

// Matches the pattern at the token and, on success, rewrites the model.
// Every L variable bound in the current scope instance is pre-matched.
PatternInvocationResult invoke_pattern(Configuration& c);

// One binding change inside a scope instance.
struct BindingUpdate {
    std::string var;
    std::optional<Binding> value;  // nullopt removes the binding
};

std::vector<BindingUpdate> binding_updates(const Configuration& c, const NodeId& node,
                                           const PatternInvocationResult& r);
void apply_binding_update(ScopeInstance& s, const BindingUpdate& u);

struct StepRecord {
    std::size_t step = 0;
    NodeId node;
    std::string outcome;  // matched / failed / terminated
    std::string rule;
    PatternInvocationResult invocation;
    InstanceId scope = 0;  // instance the pattern ran in
    std::vector<std::string> scope_events;
    std::uint64_t model_rev = 0;
};

using Trace = std::vector<StepRecord>;

// Throws ExecError unless running. `order` permutes the binding updates
// (identity when empty); the result must not depend on it.
StepRecord step(Configuration& c, const std::vector<std::size_t>& order = {});

// Leaves the current branch instance, applying the join policy.
void exit_branch_join(Configuration& c, std::vector<std::string>* events = nullptr);

struct RunResult {
    Configuration final;
    Trace trace;
};

RunResult run(Configuration c, std::size_t max_steps = 10000);

json step_record_to_json(const StepRecord& r);
std::string trace_to_jsonl(const Trace& t);

// Re-applies one recorded match (no-op unless the step matched).
TypedGraph replay_step(const StoryDiagram& d, const TypedGraph& g, const StepRecord& r, FreshIds& ids);

// Re-applies the recorded matches to `initial`; throws ExecError when a
// recorded match does not fit.
TypedGraph replay_trace(const StoryDiagram& d, const TypedGraph& initial, const Trace& t);
TypedGraph replay_trace_jsonl(const StoryDiagram& d, const TypedGraph& initial, const std::string& jsonl);

} // namespace sdm

#endif // SDM_STEP_HPP
