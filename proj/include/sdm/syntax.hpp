// syntax.hpp - the control-flow graph grammar: type graph, start graph,
// the sixteen expansion rules, membership checking and node classification

#ifndef SDM_SYNTAX_HPP
#define SDM_SYNTAX_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdm/spo.hpp"

namespace sdm {

namespace cfg_types {
inline constexpr const char* abstract_node = "AbstractNode";
inline constexpr const char* cf_node = "CFNode";
inline constexpr const char* start_node = "StartNode";
inline constexpr const char* stop_node = "StopNode";
inline constexpr const char* next = "next";
inline constexpr const char* success = "success";
inline constexpr const char* failure = "failure";
} // namespace cfg_types

enum class RuleFamily { sequential, joining, non_joining, loop };

const char* to_string(RuleFamily f);

// A syntax rule plus the bookkeeping needed to replay it structurally.
//
// Every rule shares the left-hand side a -next-> b and deletes that edge.
// Right-hand side node roles: a, b (kept), c (new conditional), x/x1/x2
// (nodes of the `primary` branch), y (node of the other branch),
// z (new stop node).
//   sequential:  primary unused
//   joining:     primary branch {x} rejoins at b, other branch goes to b
//   non_joining: primary edge continues to b, other branch is {z} or {y, z}
//   loop:        primary branch is the body returning to c, other branch
//                exits to b, directly or through y
struct SyntaxRule {
    Rule rule;
    RuleFamily family;
    std::string primary;  // "success" or "failure"
    std::vector<NodeId> primary_nodes;
    std::vector<NodeId> other_nodes;
};

TypeGraphPtr syntax_type_graph();
TypedGraph syntax_start_graph();  // start -next-> story -next-> stop
const std::vector<SyntaxRule>& syntax_rule_table();
std::vector<Rule> syntax_rules();
GraphGrammar syntax_grammar();

struct DerivationStep {
    std::size_t rule_index = 0;
    std::string rule_name;
    std::map<NodeId, NodeId> roles;  // rule RHS node id -> cfg node id
};

struct CfgValidation {
    bool valid = false;
    std::string reason;
    // start-graph node id (start/story/stop) -> cfg node id
    std::map<NodeId, NodeId> start_roles;
    // forward derivation from the start graph to the checked graph
    std::vector<DerivationStep> derivation;
};

// Membership in the generated language by backward reduction: inverse rule
// applications (each removes the nodes a rule created and restores the
// `next` edge) searched depth-first until the start graph is reached.
CfgValidation validate_control_flow(const TypedGraph& cfg);

enum class NodeKind { sequential, conditional_joining, conditional_nonjoining, loop_head_success, loop_head_failure };

const char* to_string(NodeKind k);

struct NodeClass {
    NodeKind kind = NodeKind::sequential;
    std::optional<NodeId> join;       // joining conditionals
    std::vector<NodeId> branch_stops; // non-joining conditionals
};

struct NodeClassification {
    std::map<NodeId, NodeClass> classes;  // every CFNode
};

class CfgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Throws CfgError if cfg is not a valid control-flow graph.
NodeClassification classify_nodes(const TypedGraph& cfg);
NodeClassification classify_nodes(const TypedGraph& cfg, const CfgValidation& validation);

} // namespace sdm

#endif // SDM_SYNTAX_HPP
