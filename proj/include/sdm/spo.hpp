// spo.hpp - single-pushout rewriting: rules, NACs, matching, application,
// and bounded language enumeration

#ifndef SDM_SPO_HPP
#define SDM_SPO_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sdm/graph.hpp"

namespace sdm {

class RuleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StaleMatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Negative application condition, stored as the embedding L -> N.
struct NAC {
    TypedGraph graph;
    Morphism embed;
};

// An SPO rule: a partial morphism L -> R plus NACs.
struct Rule {
    std::string name;
    TypedGraph lhs;
    TypedGraph rhs;
    Morphism map;
    std::vector<NAC> nacs;

    // Throws RuleError unless the mapping is an injective partial morphism
    // with a subgraph domain, every NAC embedding is total and injective,
    // and all graphs share one type graph.
    void check() const;
};

struct Match {
    Morphism morphism;                 // total injective L -> host
    std::uint64_t host_revision = 0;
};

using PartialAssignment = std::map<NodeId, NodeId>;

struct MatchOptions {
    bool injective_nac = true;  // NAC witnesses must be injective
};

// All morphisms pattern -> host extending `seed`, in lexicographic order of
// (pattern node -> host node) then (pattern edge -> host edge). Host node
// types must conform to pattern node types; edge types must be equal.
// `limit` == 0 means unbounded.
std::vector<Morphism> find_morphisms(const TypedGraph& pattern, const TypedGraph& host, const Morphism& seed,
                                     bool injective, std::size_t limit = 0);

// Total injective NAC-satisfying matches extending `partial`, sorted.
// Throws RuleError when `partial` is not injective or not type-consistent.
std::vector<Match> find_matches(const Rule& rule, const TypedGraph& host, const PartialAssignment& partial = {},
                                const MatchOptions& options = {});

// true iff the NAC is satisfied, i.e. no witness q: N -> host with
// q . embed == match exists.
bool check_nac(const NAC& nac, const Match& match, const TypedGraph& host, bool injective = true);

// Deterministic counter for created elements: n#k / e#k, skipping ids the
// host already uses. One instance is shared along a derivation.
class FreshIds {
public:
    NodeId node(const TypedGraph& avoid);
    EdgeId edge(const TypedGraph& avoid);

private:
    std::size_t next_node_ = 0;
    std::size_t next_edge_ = 0;
};

struct ApplyResult {
    TypedGraph result;
    Morphism comorphism;     // host -> result on surviving elements
    Morphism rhs_embedding;  // R -> result (the co-match)
    std::set<std::string> created;
    std::set<std::string> deleted;
};

// Throws StaleMatchError when the host changed since matching.
ApplyResult apply_rule(const Rule& rule, const Match& match, const TypedGraph& host, FreshIds& ids);
ApplyResult apply_rule(const Rule& rule, const Match& match, const TypedGraph& host);

struct GraphGrammar {
    TypedGraph start;
    std::vector<Rule> rules;
};

struct Language {
    std::vector<TypedGraph> members;  // discovery order, one per iso class
    std::vector<std::string> warnings;
};

// Every graph with at most max_nodes nodes reachable from the start graph,
// deduplicated up to isomorphism. Intermediate graphs above the bound are
// pruned, which is exact only when no rule shrinks graphs; a warning is
// recorded for each shrinking rule.
Language enumerate_language(const GraphGrammar& grammar, std::size_t max_nodes);

// Index into `members` of a graph isomorphic to g, or -1.
long find_isomorphic(const std::vector<TypedGraph>& members, const TypedGraph& g);

} // namespace sdm

#endif // SDM_SPO_HPP
