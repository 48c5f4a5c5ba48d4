// oracle.hpp - brute-force denotational semantics (sets of input/output
// graph pairs) for cross-checking the interpreter on small models

#ifndef SDM_ORACLE_HPP
#define SDM_ORACLE_HPP

#include <string>
#include <vector>

#include "sdm/step.hpp"

namespace sdm {

class OracleRefusal : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SemPair {
    TypedGraph input;
    TypedGraph output;
};

// Pairs are kept unique up to isomorphism of each component.
class SemSet {
public:
    bool incomplete = false;  // some unrolling hit its bound
    std::size_t depth_bound = 0;

    bool add(const TypedGraph& in, const TypedGraph& out);
    void merge(const SemSet& other);
    bool contains(const TypedGraph& in, const TypedGraph& out) const;
    const std::vector<SemPair>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    std::vector<TypedGraph> outputs() const;

private:
    std::vector<SemPair> pairs_;
};

// Sem(n): one pair per match (outputs up to iso), {(G,G)} if none.
SemSet sem_node(const Rule& r, const TypedGraph& g);
// Relational composition; an inapplicable rule passes graphs through.
SemSet sem_seq(const std::vector<Rule>& rules, const TypedGraph& g);
// Branch on applicability of r1; both branches start with Sem(r1).
SemSet sem_if(const Rule& r1, const Rule& r2, const Rule& r3, const TypedGraph& g);
// Unrolls while r1 applies; incomplete when depth_bound is reached.
SemSet sem_while(const Rule& r1, const Rule& r2, const TypedGraph& g, std::size_t depth_bound);

bool applicable(const Rule& r, const TypedGraph& g);

struct OracleOptions {
    std::size_t max_model_nodes = 6;
    std::size_t loop_bound = 16;  // loop-head visits along one path
    std::size_t max_step_nodes = 12;  // per-step checks stop beyond this
};

// Denotation of a whole diagram: the composition of the node semantics
// along the control flow, conditionals and loops branching on
// applicability. Throws OracleRefusal for failure-recurring loops.
SemSet sem_diagram(const StoryDiagram& d, const TypedGraph& g, const OracleOptions& options = {});

struct OracleVerdict {
    bool agree = true;       // false only for an undocumented disagreement
    bool divergent = false;  // a documented divergence was found
    bool incomplete = false;
    std::vector<std::string> notes;
};

inline constexpr const char* divergence_abrupt =
    "documented divergence: denotational passes through, step semantics errors";
inline constexpr const char* divergence_bindings =
    "documented divergence: branch-sensitive bindings (pattern applicable without bindings, failed with them)";

// Compares a recorded run with the denotational semantics. Throws
// OracleRefusal when the model exceeds options.max_model_nodes.
OracleVerdict cross_check(const StoryDiagram& d, const TypedGraph& model, const NodeId& this_node, const Trace& trace,
                          Status final_status, const OracleOptions& options = {});

} // namespace sdm

#endif // SDM_ORACLE_HPP
