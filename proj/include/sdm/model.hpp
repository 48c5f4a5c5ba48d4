// model.hpp - story diagrams: a control-flow graph whose story nodes carry
// patterns over a model type graph, plus the static scope analysis

#ifndef SDM_MODEL_HPP
#define SDM_MODEL_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdm/graph_io.hpp"
#include "sdm/syntax.hpp"

namespace sdm {

// Semantic problems with a diagram (bad pattern wiring, scope conflicts).
class DiagramError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidCfgError : public DiagramError {
public:
    using DiagramError::DiagramError;
};

class BindingError : public DiagramError {
public:
    using DiagramError::DiagramError;
};

struct StoryPattern {
    Rule rule;
    std::map<NodeId, std::string> var_names;  // L and R node -> variable name
    std::set<std::string> bound_vars;

    const std::string& var_of(const NodeId& elem) const { return var_names.at(elem); }
    std::optional<NodeId> lhs_node(const std::string& var) const;
    std::optional<NodeId> rhs_node(const std::string& var) const;
    std::string type_of(const std::string& var) const;

    std::set<std::string> lhs_vars() const;
    std::set<std::string> deleted_vars() const;  // L nodes without an image in R
    std::set<std::string> created_vars() const;  // R nodes outside the image of L

    // Throws DiagramError unless every node has a unique name, L and R
    // agree on preserved nodes and bound variables sit in L.
    void check() const;
};

struct Param {
    std::string name;
    std::string type;
};

using TemplateId = std::size_t;

struct ScopeTemplate {
    TemplateId id = 0;
    std::optional<TemplateId> parent;
    std::optional<NodeId> owner;  // the conditional this branch belongs to
    std::string branch;           // "success" / "failure"; empty for the root
    std::set<NodeId> members;     // CFNodes only
    std::set<std::string> declared_vars;
};

struct CFVariable {
    std::string name;
    std::string type;
    TemplateId scope = 0;
};

struct ScopeTree {
    std::vector<ScopeTemplate> templates;    // [0] is the root
    std::vector<CFVariable> variables;
    std::map<NodeId, TemplateId> placement;  // every cfg node, start and stop nodes included
    std::map<NodeId, std::map<std::string, TemplateId>> branches;  // conditional -> polarity -> template

    std::size_t depth() const;
    std::size_t depth_of(TemplateId t) const;
    bool is_ancestor_or_self(TemplateId ancestor, TemplateId t) const;
    std::vector<TemplateId> chain(TemplateId t) const;  // t, parent, ..., root
    // CFVariable index visible from t under that name
    std::optional<std::size_t> resolve(TemplateId t, const std::string& name) const;
};

struct StoryDiagram {
    TypeGraphPtr model_types;
    TypedGraph cfg;
    CfgValidation validation;
    NodeClassification classes;
    std::vector<Param> params;
    std::map<NodeId, StoryPattern> patterns;
    ScopeTree scopes;

    NodeId first_node() const;  // successor of the start node
};

// Requires d.validation and d.classes; throws DiagramError on conflicts
// (a branch redeclaring an enclosing variable with an unrelated type).
ScopeTree analyze_scopes(const StoryDiagram& d);

struct BindingViolation {
    NodeId node;
    std::string variable;
    std::vector<NodeId> path;  // start ... node
};

struct BindingReport {
    bool ok = true;
    std::vector<BindingViolation> violations;
};

// Abstract execution over sets of bound names with the conservative join:
// every bound-marked variable must be bound on every path to its node.
BindingReport validate_binding_marks(const StoryDiagram& d);

// Parses, validates the cfg, classifies, analyses scopes and checks
// binding marks. Throws ParseError, InvalidCfgError, BindingError or
// DiagramError.
StoryDiagram story_diagram_from_json(const json& j);
StoryDiagram load_story_diagram(const std::string& path);

json story_diagram_to_json(const StoryDiagram& d);

} // namespace sdm

#endif // SDM_MODEL_HPP
