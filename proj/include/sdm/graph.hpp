// graph.hpp - typed directed multigraphs, type graphs and morphisms

#ifndef SDM_GRAPH_HPP
#define SDM_GRAPH_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdm {

using NodeId = std::string;
using EdgeId = std::string;

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EdgeType {
    std::string src;
    std::string trg;
};

// Node types with optional single inheritance; edge types with declared
// endpoint node types. A type conforms to its ancestors.
class TypeGraph {
public:
    explicit TypeGraph(std::string name = {}) : name_(std::move(name)) {}

    const std::string& name() const { return name_; }

    void add_node_type(const std::string& type, std::optional<std::string> parent = std::nullopt);
    void add_edge_type(const std::string& type, const std::string& src, const std::string& trg);

    // Throws GraphError on unknown parents/endpoints or inheritance cycles.
    void check() const;

    bool has_node_type(const std::string& type) const { return node_types_.count(type) != 0; }
    bool has_edge_type(const std::string& type) const { return edge_types_.count(type) != 0; }
    const EdgeType& edge_type(const std::string& type) const;
    std::optional<std::string> parent(const std::string& type) const;

    // true iff `type` equals `ancestor` or transitively inherits from it
    bool conforms(const std::string& type, const std::string& ancestor) const;

    const std::map<std::string, std::optional<std::string>>& node_types() const { return node_types_; }
    const std::map<std::string, EdgeType>& edge_types() const { return edge_types_; }

private:
    std::string name_;
    std::map<std::string, std::optional<std::string>> node_types_;
    std::map<std::string, EdgeType> edge_types_;
};

using TypeGraphPtr = std::shared_ptr<const TypeGraph>;

struct Node {
    std::string type;
    bool operator==(const Node&) const = default;
};

struct Edge {
    std::string type;
    NodeId src;
    NodeId trg;
    bool operator==(const Edge&) const = default;
};

// A graph together with its typing. Ids are opaque strings unique across
// nodes and edges; every ordered view iterates in lexicographic id order.
// Type names are not checked on insertion (see validate_typing).
class TypedGraph {
public:
    TypedGraph() = default;
    explicit TypedGraph(TypeGraphPtr tg);

    const TypeGraphPtr& type_graph() const { return tg_; }
    std::string type_graph_name() const { return tg_ ? tg_->name() : std::string{}; }

    void add_node(const NodeId& id, const std::string& type);
    void add_edge(const EdgeId& id, const std::string& type, const NodeId& src, const NodeId& trg);
    // Removes the node and every incident edge; returns the removed edge ids.
    std::vector<EdgeId> remove_node(const NodeId& id);
    void remove_edge(const EdgeId& id);

    bool has_node(const NodeId& id) const { return nodes_.count(id) != 0; }
    bool has_edge(const EdgeId& id) const { return edges_.count(id) != 0; }
    bool has_id(const std::string& id) const { return has_node(id) || has_edge(id); }
    const Node& node(const NodeId& id) const;
    const Edge& edge(const EdgeId& id) const;

    const std::map<NodeId, Node>& nodes() const { return nodes_; }
    const std::map<EdgeId, Edge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::vector<EdgeId> out_edges(const NodeId& id) const;
    std::vector<EdgeId> in_edges(const NodeId& id) const;
    std::vector<EdgeId> incident_edges(const NodeId& id) const;

    // Changes on every mutation; used to detect stale matches.
    std::uint64_t revision() const { return revision_; }

    // Content equality (ids, types, endpoints); ignores revision.
    bool operator==(const TypedGraph& other) const;

private:
    void touch();

    TypeGraphPtr tg_;
    std::map<NodeId, Node> nodes_;
    std::map<EdgeId, Edge> edges_;
    std::uint64_t revision_ = 0;
};

// Possibly partial graph morphism; total when every element is in the maps.
struct Morphism {
    std::map<NodeId, NodeId> nodes;
    std::map<EdgeId, EdgeId> edges;

    bool operator==(const Morphism&) const = default;
};

struct Violation {
    std::string element;
    std::string rule;
    std::string message;
};

struct TypingReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

TypingReport validate_typing(const TypedGraph& g, const TypeGraph& tg);

// Checks that m is a structure-preserving (partial) morphism from `from`
// to `to` whose domain is a subgraph. With exact_types, node and edge
// types must be equal; otherwise target node types must conform.
bool is_morphism(const Morphism& m, const TypedGraph& from, const TypedGraph& to, bool exact_types = true);
bool is_injective(const Morphism& m);
bool is_total(const Morphism& m, const TypedGraph& from);

// Type- and structure-preserving bijection g -> h, or nullopt. Throws
// GraphError when the graphs are typed over different type graphs.
std::optional<Morphism> find_isomorphism(const TypedGraph& g, const TypedGraph& h);
bool isomorphic(const TypedGraph& g, const TypedGraph& h);

// Isomorphism-invariant fingerprint; equal for isomorphic graphs.
std::string invariant_key(const TypedGraph& g);

} // namespace sdm

#endif // SDM_GRAPH_HPP
