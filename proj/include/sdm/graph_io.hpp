// graph_io.hpp - JSON text formats for type graphs and typed graphs

#ifndef SDM_GRAPH_IO_HPP
#define SDM_GRAPH_IO_HPP

#include <json.hpp>

#include <stdexcept>
#include <string>

#include "sdm/graph.hpp"

namespace sdm {

using json = nlohmann::json;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// { "name", "node_types": [{"name","parent"?}], "edge_types": [{"name","src","trg"}] }
json type_graph_to_json(const TypeGraph& tg);
TypeGraphPtr type_graph_from_json(const json& j);

// { "typegraph", "nodes": [{"id","type"}], "edges": [{"id","type","src","trg"}] }
json graph_to_json(const TypedGraph& g);
// Rejects unknown type names, duplicate ids, dangling edges and a
// "typegraph" field that disagrees with tg.
TypedGraph graph_from_json(const json& j, const TypeGraphPtr& tg);

std::string serialize_graph(const TypedGraph& g);
TypedGraph parse_graph(const std::string& text, const TypeGraphPtr& tg);

json parse_json(const std::string& text);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace sdm

#endif // SDM_GRAPH_IO_HPP
