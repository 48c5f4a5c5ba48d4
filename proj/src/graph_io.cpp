// graph_io.cpp

#include "sdm/graph_io.hpp"

#include <fstream>
#include <sstream>

namespace sdm {

namespace {

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw ParseError(std::string("missing field '") + key + "'");
    return j.at(key);
}

std::string string_field(const json& j, const char* key)
{
    const auto& v = field(j, key);
    if (!v.is_string())
        throw ParseError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

const json& array_field(const json& j, const char* key)
{
    const auto& v = field(j, key);
    if (!v.is_array())
        throw ParseError(std::string("field '") + key + "' must be an array");
    return v;
}

} // namespace

json type_graph_to_json(const TypeGraph& tg)
{
    json nodes = json::array();
    for (const auto& [name, parent] : tg.node_types()) {
        json n = {{"name", name}};
        if (parent)
            n["parent"] = *parent;
        nodes.push_back(n);
    }
    json edges = json::array();
    for (const auto& [name, et] : tg.edge_types())
        edges.push_back({{"name", name}, {"src", et.src}, {"trg", et.trg}});
    return {{"name", tg.name()}, {"node_types", nodes}, {"edge_types", edges}};
}

TypeGraphPtr type_graph_from_json(const json& j)
{
    auto tg = std::make_shared<TypeGraph>(string_field(j, "name"));
    try {
        for (const auto& n : array_field(j, "node_types")) {
            std::optional<std::string> parent;
            if (n.contains("parent")) {
                if (n["parent"].is_array())
                    throw ParseError("multiple inheritance is not supported (type '" +
                                     string_field(n, "name") + "')");
                if (!n["parent"].is_null())
                    parent = string_field(n, "parent");
            }
            tg->add_node_type(string_field(n, "name"), parent);
        }
        for (const auto& e : array_field(j, "edge_types"))
            tg->add_edge_type(string_field(e, "name"), string_field(e, "src"), string_field(e, "trg"));
        tg->check();
    } catch (const GraphError& err) {
        throw ParseError(err.what());
    }
    return tg;
}

json graph_to_json(const TypedGraph& g)
{
    json nodes = json::array();
    for (const auto& [id, n] : g.nodes())
        nodes.push_back({{"id", id}, {"type", n.type}});
    json edges = json::array();
    for (const auto& [id, e] : g.edges())
        edges.push_back({{"id", id}, {"type", e.type}, {"src", e.src}, {"trg", e.trg}});
    return {{"typegraph", g.type_graph_name()}, {"nodes", nodes}, {"edges", edges}};
}

TypedGraph graph_from_json(const json& j, const TypeGraphPtr& tg)
{
    if (!tg)
        throw ParseError("no type graph given");
    if (j.is_object() && j.contains("typegraph")) {
        auto name = string_field(j, "typegraph");
        if (name != tg->name())
            throw ParseError("graph is typed over '" + name + "', expected '" + tg->name() + "'");
    }
    TypedGraph g(tg);
    for (const auto& n : array_field(j, "nodes")) {
        auto id = string_field(n, "id");
        auto type = string_field(n, "type");
        if (!tg->has_node_type(type))
            throw ParseError("node '" + id + "': unknown node type '" + type + "'");
        if (g.has_id(id))
            throw ParseError("duplicate id '" + id + "'");
        g.add_node(id, type);
    }
    for (const auto& e : array_field(j, "edges")) {
        auto id = string_field(e, "id");
        auto type = string_field(e, "type");
        auto src = string_field(e, "src");
        auto trg = string_field(e, "trg");
        if (!tg->has_edge_type(type))
            throw ParseError("edge '" + id + "': unknown edge type '" + type + "'");
        if (g.has_id(id))
            throw ParseError("duplicate id '" + id + "'");
        if (!g.has_node(src) || !g.has_node(trg))
            throw ParseError("edge '" + id + "': dangling reference to a missing node");
        g.add_edge(id, type, src, trg);
    }
    return g;
}

std::string serialize_graph(const TypedGraph& g) { return graph_to_json(g).dump(2); }

TypedGraph parse_graph(const std::string& text, const TypeGraphPtr& tg) { return graph_from_json(parse_json(text), tg); }

json parse_json(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("malformed JSON: ") + err.what());
    }
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot write '" + path + "'");
    out << text;
}

} // namespace sdm
