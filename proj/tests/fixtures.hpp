// fixtures.hpp - loading the shipped diagrams and models

#ifndef SDM_TEST_FIXTURES_HPP
#define SDM_TEST_FIXTURES_HPP

#include <memory>
#include <string>

#include "sdm/step.hpp"

namespace sdm::testing {

inline std::string fixture(const std::string& name) { return std::string(SDM_FIXTURE_DIR) + "/" + name; }

inline std::shared_ptr<const StoryDiagram> diagram(const std::string& name)
{
    return std::make_shared<const StoryDiagram>(load_story_diagram(fixture(name)));
}

inline TypedGraph model(const StoryDiagram& d, const std::string& name)
{
    return parse_graph(read_text_file(fixture("models/" + name)), d.model_types);
}

inline Configuration start(const std::string& dia, const std::string& mod, const NodeId& self,
                           const RunOptions& opts = {})
{
    auto d = diagram(dia);
    return initialize(d, model(*d, mod), self, opts);
}

// Number of `next` successors of n.
inline std::size_t successors(const TypedGraph& g, const NodeId& n)
{
    std::size_t k = 0;
    for (const auto& e : g.out_edges(n))
        k += g.edge(e).type == "next";
    return k;
}

} // namespace sdm::testing

#endif // SDM_TEST_FIXTURES_HPP
