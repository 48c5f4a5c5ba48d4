// rule_io.hpp - rule file format

#ifndef SDM_RULE_IO_HPP
#define SDM_RULE_IO_HPP

#include "sdm/graph_io.hpp"
#include "sdm/spo.hpp"

namespace sdm {

// { "name", "lhs", "rhs", "map": [{"l","r"}], "nacs": [{"graph", "embed": [{"l","n"}]}] }
// Map entries name nodes or edges; ids are unique across both.
json rule_to_json(const Rule& rule);
Rule rule_from_json(const json& j, const TypeGraphPtr& tg);

} // namespace sdm

#endif // SDM_RULE_IO_HPP
