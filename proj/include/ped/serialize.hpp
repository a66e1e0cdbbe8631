#ifndef PED_SERIALIZE_HPP
#define PED_SERIALIZE_HPP

#include <json.hpp>

#include "ped/cluster1d.hpp"
#include "ped/energy.hpp"
#include "ped/pruning.hpp"
#include "ped/toynet.hpp"

namespace ped::json {

using Json = nlohmann::ordered_json;

Json to_json(const energy::DependenceProfile &profile);
/// Throws ParseError naming the offending field.
energy::DependenceProfile profile_from_json(const Json &j);

Json to_json(const cluster1d::Clustering &c, const std::vector<std::size_t> &heads);

Json to_json(const PruningPolicy &policy);
PruningPolicy policy_from_json(const Json &j);

Json to_json(const Selection &selection);
Json to_json(const StageReport &report, bool include_timing = false);

Json to_json(const toynet::SkipNetConfig &cfg);
Json to_json(const toynet::ToyConfig &cfg);

Json parse(const std::string &text, const std::string &source);

} // namespace ped::json

#endif // PED_SERIALIZE_HPP
