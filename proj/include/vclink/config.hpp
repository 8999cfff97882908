#pragma once

// XML simulator configuration: node types, topology, router parameters and
// the traffic section. See docs/config-schema.md for the element reference.

#include "vclink/noc_sim.hpp"
#include "vclink/traffic.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vclink {

enum class NodeModel { RouterVC, ProcessingElementVC };

struct NodeType {
    int id = 0;
    NodeModel model = NodeModel::RouterVC;
    RoutingAlgorithm routing = RoutingAlgorithm::XYZ;
    SelectionStrategy selection = SelectionStrategy::RoundRobin;
    ArbitrationMode arbitration = ArbitrationMode::Fair;
    unsigned clock_delay = 1;
};

struct SimulationConfig {
    std::vector<NodeType> node_types;
    NetworkConfig network;
    std::vector<InjectionSpec> traffic;
    std::optional<std::uint64_t> cycles;
    std::optional<std::uint64_t> seed;
};

// Throws ValidationError naming the offending element path on unknown
// elements, missing values or bad tokens.
SimulationConfig parse_config(const std::filesystem::path& path);
// `base_dir` resolves relative payload file paths.
SimulationConfig parse_config_string(std::string_view xml, const std::filesystem::path& base_dir = {},
                                     const std::string& source = "<string>");

std::vector<InjectionSpec> load_traffic_spec(const std::filesystem::path& path);

}  // namespace vclink
