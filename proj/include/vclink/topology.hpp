#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vclink {

struct Coord {
    int x = 0;
    int y = 0;
    int z = 0;

    auto operator<=>(const Coord&) const = default;
    std::string str() const;
};

// Parses "x,y,z" (or "x,y" with z = 0).
Coord parse_coord(std::string_view text);

enum class Port : std::uint8_t { Local = 0, XPlus, XMinus, YPlus, YMinus, ZPlus, ZMinus };
inline constexpr int kPortCount = 7;

std::string_view port_name(Port p);
Port opposite(Port p);
Coord step(Coord c, Port p);

// Rectangle of routers present on one layer.
struct LayerExtent {
    int z = 0;
    int x_min = 0, x_max = 0;
    int y_min = 0, y_max = 0;
};

// k-ary 3D mesh; a layer may be restricted to a sub-rectangle, which is how
// a stacked die smaller than the one above it is described.
class Topology {
public:
    Topology() = default;
    Topology(int dim_x, int dim_y, int dim_z, std::vector<LayerExtent> restricted = {});

    int dim_x() const { return dim_x_; }
    int dim_y() const { return dim_y_; }
    int dim_z() const { return dim_z_; }

    bool contains(Coord c) const;
    std::size_t node_count() const { return coords_.size(); }
    const std::vector<Coord>& nodes() const { return coords_; }
    std::optional<std::uint32_t> index_of(Coord c) const;
    std::uint32_t require_index(Coord c) const;
    Coord coord(std::uint32_t index) const { return coords_.at(index); }

private:
    int dim_x_ = 0, dim_y_ = 0, dim_z_ = 0;
    std::vector<LayerExtent> restricted_;
    std::vector<Coord> coords_;
    std::vector<std::int32_t> index_;  // dense grid -> node index, -1 if absent
};

// Dimension-order routing: resolve X, then Y, then Z; Local at the destination.
// Throws ValidationError if either endpoint or the next hop is not in the topology.
Port route_xyz(const Topology& topo, Coord current, Coord dest);

}  // namespace vclink
