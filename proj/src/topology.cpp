#include "vclink/topology.hpp"

#include "vclink/error.hpp"

#include <charconv>

namespace vclink {

std::string Coord::str() const
{
    return std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z);
}

Coord parse_coord(std::string_view text)
{
    std::array<int, 3> v{0, 0, 0};
    std::size_t k = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        if (k == 3) throw ValidationError("coordinate '" + std::string(text) + "' has more than 3 components");
        auto part = text.substr(pos, comma - pos);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v[k]);
        if (ec != std::errc() || p != part.data() + part.size() || part.empty())
            throw ValidationError("malformed coordinate '" + std::string(text) + "'");
        ++k;
        pos = comma + 1;
    }
    if (k < 2) throw ValidationError("coordinate '" + std::string(text) + "' needs at least x,y");
    return {v[0], v[1], v[2]};
}

std::string_view port_name(Port p)
{
    switch (p) {
    case Port::Local: return "local";
    case Port::XPlus: return "+x";
    case Port::XMinus: return "-x";
    case Port::YPlus: return "+y";
    case Port::YMinus: return "-y";
    case Port::ZPlus: return "+z";
    case Port::ZMinus: return "-z";
    }
    return "?";
}

Port opposite(Port p)
{
    switch (p) {
    case Port::Local: return Port::Local;
    case Port::XPlus: return Port::XMinus;
    case Port::XMinus: return Port::XPlus;
    case Port::YPlus: return Port::YMinus;
    case Port::YMinus: return Port::YPlus;
    case Port::ZPlus: return Port::ZMinus;
    case Port::ZMinus: return Port::ZPlus;
    }
    return Port::Local;
}

Coord step(Coord c, Port p)
{
    switch (p) {
    case Port::Local: break;
    case Port::XPlus: ++c.x; break;
    case Port::XMinus: --c.x; break;
    case Port::YPlus: ++c.y; break;
    case Port::YMinus: --c.y; break;
    case Port::ZPlus: ++c.z; break;
    case Port::ZMinus: --c.z; break;
    }
    return c;
}

Topology::Topology(int dim_x, int dim_y, int dim_z, std::vector<LayerExtent> restricted)
    : dim_x_(dim_x), dim_y_(dim_y), dim_z_(dim_z), restricted_(std::move(restricted))
{
    if (dim_x < 1 || dim_y < 1 || dim_z < 1)
        throw ValidationError("topology dimensions must be >= 1 (got " + std::to_string(dim_x) + "x" +
                              std::to_string(dim_y) + "x" + std::to_string(dim_z) + ")");
    for (const auto& l : restricted_) {
        if (l.z < 0 || l.z >= dim_z || l.x_min < 0 || l.x_max >= dim_x || l.x_min > l.x_max || l.y_min < 0 ||
            l.y_max >= dim_y || l.y_min > l.y_max)
            throw ValidationError("layer extent for z=" + std::to_string(l.z) + " lies outside the mesh");
    }
    index_.assign(static_cast<std::size_t>(dim_x) * dim_y * dim_z, -1);
    for (int z = 0; z < dim_z; ++z)
        for (int y = 0; y < dim_y; ++y)
            for (int x = 0; x < dim_x; ++x) {
                const Coord c{x, y, z};
                if (!contains(c)) continue;
                index_[static_cast<std::size_t>((z * dim_y + y) * dim_x + x)] =
                    static_cast<std::int32_t>(coords_.size());
                coords_.push_back(c);
            }
}

bool Topology::contains(Coord c) const
{
    if (c.x < 0 || c.y < 0 || c.z < 0 || c.x >= dim_x_ || c.y >= dim_y_ || c.z >= dim_z_) return false;
    for (const auto& l : restricted_)
        if (l.z == c.z) return c.x >= l.x_min && c.x <= l.x_max && c.y >= l.y_min && c.y <= l.y_max;
    return true;
}

std::optional<std::uint32_t> Topology::index_of(Coord c) const
{
    if (c.x < 0 || c.y < 0 || c.z < 0 || c.x >= dim_x_ || c.y >= dim_y_ || c.z >= dim_z_) return std::nullopt;
    const auto v = index_[static_cast<std::size_t>((c.z * dim_y_ + c.y) * dim_x_ + c.x)];
    if (v < 0) return std::nullopt;
    return static_cast<std::uint32_t>(v);
}

std::uint32_t Topology::require_index(Coord c) const
{
    auto i = index_of(c);
    if (!i) throw ValidationError("node (" + c.str() + ") is not part of the topology");
    return *i;
}

Port route_xyz(const Topology& topo, Coord current, Coord dest)
{
    if (!topo.contains(current)) throw ValidationError("route_xyz: current node (" + current.str() + ") out of grid");
    if (!topo.contains(dest)) throw ValidationError("route_xyz: destination (" + dest.str() + ") out of grid");
    Port p = Port::Local;
    if (dest.x != current.x)
        p = dest.x > current.x ? Port::XPlus : Port::XMinus;
    else if (dest.y != current.y)
        p = dest.y > current.y ? Port::YPlus : Port::YMinus;
    else if (dest.z != current.z)
        p = dest.z > current.z ? Port::ZPlus : Port::ZMinus;
    if (p != Port::Local && !topo.contains(step(current, p)))
        throw ValidationError("route_xyz: unreachable, next hop (" + step(current, p).str() + ") from (" +
                              current.str() + ") towards (" + dest.str() + ") is not in the topology");
    return p;
}

}  // namespace vclink
