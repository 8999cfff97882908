#include "vclink/vc_link_model.hpp"

#include "vclink/error.hpp"

#include <cmath>

namespace vclink {

namespace {

void check_consistent(const LinkTypeStats& stats, const DataFlowMatrix& m, const char* op)
{
    stats.validate();
    if (stats.count() != m.types)
        throw ValidationError(std::string(op) + ": data-flow matrix has " + std::to_string(m.types) +
                              " types, statistics have " + std::to_string(stats.count()));
    m.validate();
}

}  // namespace

double DataFlowMatrix::active_fraction() const
{
    return type_frequency().sum();
}

Vector DataFlowMatrix::type_frequency() const
{
    Vector f = Vector::Zero(types);
    for (std::uint32_t x = 0; x < types; ++x)
        for (std::uint32_t y = 0; y < types; ++y) f(y) += transition_weight(x, y);
    return f;
}

void DataFlowMatrix::validate(double tolerance) const
{
    const auto n = static_cast<Eigen::Index>(types);
    if (types == 0) throw ValidationError("data-flow matrix: zero types");
    if (M.rows() != 2 * n || M.cols() != 2 * n)
        throw ValidationError("data-flow matrix: expected " + std::to_string(2 * n) + "x" + std::to_string(2 * n) +
                              ", got " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    if ((M.array() < 0.0).any()) throw ValidationError("data-flow matrix: negative entry");
    if (std::abs(M.sum() - 1.0) > tolerance)
        throw ValidationError("data-flow matrix: entries sum to " + format_double(M.sum()) + ", not 1");
    for (std::uint32_t x = 0; x < types; ++x) {
        for (std::uint32_t y = 0; y < types; ++y) {
            if (x == y) continue;
            if (M(idle(x), idle(y)) != 0.0)
                throw ValidationError("data-flow matrix: idle state changes held type (" + std::to_string(x + 1) +
                                      " -> " + std::to_string(y + 1) + ")");
            if (M(active(x), idle(y)) != 0.0)
                throw ValidationError("data-flow matrix: entering idle changes held type (" +
                                      std::to_string(x + 1) + " -> " + std::to_string(y + 1) + ")");
        }
    }
}

DataFlowMatrix DataFlowMatrix::single_type_active()
{
    DataFlowMatrix m{Matrix::Zero(2, 2), 1, 0, {}};
    m.M(0, 0) = 1.0;
    return m;
}

void write_data_flow_csv(const std::filesystem::path& path, const DataFlowMatrix& m)
{
    write_matrix_csv(path, m.M,
                     {{"n", std::to_string(m.types)}, {"cycles", std::to_string(m.cycles)},
                      {"link", m.link.empty() ? std::string("-") : m.link}});
}

DataFlowMatrix read_data_flow_csv(const std::filesystem::path& path)
{
    auto f = read_matrix_csv(path);
    DataFlowMatrix m;
    const auto ctx = path.string();
    m.types = static_cast<std::uint32_t>(std::stoul(f.header.require("n", ctx)));
    m.cycles = std::stoull(f.header.require("cycles", ctx));
    m.link = f.header.get("link").value_or("");
    if (m.link == "-") m.link.clear();
    m.M = std::move(f.values);
    m.validate();
    return m;
}

void LinkTypeStats::validate() const
{
    if (types.empty()) throw ValidationError("link type statistics: no types");
    const unsigned n = width();
    for (const auto& t : types) {
        if (t.bits.width() != n || t.sequential.width() != n)
            throw ValidationError("link type statistics: width mismatch between types");
    }
}

TypeStats LinkTypeStats::from_words(std::span<const std::uint64_t> words, unsigned width)
{
    TypeStats t{compute_bit_stats(words, width), SwitchingMatrix::zero(width)};
    if (words.size() >= 2) t.sequential = compute_sequential_switching(words, width);
    return t;
}

SwitchingMatrix mux_switching(const BitStats& from, const BitStats& to)
{
    if (from.width() != to.width()) throw ValidationError("mux_switching: width mismatch");
    const Vector px = from.p();
    const Vector py = to.p();
    // E{b_i^y b_j^x} = p^y_i p^x_j under zero cross-correlation.
    const Matrix cross = py * px.transpose();
    const Matrix corr = to.S + from.S - cross - cross.transpose();
    return SwitchingMatrix::from_parts(corr.diagonal(), corr);
}

SwitchingMatrix link_switching(const LinkTypeStats& stats, const DataFlowMatrix& m)
{
    check_consistent(stats, m, "link_switching");
    const unsigned width = stats.width();
    SwitchingMatrix out = SwitchingMatrix::zero(width);
    for (std::uint32_t x = 0; x < m.types; ++x) {
        for (std::uint32_t y = 0; y < m.types; ++y) {
            const double w = m.transition_weight(x, y);
            if (w == 0.0) continue;
            if (x == y)
                out.T += w * stats.types[x].sequential.T;
            else
                out.T += w * mux_switching(stats.types[x].bits, stats.types[y].bits).T;
        }
    }
    return out;
}

SwitchingMatrix standard_link_switching(const LinkTypeStats& stats, const DataFlowMatrix& m)
{
    check_consistent(stats, m, "standard_link_switching");
    const Vector f = m.type_frequency();
    SwitchingMatrix out = SwitchingMatrix::zero(stats.width());
    for (std::uint32_t y = 0; y < m.types; ++y)
        if (f(y) != 0.0) out.T += f(y) * stats.types[y].sequential.T;
    return out;
}

Vector link_bit_probabilities(const LinkTypeStats& stats, const DataFlowMatrix& m, BitProbabilityMode mode)
{
    check_consistent(stats, m, "link_bit_probabilities");
    Vector p = Vector::Zero(stats.width());
    for (std::uint32_t x = 0; x < m.types; ++x) {
        for (std::uint32_t y = 0; y < m.types; ++y) {
            const double w = m.M(m.active(x), m.active(y)) + m.M(m.active(x), m.idle(y)) +
                             m.M(m.idle(x), m.active(y));
            if (w != 0.0) p += w * stats.types[y].bits.p();
        }
        if (mode == BitProbabilityMode::Corrected) {
            const double hold = m.M(m.idle(x), m.idle(x));
            if (hold != 0.0) p += hold * stats.types[x].bits.p();
        }
    }
    return p;
}

EnergyFigures energy_figures(double normalized_per_cycle, double active_fraction, double payload_bytes_per_cycle,
                             const TechnologyParams& tech)
{
    EnergyFigures e;
    e.normalized_per_cycle = normalized_per_cycle;
    e.per_cycle_fj = tech.to_femtojoule(normalized_per_cycle);
    if (active_fraction > 0.0) e.per_flit_fj = e.per_cycle_fj / active_fraction;
    if (payload_bytes_per_cycle > 0.0) e.per_payload_byte_fj = e.per_cycle_fj / payload_bytes_per_cycle;
    return e;
}

LinkEnergyReport link_energy_report(const LinkTypeStats& stats, const DataFlowMatrix& m,
                                    const CapacitanceModel& cap, const TechnologyParams& tech,
                                    const EnergyReportOptions& options)
{
    tech.validate();
    if (width_of(cap) != stats.width())
        throw ValidationError("link_energy_report: capacitance width " + std::to_string(width_of(cap)) +
                              " differs from link width " + std::to_string(stats.width()));

    LinkEnergyReport r;
    r.link = m.link;
    r.t_link = link_switching(stats, m);
    r.p_link = link_bit_probabilities(stats, m, options.p_mode);
    const SwitchingMatrix t_std = standard_link_switching(stats, m);

    const Vector f = m.type_frequency();
    r.active_fraction = f.sum();
    std::optional<std::uint32_t> head = options.head_type;
    if (!head && m.types > 1) head = m.types - 1;
    double payload_flits = 0.0;
    for (std::uint32_t y = 0; y < m.types; ++y)
        if (!head || y != *head) payload_flits += f(y);
    const unsigned bits = options.payload_bits.value_or(stats.width());
    r.payload_bytes_per_cycle = payload_flits * bits / 8.0;

    // Both models share p_link; only the switching estimate differs.
    r.model = energy_figures(normalized_energy(r.t_link, r.p_link, cap), r.active_fraction,
                             r.payload_bytes_per_cycle, tech);
    r.standard = energy_figures(normalized_energy(t_std, r.p_link, cap), r.active_fraction,
                                r.payload_bytes_per_cycle, tech);
    return r;
}

}  // namespace vclink
