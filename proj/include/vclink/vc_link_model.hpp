#pragma once

// Link switching and bit probabilities under virtual-channel multiplexing,
// estimated from per-type statistics and the link's data-flow matrix.

#include "vclink/energy_model.hpp"
#include "vclink/stream_stats.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vclink {

// Joint distribution over consecutive link-cycle states. With n types,
// state x in [0, n) means "transmitting a word of type x" and x + n means
// "idle, holding the last word of type x". Type n - 1 is the head-flit type
// by convention.
struct DataFlowMatrix {
    Matrix M;
    std::uint32_t types = 0;
    std::uint64_t cycles = 0;  // observed link cycles (pairs = cycles - 1)
    std::string link;

    Eigen::Index active(std::uint32_t x) const { return x; }
    Eigen::Index idle(std::uint32_t x) const { return static_cast<Eigen::Index>(x) + types; }

    // Fraction of link cycles carrying a flit: sum_{x,y} M(x,y) + M(x+n,y).
    double active_fraction() const;
    // Per-type active frequency f_y = sum_x M(x,y) + M(x+n,y).
    Vector type_frequency() const;
    // Weight of T^{x->y} in the link switching sum.
    double transition_weight(std::uint32_t x, std::uint32_t y) const
    {
        return M(active(x), active(y)) + M(idle(x), active(y));
    }

    // Throws ValidationError on negative entries, mass != 1 or idle-state
    // transitions that change the held type.
    void validate(double tolerance = 1e-9) const;

    static DataFlowMatrix single_type_active();
};

void write_data_flow_csv(const std::filesystem::path& path, const DataFlowMatrix& m);
DataFlowMatrix read_data_flow_csv(const std::filesystem::path& path);

struct TypeStats {
    BitStats bits;
    SwitchingMatrix sequential;
};

// Statistics for types 0..n-1, all of the same width.
struct LinkTypeStats {
    std::vector<TypeStats> types;

    unsigned width() const { return types.empty() ? 0u : types.front().bits.width(); }
    std::uint32_t count() const { return static_cast<std::uint32_t>(types.size()); }
    void validate() const;

    static TypeStats from_words(std::span<const std::uint64_t> words, unsigned width);
};

// T^{x->y} for distinct, mutually uncorrelated streams:
// E{db_i db_j} = S^y_ij + S^x_ij - S^y_ii S^x_jj - S^x_ii S^y_jj.
SwitchingMatrix mux_switching(const BitStats& from, const BitStats& to);

SwitchingMatrix link_switching(const LinkTypeStats& stats, const DataFlowMatrix& m);
// Baseline that ignores multiplexing: sum_y f_y T^y.
SwitchingMatrix standard_link_switching(const LinkTypeStats& stats, const DataFlowMatrix& m);

enum class BitProbabilityMode {
    Corrected,  // adds the idle->idle mass so the weights sum to one
    Literal,    // the printed three-term sum only
};

Vector link_bit_probabilities(const LinkTypeStats& stats, const DataFlowMatrix& m,
                              BitProbabilityMode mode = BitProbabilityMode::Corrected);

struct EnergyReportOptions {
    // Type excluded from payload accounting; defaults to the last type when
    // more than one type exists.
    std::optional<std::uint32_t> head_type;
    // Payload bits carried per flit; defaults to the link width.
    std::optional<unsigned> payload_bits;
    BitProbabilityMode p_mode = BitProbabilityMode::Corrected;
};

struct EnergyFigures {
    double normalized_per_cycle = 0.0;  // aF
    double per_cycle_fj = 0.0;
    std::optional<double> per_flit_fj;
    std::optional<double> per_payload_byte_fj;
};

struct LinkEnergyReport {
    std::string link;
    double active_fraction = 0.0;
    double payload_bytes_per_cycle = 0.0;
    EnergyFigures model;
    EnergyFigures standard;
    SwitchingMatrix t_link;
    Vector p_link;
};

LinkEnergyReport link_energy_report(const LinkTypeStats& stats, const DataFlowMatrix& m,
                                    const CapacitanceModel& cap, const TechnologyParams& tech,
                                    const EnergyReportOptions& options = {});

// Converts a per-cycle normalized energy into the per-flit and per-byte
// figures for a link with the given activity.
EnergyFigures energy_figures(double normalized_per_cycle, double active_fraction, double payload_bytes_per_cycle,
                             const TechnologyParams& tech);

}  // namespace vclink
