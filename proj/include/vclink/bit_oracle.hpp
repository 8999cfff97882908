#pragma once

// Bit-level reference: exact switching, bit probabilities and energy of an
// explicit per-cycle link trace. Runtime is linear in the trace length.

#include "vclink/energy_model.hpp"
#include "vclink/stream_stats.hpp"
#include "vclink/vc_link_model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace vclink {

// One link cycle. For idle cycles `word` and `type` are the held pattern and
// its type; the link starts out holding an all-zeros word of the head type.
struct LinkCycle {
    std::uint64_t word = 0;
    std::uint32_t type = 0;
    bool idle = false;
};

struct LinkTrace {
    unsigned width = 0;
    std::uint32_t types = 1;
    std::vector<LinkCycle> cycles;

    std::size_t size() const { return cycles.size(); }
    std::uint32_t head_type() const { return types - 1; }
    std::uint64_t active_cycles() const;

    // Appends a transmitted word / an idle cycle holding the last value.
    void push_active(std::uint64_t word, std::uint32_t type);
    void push_idle();

    // Trace of back-to-back transmissions, `types[k]` tagging `words[k]`.
    static LinkTrace from_words(std::span<const std::uint64_t> words, std::span<const std::uint32_t> types,
                                unsigned width, std::uint32_t type_count);
};

struct ExactSwitching {
    SwitchingMatrix t;
    Vector p;  // held-value bit frequencies over cycles 2..end
    std::uint64_t transitions = 0;
};

ExactSwitching exact_switching(const LinkTrace& trace);

struct ExactEnergy {
    double normalized_total = 0.0;      // aF, summed over all transitions
    double normalized_per_cycle = 0.0;  // aF per transition
    double total_fj = 0.0;
    double per_cycle_fj = 0.0;
    std::uint64_t transitions = 0;
    std::uint64_t active_cycles = 0;
};

// Sums the energy of every individual transition. For TSV links the
// capacitance is evaluated once from the trace's global bit probabilities.
ExactEnergy exact_energy(const LinkTrace& trace, const CapacitanceModel& cap, const TechnologyParams& tech);

// Recounts the data-flow matrix directly from the trace.
DataFlowMatrix count_data_flow(const LinkTrace& trace, const std::string& link = {});

// Protocol files: "# link=<id> width=<N> n=<types>", then one
// "cycle,type_id|IDLE,hexword" record per cycle (type ids are 1-based).
void write_link_protocol(std::ostream& out, const LinkTrace& trace, const std::string& link);
void write_link_protocol(const std::filesystem::path& path, const LinkTrace& trace, const std::string& link);
LinkTrace read_link_protocol(std::istream& in, const std::string& source = "<stream>");
LinkTrace replay_link_protocol(const std::filesystem::path& path);

}  // namespace vclink
