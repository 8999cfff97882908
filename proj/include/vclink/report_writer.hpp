#pragma once

// Post-simulation link energy analysis and the on-disk result layout:
//   <out>/M/<link>.csv            data-flow matrix per link
//   <out>/streams/type_<k>.nestrm words that entered the network, per type
//   <out>/summary.json            run parameters, counters, latency, links
//   <out>/latency.txt, utilization.txt, energy.csv (with capacitances)

#include "vclink/codecs.hpp"
#include "vclink/energy_model.hpp"
#include "vclink/noc_sim.hpp"
#include "vclink/vc_link_model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vclink {

// Encodes every payload type's words with `codec` (head type untouched,
// zero-extended to the coded width).
std::vector<std::vector<std::uint64_t>> encode_type_words(const std::vector<std::vector<std::uint64_t>>& type_words,
                                                          const CodecSpec& codec, unsigned data_width);

// Per-type statistics at `width`; types without words get zero statistics.
LinkTypeStats type_stats(const std::vector<std::vector<std::uint64_t>>& type_words, unsigned width);

struct EnergyAnalysisOptions {
    std::optional<CapacitanceModel> cap2d;  // planar links
    std::optional<CapacitanceModel> cap3d;  // vertical links
    TechnologyParams tech;
    BitProbabilityMode p_mode = BitProbabilityMode::Corrected;
    bool include_local_links = false;  // NI <-> router links
};

struct LinkEnergyRow {
    LinkInfo link;
    std::uint64_t cycles = 0;
    LinkEnergyReport report;
    double model_total_fj = 0.0;     // per-cycle estimate times observed transitions
    double standard_total_fj = 0.0;
};

struct EnergyAnalysis {
    std::vector<LinkEnergyRow> rows;
    double model_total_fj = 0.0;
    double standard_total_fj = 0.0;
    double payload_bytes = 0.0;  // payload carried over the analysed links
    double model_fj_per_byte() const { return payload_bytes > 0 ? model_total_fj / payload_bytes : 0.0; }
    double standard_fj_per_byte() const { return payload_bytes > 0 ? standard_total_fj / payload_bytes : 0.0; }
};

// Links without a matching capacitance model are skipped.
EnergyAnalysis analyze_energy(const std::vector<LinkInfo>& links, const std::vector<DataFlowMatrix>& flows,
                              const LinkTypeStats& stats, unsigned data_width, const EnergyAnalysisOptions& options);

// Stored results of a `simulate` run, enough for post-simulation analysis.
struct RunArtifacts {
    std::vector<LinkInfo> links;
    std::vector<DataFlowMatrix> flows;
    std::vector<std::vector<std::uint64_t>> type_words;
    unsigned data_width = 0;
    unsigned link_width = 0;
    CodecSpec codec;
    double clock_period = 1e-9;
};

void emit_reports(const SimulationResult& result, const std::filesystem::path& out_dir,
                  const EnergyAnalysis* energy = nullptr);
void write_energy_csv(const std::filesystem::path& path, const EnergyAnalysis& energy);
RunArtifacts load_run(const std::filesystem::path& dir);

std::string link_kind_name(LinkKind kind);

}  // namespace vclink
