#pragma once

// Experiment drivers behind the sweep and case-study subcommands: model vs
// bit-level switching accuracy for multiplexed synthetic streams, link
// energy under multiplexing and coding, and the 3D case study.

#include "vclink/bit_oracle.hpp"
#include "vclink/codecs.hpp"
#include "vclink/config.hpp"
#include "vclink/energy_model.hpp"
#include "vclink/report_writer.hpp"
#include "vclink/stream_stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace vclink {

// Runs fn(0..count-1) on up to `jobs` threads. Exceptions are rethrown.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

// Random distribution, sigma log-uniform in [2^(N/10), 2^(N-1)], rho uniform in [0,1].
StreamSpec random_stream_spec(std::mt19937_64& rng, unsigned width, std::size_t length);

struct SwitchingComparison {
    SwitchingMatrix model;
    SwitchingMatrix oracle;
    double switch_rate = 0.0;  // fraction of positions where the source changed
};

// Multiplexes `streams`, then estimates T from per-stream statistics and
// the recounted data-flow matrix, and measures it on the trace itself.
SwitchingComparison compare_mux_switching(std::span<const DataStream> streams, double mux_prob, std::uint64_t seed,
                                          std::size_t length);

struct AccuracyPoint {
    unsigned width = 0;
    unsigned streams = 0;
    double mux_prob = 0.0;
    std::size_t runs = 0;
    double rmse_pp = 0.0;           // all entries of T
    double mae_pp = 0.0;            // maximum absolute error over all runs and entries
    double rmse_self_pp = 0.0;      // diagonal only
    double rmse_coupling_pp = 0.0;  // off-diagonal only
};

AccuracyPoint accuracy_point(unsigned width, unsigned streams, double mux_prob, std::size_t runs,
                             std::size_t length, std::uint64_t seed, unsigned jobs = 1);

struct MuxEnergy {
    double model_per_cycle_fj = 0.0;
    double oracle_per_cycle_fj = 0.0;
    double model_fj_per_byte = 0.0;
    double oracle_fj_per_byte = 0.0;
    double switch_rate = 0.0;
};

// Each stream is encoded with `codec` on its own, then the coded streams are
// multiplexed back to back (no idle cycles). Bytes count data bits only.
MuxEnergy mux_energy(std::span<const DataStream> streams, const CodecSpec& codec, double mux_prob,
                     std::uint64_t seed, const CapacitanceModel& cap, const TechnologyParams& tech,
                     std::optional<std::size_t> length = std::nullopt);

// Coupling-dominated stand-in parasitics, aF.
struct TemplateParasitics {
    double ground_2d = 20.0;
    double couple_2d = 100.0;
    unsigned range_2d = 2;
    double c0_neighbor = 40.0;
    double dc_neighbor = -6.0;
    double c0_ground = 30.0;
    double dc_ground = -4.0;
};
Capacitance2D default_2d_template(unsigned width, const TemplateParasitics& t = {});
// Square-ish TSV array: cols = ceil(sqrt(width)), rows as needed.
Capacitance3D default_3d_template(unsigned width, const TemplateParasitics& t = {});

struct CaseStudyCodec {
    CodecSpec codec;
    EnergyAnalysis model;                    // model and standard estimates
    std::vector<ExactEnergy> oracle;         // per row of `model`, when requested
    double oracle_total_fj = 0.0;
};

struct CaseStudyResult {
    unsigned vc_count = 0;
    std::uint64_t cycles = 0;
    LatencySummary flit_latency;
    LatencySummary network_latency;
    std::uint64_t packets_delivered = 0;
    std::vector<CaseStudyCodec> codecs;
};

struct CaseStudyOptions {
    std::optional<unsigned> vc_count;  // overrides the config
    std::uint64_t cycles = 100000;
    std::uint64_t seed = 1;
    std::vector<CodecSpec> codecs{CodecSpec{}};
    bool oracle = true;
    unsigned jobs = 1;
};

// Simulates the configuration once per codec (payload words encoded at the
// sources) and evaluates every router link with the model, the standard
// model and, optionally, the bit-level oracle. Codecs must keep the width.
CaseStudyResult run_case_study(const SimulationConfig& config, const EnergyAnalysisOptions& energy,
                               const CaseStudyOptions& options);

}  // namespace vclink
