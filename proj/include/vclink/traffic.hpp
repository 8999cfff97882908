#pragma once

// Typed statistical traffic: each injection spec is one data type whose
// payload words are drawn in order from a generated stream, a synthetic
// image or a payload file.

#include "vclink/codecs.hpp"
#include "vclink/stream_stats.hpp"
#include "vclink/topology.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace vclink {

// Words with `msb_count` strongly correlated upper bits, see
// generate_correlated_msb_stream.
struct CorrelatedMsbPayload {
    unsigned msb_count = 8;
    double rho = 0.99;
    std::size_t length = 100000;
    std::uint64_t seed = 0;
};

// Smooth grey-scale scene plus Gaussian pixel noise, 8 bits per pixel.
struct SyntheticImagePayload {
    unsigned width = 512;
    unsigned height = 512;
    double brightness = 1.0;  // scales the scene, < 1 for darker captures
    double noise = 2.0;       // pixel noise std
    std::uint64_t seed = 0;
};

enum class PayloadFormat { Raw, Pgm, StreamBinary, StreamCsv };

struct PayloadFile {
    std::filesystem::path path;
    PayloadFormat format = PayloadFormat::Raw;
};

using PayloadSource = std::variant<StreamSpec, CorrelatedMsbPayload, SyntheticImagePayload, PayloadFile>;

struct InjectionSpec {
    std::string name;
    Coord source;
    Coord destination;
    std::uint32_t type_id = 0;  // 0-based; the head type is the last one
    PayloadSource payload;
    double rate = 0.0;  // packets per PE cycle
    unsigned priority = 0;  // 0 is the highest priority class
};

// Throws ValidationError on unknown nodes, rate outside [0,1] or a payload
// that cannot fill flits of `flit_width` bits.
void validate_traffic(const std::vector<InjectionSpec>& specs, const Topology& topo, unsigned flit_width);

std::vector<std::uint8_t> synthesize_image(const SyntheticImagePayload& spec);

struct GreyImage {
    unsigned width = 0;
    unsigned height = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};
GreyImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GreyImage& image);

// Packs bytes big-endian into words of flit_width bits (flit_width / 8 bytes
// per word, first byte most significant); a trailing partial word is zero padded.
std::vector<std::uint64_t> pack_bytes(std::span<const std::uint8_t> bytes, unsigned flit_width);

// The full payload word sequence of a source, before any coding.
std::vector<std::uint64_t> materialize_payload(const PayloadSource& source, unsigned flit_width);

// Runtime state of one injection spec inside a simulation.
class TrafficSource {
public:
    TrafficSource(InjectionSpec spec, std::vector<std::uint64_t> payload, unsigned flit_width, CodecSpec codec,
                  std::uint64_t seed);

    const InjectionSpec& spec() const { return spec_; }
    // One Bernoulli trial at the spec rate.
    bool trial() { return rate_ > 0.0 && bernoulli_(rng_); }
    // Next `count` payload words, encoded; wraps to the start when exhausted.
    std::vector<std::uint64_t> next_payload(std::size_t count);
    std::uint64_t consumed() const { return consumed_; }
    std::uint64_t recycles() const { return recycles_; }

private:
    InjectionSpec spec_;
    std::vector<std::uint64_t> payload_;
    double rate_;
    std::mt19937_64 rng_;
    std::bernoulli_distribution bernoulli_;
    Codec codec_;
    std::size_t pos_ = 0;
    std::uint64_t consumed_ = 0;
    std::uint64_t recycles_ = 0;
};

// Bernoulli arrival process in isolation: the PE cycles (0-based) at which
// packets are created over `pe_cycles` cycles, assuming the NI never blocks.
std::vector<std::uint64_t> inject_packets(const InjectionSpec& spec, std::uint64_t pe_cycles, std::uint64_t seed);

// Per-source RNG seed derived from the run seed.
std::uint64_t source_seed(std::uint64_t run_seed, std::size_t index);

}  // namespace vclink
