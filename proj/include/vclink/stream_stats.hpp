#pragma once

// Synthetic data streams and their bit-level statistics: the per-stream
// bit-probability matrix S (E{b_i b_j}) and the sequential switching
// matrix T (self switching on the diagonal, E{db_i^2 - db_i db_j} off it).

#include "vclink/matrix_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vclink {

inline constexpr unsigned kMaxWidth = 63;

inline std::uint64_t width_mask(unsigned width)
{
    return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

struct DataStream {
    std::vector<std::uint64_t> words;
    unsigned width = 0;
    std::uint32_t type_id = 1;

    std::size_t size() const { return words.size(); }
    bool empty() const { return words.empty(); }
    // Throws ValidationError if width is 0 or too large, or a word does not fit.
    void validate() const;
};

struct BitStats {
    Matrix S;  // S(i,j) = P(bit i and bit j both 1)

    unsigned width() const { return static_cast<unsigned>(S.rows()); }
    Vector p() const { return S.diagonal(); }
};

// T(i,i) = E{db_i^2}; T(i,j) = E{db_i^2} - E{db_i db_j} for i != j.
// Row i carries bit i's self switching, so T is not symmetric in general.
struct SwitchingMatrix {
    Matrix T;

    unsigned width() const { return static_cast<unsigned>(T.rows()); }
    Vector self_switching() const { return T.diagonal(); }
    // E{db_i db_j}; equals self switching on the diagonal.
    double correlated(Eigen::Index i, Eigen::Index j) const
    {
        return i == j ? T(i, i) : T(i, i) - T(i, j);
    }

    static SwitchingMatrix zero(unsigned width) { return {Matrix::Zero(width, width)}; }
    // Builds T from the self-switching vector and the correlated matrix
    // (its diagonal is ignored).
    static SwitchingMatrix from_parts(const Vector& self, const Matrix& correlated);
};

enum class Distribution { Uniform, Gaussian, LogNormal };

Distribution parse_distribution(std::string_view name);
std::string_view to_string(Distribution d);

struct StreamSpec {
    Distribution distribution = Distribution::Uniform;
    unsigned width = 16;
    std::size_t length = 0;
    double sigma = 0.0;  // pattern units, ignored for uniform
    double rho = 0.0;    // lag-1 correlation, ignored for uniform
    std::uint64_t seed = 0;

    void validate() const;
};

// Offset-binary words centred on 2^(N-1); AR(1) process for gaussian and
// log-normal, clamped to [0, 2^N - 1].
DataStream generate_stream(const StreamSpec& spec);

// Words whose `msb_count` upper bits follow a strongly correlated process
// with uniform marginal (Gaussian AR(1) pushed through the normal CDF) and
// whose remaining bits are uniform i.i.d.
DataStream generate_correlated_msb_stream(unsigned width, unsigned msb_count, double rho,
                                          std::size_t length, std::uint64_t seed);

struct MuxResult {
    DataStream stream;
    std::vector<std::uint32_t> sources;  // index into the input list, per output word
};

// Interleaves `streams`: at every position after the first, the active source
// changes with probability `mux_prob` to a uniformly chosen other source.
// Each source is consumed in order and restarts from its beginning when it
// runs out. `length` defaults to the summed input length.
MuxResult multiplex_streams(std::span<const DataStream> streams, double mux_prob, std::uint64_t seed,
                            std::optional<std::size_t> length = std::nullopt);

BitStats compute_bit_stats(std::span<const std::uint64_t> words, unsigned width);
BitStats compute_bit_stats(const DataStream& stream);

SwitchingMatrix compute_sequential_switching(std::span<const std::uint64_t> words, unsigned width);
SwitchingMatrix compute_sequential_switching(const DataStream& stream);

// Binary stream files: three little-endian 8-byte header fields
// ("NESTRM\0\0", width, count) followed by one 8-byte word per entry.
void write_stream_binary(const std::filesystem::path& path, const DataStream& stream);
DataStream read_stream_binary(const std::filesystem::path& path);

// CSV stream files: optional "# width=N count=C" line, then one decimal word per line.
void write_stream_csv(const std::filesystem::path& path, const DataStream& stream);
DataStream read_stream_csv(const std::filesystem::path& path, std::optional<unsigned> width = std::nullopt);

void write_bit_stats_csv(const std::filesystem::path& path, const BitStats& stats);
BitStats read_bit_stats_csv(const std::filesystem::path& path);
void write_switching_csv(const std::filesystem::path& path, const SwitchingMatrix& t);
SwitchingMatrix read_switching_csv(const std::filesystem::path& path);

}  // namespace vclink
