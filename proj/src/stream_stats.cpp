#include "vclink/stream_stats.hpp"

#include "vclink/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace vclink {

namespace {

// Shape parameter of the log-normal marginal before rescaling.
constexpr double kLogNormalShape = 0.5;

std::uint64_t to_word(double value, unsigned width)
{
    const double top = static_cast<double>(width_mask(width));
    const double r = std::nearbyint(value);
    if (!(r > 0.0)) return 0;  // also catches NaN
    if (r >= top) return width_mask(width);
    return static_cast<std::uint64_t>(r);
}

// Bit-sliced view of a word sequence: column i holds bit i of every word,
// packed 64 positions per block.
class BitColumns {
public:
    BitColumns(std::span<const std::uint64_t> words, unsigned width)
        : width_(width), blocks_((words.size() + 63) / 64), bits_(std::size_t{width} * blocks_, 0)
    {
        for (std::size_t t = 0; t < words.size(); ++t) {
            std::uint64_t w = words[t];
            const std::size_t block = t / 64;
            const std::uint64_t bit = std::uint64_t{1} << (t % 64);
            while (w) {
                const unsigned i = static_cast<unsigned>(std::countr_zero(w));
                if (i >= width_) break;
                bits_[i * blocks_ + block] |= bit;
                w &= w - 1;
            }
        }
    }

    std::span<const std::uint64_t> column(unsigned i) const
    {
        return {bits_.data() + std::size_t{i} * blocks_, blocks_};
    }
    std::size_t blocks() const { return blocks_; }

private:
    unsigned width_;
    std::size_t blocks_;
    std::vector<std::uint64_t> bits_;
};

std::uint64_t popcount_and(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b)
{
    std::uint64_t n = 0;
    for (std::size_t k = 0; k < a.size(); ++k) n += static_cast<std::uint64_t>(std::popcount(a[k] & b[k]));
    return n;
}

void put_u64(std::ostream& out, std::uint64_t v)
{
    std::array<char, 8> buf{};
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out.write(buf.data(), 8);
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path)
{
    std::array<unsigned char, 8> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), 8))
        throw ValidationError(path.string() + ": truncated stream file");
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | buf[k];
    return v;
}

void check_width(unsigned width)
{
    if (width < 1 || width > kMaxWidth)
        throw ValidationError("stream width " + std::to_string(width) + " outside [1, " +
                              std::to_string(kMaxWidth) + "]");
}

}  // namespace

void DataStream::validate() const
{
    check_width(width);
    const std::uint64_t mask = width_mask(width);
    for (std::size_t t = 0; t < words.size(); ++t)
        if (words[t] & ~mask)
            throw ValidationError("word " + std::to_string(t) + " does not fit in " + std::to_string(width) +
                                  " bits");
}

SwitchingMatrix SwitchingMatrix::from_parts(const Vector& self, const Matrix& correlated)
{
    const Eigen::Index n = self.size();
    SwitchingMatrix out{Matrix(n, n)};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out.T(i, j) = (i == j) ? self(i) : self(i) - correlated(i, j);
    return out;
}

Distribution parse_distribution(std::string_view name)
{
    if (name == "uniform") return Distribution::Uniform;
    if (name == "gaussian" || name == "normal") return Distribution::Gaussian;
    if (name == "lognormal" || name == "log-normal") return Distribution::LogNormal;
    throw ValidationError("unknown distribution '" + std::string(name) + "'");
}

std::string_view to_string(Distribution d)
{
    switch (d) {
    case Distribution::Uniform: return "uniform";
    case Distribution::Gaussian: return "gaussian";
    case Distribution::LogNormal: return "lognormal";
    }
    return "?";
}

void StreamSpec::validate() const
{
    check_width(width);
    if (distribution == Distribution::Uniform) return;
    const double lo = std::exp2(width / 10.0);
    const double hi = std::exp2(static_cast<double>(width) - 1.0);
    if (!(sigma >= lo && sigma <= hi))
        throw ValidationError("sigma " + format_double(sigma) + " outside [2^(N/10), 2^(N-1)] = [" +
                              format_double(lo) + ", " + format_double(hi) + "]");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho " + format_double(rho) + " outside [0, 1]");
}

DataStream generate_stream(const StreamSpec& spec)
{
    spec.validate();
    DataStream out;
    out.width = spec.width;
    out.words.reserve(spec.length);
    std::mt19937_64 rng(spec.seed);

    if (spec.distribution == Distribution::Uniform) {
        std::uniform_int_distribution<std::uint64_t> uni(0, width_mask(spec.width));
        for (std::size_t t = 0; t < spec.length; ++t) out.words.push_back(uni(rng));
        return out;
    }

    // Unit-variance AR(1) driver; scaled per distribution below.
    std::normal_distribution<double> normal(0.0, 1.0);
    const double innovation = std::sqrt(std::max(0.0, 1.0 - spec.rho * spec.rho));
    const double centre = std::exp2(static_cast<double>(spec.width) - 1.0);

    const double s = kLogNormalShape;
    const double ln_mean = std::exp(0.5 * s * s);
    const double ln_std = std::sqrt((std::exp(s * s) - 1.0) * std::exp(s * s));

    double z = normal(rng);
    for (std::size_t t = 0; t < spec.length; ++t) {
        if (t > 0) z = spec.rho * z + innovation * normal(rng);
        double x = 0.0;
        if (spec.distribution == Distribution::Gaussian)
            x = spec.sigma * z;
        else
            x = spec.sigma * (std::exp(s * z) - ln_mean) / ln_std;
        out.words.push_back(to_word(centre + x, spec.width));
    }
    return out;
}

DataStream generate_correlated_msb_stream(unsigned width, unsigned msb_count, double rho,
                                          std::size_t length, std::uint64_t seed)
{
    check_width(width);
    if (msb_count > width) throw ValidationError("msb_count exceeds width");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho outside [0, 1]");

    DataStream out;
    out.width = width;
    out.words.reserve(length);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const unsigned low_bits = width - msb_count;
    std::uniform_int_distribution<std::uint64_t> low(0, low_bits ? width_mask(low_bits) : 0);
    const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double levels = std::exp2(static_cast<double>(msb_count));

    double z = normal(rng);
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) z = rho * z + innovation * normal(rng);
        const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
        auto high = static_cast<std::uint64_t>(std::min(levels - 1.0, std::floor(u * levels)));
        std::uint64_t word = (msb_count ? high << low_bits : 0);
        if (low_bits) word |= low(rng);
        out.words.push_back(word);
    }
    return out;
}

MuxResult multiplex_streams(std::span<const DataStream> streams, double mux_prob, std::uint64_t seed,
                            std::optional<std::size_t> length)
{
    if (streams.empty()) throw ValidationError("multiplex_streams: empty stream list");
    if (streams.size() < 2) throw ValidationError("multiplex_streams: need at least two streams");
    if (!(mux_prob >= 0.0 && mux_prob <= 1.0)) throw ValidationError("mux_prob outside [0, 1]");
    const unsigned width = streams.front().width;
    std::size_t total = 0;
    for (const auto& s : streams) {
        if (s.width != width) throw ValidationError("multiplex_streams: width mismatch");
        if (s.empty()) throw ValidationError("multiplex_streams: empty input stream");
        total += s.size();
    }
    const std::size_t out_len = length.value_or(total);

    MuxResult result;
    result.stream.width = width;
    result.stream.words.reserve(out_len);
    result.sources.reserve(out_len);

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution change(mux_prob);
    std::uniform_int_distribution<std::size_t> other(0, streams.size() - 2);
    std::vector<std::size_t> cursor(streams.size(), 0);
    std::size_t active = 0;
    for (std::size_t pos = 0; pos < out_len; ++pos) {
        if (pos > 0 && change(rng)) {
            std::size_t next = other(rng);
            if (next >= active) ++next;
            active = next;
        }
        const auto& src = streams[active];
        if (cursor[active] == src.size()) cursor[active] = 0;
        result.stream.words.push_back(src.words[cursor[active]++]);
        result.sources.push_back(static_cast<std::uint32_t>(active));
    }
    return result;
}

BitStats compute_bit_stats(std::span<const std::uint64_t> words, unsigned width)
{
    check_width(width);
    if (words.empty()) throw ValidationError("compute_bit_stats: empty stream");
    const BitColumns cols(words, width);
    const double n = static_cast<double>(words.size());
    BitStats stats{Matrix(width, width)};
    for (unsigned i = 0; i < width; ++i) {
        for (unsigned j = i; j < width; ++j) {
            const double v = static_cast<double>(popcount_and(cols.column(i), cols.column(j))) / n;
            stats.S(i, j) = v;
            stats.S(j, i) = v;
        }
    }
    return stats;
}

BitStats compute_bit_stats(const DataStream& stream)
{
    return compute_bit_stats(stream.words, stream.width);
}

SwitchingMatrix compute_sequential_switching(std::span<const std::uint64_t> words, unsigned width)
{
    check_width(width);
    if (words.size() < 2) throw ValidationError("compute_sequential_switching: stream shorter than 2");

    const std::size_t pairs = words.size() - 1;
    std::vector<std::uint64_t> toggles(pairs);
    for (std::size_t t = 0; t < pairs; ++t) toggles[t] = words[t] ^ words[t + 1];
    const BitColumns prev(words.first(pairs), width);
    const BitColumns tog(toggles, width);

    const double n = static_cast<double>(pairs);
    Vector self(width);
    Matrix corr = Matrix::Zero(width, width);
    std::vector<std::uint64_t> both(tog.blocks());
    for (unsigned i = 0; i < width; ++i) {
        const auto ti = tog.column(i);
        std::uint64_t s = 0;
        for (auto b : ti) s += static_cast<std::uint64_t>(std::popcount(b));
        self(i) = static_cast<double>(s) / n;
        for (unsigned j = i + 1; j < width; ++j) {
            const auto tj = tog.column(j);
            const auto pi = prev.column(i);
            const auto pj = prev.column(j);
            std::int64_t same = 0;
            std::int64_t opposite = 0;
            for (std::size_t k = 0; k < ti.size(); ++k) {
                const std::uint64_t both_toggle = ti[k] & tj[k];
                const std::uint64_t differ = pi[k] ^ pj[k];
                opposite += std::popcount(both_toggle & differ);
                same += std::popcount(both_toggle & ~differ);
            }
            const double v = static_cast<double>(same - opposite) / n;
            corr(i, j) = v;
            corr(j, i) = v;
        }
    }
    return SwitchingMatrix::from_parts(self, corr);
}

SwitchingMatrix compute_sequential_switching(const DataStream& stream)
{
    return compute_sequential_switching(stream.words, stream.width);
}

void write_stream_binary(const std::filesystem::path& path, const DataStream& stream)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    const char magic[8] = {'N', 'E', 'S', 'T', 'R', 'M', 0, 0};
    out.write(magic, 8);
    put_u64(out, stream.width);
    put_u64(out, stream.words.size());
    for (auto w : stream.words) put_u64(out, w);
    if (!out) throw RuntimeError("write failed: " + path.string());
}

DataStream read_stream_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    char magic[8] = {};
    if (!in.read(magic, 8) || std::memcmp(magic, "NESTRM", 6) != 0)
        throw ValidationError(path.string() + ": not a stream file (bad magic)");
    DataStream s;
    s.width = static_cast<unsigned>(get_u64(in, path));
    const std::uint64_t count = get_u64(in, path);
    check_width(s.width);
    s.words.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) s.words.push_back(get_u64(in, path));
    s.validate();
    return s;
}

void write_stream_csv(const std::filesystem::path& path, const DataStream& stream)
{
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << "# width=" << stream.width << " count=" << stream.words.size() << '\n';
    for (auto w : stream.words) out << w << '\n';
    if (!out) throw RuntimeError("write failed: " + path.string());
}

DataStream read_stream_csv(const std::filesystem::path& path, std::optional<unsigned> width)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    DataStream s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (auto w = parse_header_line(line).get("width"); w && !width) width = std::stoul(*w);
            continue;
        }
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (ec != std::errc() || ptr != line.data() + line.size())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed word '" + line + "'");
        s.words.push_back(v);
    }
    if (!width) throw ValidationError(path.string() + ": stream width not given");
    s.width = *width;
    s.validate();
    return s;
}

void write_bit_stats_csv(const std::filesystem::path& path, const BitStats& stats)
{
    write_matrix_csv(path, stats.S,
                     {{"kind", "S"}, {"rows", std::to_string(stats.width())}, {"cols", std::to_string(stats.width())}});
}

BitStats read_bit_stats_csv(const std::filesystem::path& path)
{
    auto f = read_matrix_csv(path);
    if (f.values.rows() != f.values.cols()) throw ValidationError(path.string() + ": S matrix not square");
    return {std::move(f.values)};
}

void write_switching_csv(const std::filesystem::path& path, const SwitchingMatrix& t)
{
    write_matrix_csv(path, t.T,
                     {{"kind", "T"}, {"rows", std::to_string(t.width())}, {"cols", std::to_string(t.width())}});
}

SwitchingMatrix read_switching_csv(const std::filesystem::path& path)
{
    auto f = read_matrix_csv(path);
    if (f.values.rows() != f.values.cols()) throw ValidationError(path.string() + ": T matrix not square");
    return {std::move(f.values)};
}

}  // namespace vclink
