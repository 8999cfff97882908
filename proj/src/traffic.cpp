#include "vclink/traffic.hpp"

#include "vclink/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

namespace vclink {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open payload file " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

unsigned bytes_per_flit(unsigned flit_width)
{
    if (flit_width < 8 || flit_width % 8 != 0)
        throw ValidationError("width mismatch: byte payloads need a flit width that is a multiple of 8 (got " +
                              std::to_string(flit_width) + ")");
    return flit_width / 8;
}

unsigned payload_width(const PayloadSource& source, unsigned flit_width)
{
    if (const auto* s = std::get_if<StreamSpec>(&source)) return s->width;
    return flit_width;
}

}  // namespace

std::uint64_t source_seed(std::uint64_t run_seed, std::size_t index)
{
    return splitmix64(run_seed ^ splitmix64(0xC0FFEEull + index));
}

void validate_traffic(const std::vector<InjectionSpec>& specs, const Topology& topo, unsigned flit_width)
{
    for (const auto& s : specs) {
        const std::string who = "traffic source '" + s.name + "'";
        if (!topo.contains(s.source)) throw ValidationError(who + ": unknown node (" + s.source.str() + ")");
        if (!topo.contains(s.destination))
            throw ValidationError(who + ": unknown destination node (" + s.destination.str() + ")");
        if (!(s.rate >= 0.0 && s.rate <= 1.0))
            throw ValidationError(who + ": injection rate " + std::to_string(s.rate) + " outside [0,1]");
        const unsigned w = payload_width(s.payload, flit_width);
        if (w != flit_width)
            throw ValidationError(who + ": width mismatch (payload " + std::to_string(w) + " bits, flit " +
                                  std::to_string(flit_width) + " bits)");
        if (const auto* g = std::get_if<StreamSpec>(&s.payload)) g->validate();
        if (const auto* c = std::get_if<CorrelatedMsbPayload>(&s.payload)) {
            if (c->msb_count > flit_width) throw ValidationError(who + ": msb count exceeds flit width");
            if (!(c->rho >= 0.0 && c->rho <= 1.0)) throw ValidationError(who + ": rho outside [0,1]");
            if (c->length == 0) throw ValidationError(who + ": empty payload");
        }
        if (std::holds_alternative<SyntheticImagePayload>(s.payload)) {
            const auto& im = std::get<SyntheticImagePayload>(s.payload);
            if (im.width == 0 || im.height == 0) throw ValidationError(who + ": empty image");
            bytes_per_flit(flit_width);
        }
        if (const auto* f = std::get_if<PayloadFile>(&s.payload)) {
            if (!std::filesystem::exists(f->path))
                throw ValidationError(who + ": payload file " + f->path.string() + " does not exist");
            if (f->format == PayloadFormat::Raw || f->format == PayloadFormat::Pgm) bytes_per_flit(flit_width);
        }
    }
}

std::vector<std::uint8_t> synthesize_image(const SyntheticImagePayload& spec)
{
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng), p4 = phase(rng);
    // Scene structure differs per seed so separate sensors see unrelated scenes.
    auto freq = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    const double f1 = freq(0.4, 1.2), f2 = freq(0.8, 2.5), f3 = freq(0.8, 2.5), f4 = freq(1.5, 5.0);
    const double tilt = freq(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.noise);

    std::vector<std::uint8_t> px(std::size_t{spec.width} * spec.height);
    const double two_pi = 2.0 * std::numbers::pi;
    for (unsigned y = 0; y < spec.height; ++y) {
        const double v = static_cast<double>(y) / spec.height;
        for (unsigned x = 0; x < spec.width; ++x) {
            const double u = static_cast<double>(x) / spec.width;
            double s = 128.0 + 60.0 * std::cos(two_pi * f1 * v + p1) +
                       25.0 * std::sin(two_pi * f2 * u + p2) * std::cos(two_pi * f3 * v + p3) +
                       12.0 * std::sin(two_pi * f4 * (u + tilt * v) + p4);
            s = s * spec.brightness + (spec.noise > 0.0 ? noise(rng) : 0.0);
            px[std::size_t{y} * spec.width + x] = static_cast<std::uint8_t>(std::clamp(std::lround(s), 0L, 255L));
        }
    }
    return px;
}

GreyImage read_pgm(const std::filesystem::path& path)
{
    const auto data = read_all(path);
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(data[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&]() -> unsigned {
        skip_space();
        unsigned v = 0;
        const std::size_t start = pos;
        while (pos < data.size() && std::isdigit(data[pos])) v = v * 10 + (data[pos++] - '0');
        if (pos == start) throw ValidationError(path.string() + ": malformed PGM header");
        return v;
    };
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
        throw ValidationError(path.string() + ": not a binary PGM (P5) file");
    pos = 2;
    GreyImage im;
    im.width = number();
    im.height = number();
    const unsigned maxval = number();
    if (maxval == 0 || maxval > 255) throw ValidationError(path.string() + ": only 8-bit PGM files are supported");
    ++pos;  // single whitespace before the raster
    const std::size_t n = std::size_t{im.width} * im.height;
    if (data.size() < pos + n) throw ValidationError(path.string() + ": truncated PGM raster");
    im.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                     data.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return im;
}

void write_pgm(const std::filesystem::path& path, const GreyImage& image)
{
    if (image.pixels.size() != std::size_t{image.width} * image.height)
        throw ValidationError("write_pgm: pixel count does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw RuntimeError("write failed: " + path.string());
}

std::vector<std::uint64_t> pack_bytes(std::span<const std::uint8_t> bytes, unsigned flit_width)
{
    const unsigned per = bytes_per_flit(flit_width);
    std::vector<std::uint64_t> words;
    words.reserve((bytes.size() + per - 1) / per);
    for (std::size_t i = 0; i < bytes.size(); i += per) {
        std::uint64_t w = 0;
        for (unsigned k = 0; k < per; ++k) w = (w << 8) | (i + k < bytes.size() ? bytes[i + k] : 0u);
        words.push_back(w);
    }
    return words;
}

std::vector<std::uint64_t> materialize_payload(const PayloadSource& source, unsigned flit_width)
{
    std::vector<std::uint64_t> words;
    if (const auto* s = std::get_if<StreamSpec>(&source)) {
        words = generate_stream(*s).words;
    } else if (const auto* c = std::get_if<CorrelatedMsbPayload>(&source)) {
        words = generate_correlated_msb_stream(flit_width, c->msb_count, c->rho, c->length, c->seed).words;
    } else if (const auto* im = std::get_if<SyntheticImagePayload>(&source)) {
        words = pack_bytes(synthesize_image(*im), flit_width);
    } else {
        const auto& f = std::get<PayloadFile>(source);
        switch (f.format) {
        case PayloadFormat::Raw: words = pack_bytes(read_all(f.path), flit_width); break;
        case PayloadFormat::Pgm: words = pack_bytes(read_pgm(f.path).pixels, flit_width); break;
        case PayloadFormat::StreamBinary:
        case PayloadFormat::StreamCsv: {
            auto s = f.format == PayloadFormat::StreamBinary ? read_stream_binary(f.path)
                                                             : read_stream_csv(f.path, flit_width);
            if (s.width != flit_width)
                throw ValidationError(f.path.string() + ": width mismatch (stream " + std::to_string(s.width) +
                                      " bits, flit " + std::to_string(flit_width) + " bits)");
            words = std::move(s.words);
            break;
        }
        }
    }
    if (words.empty()) throw ValidationError("payload source is empty");
    return words;
}

TrafficSource::TrafficSource(InjectionSpec spec, std::vector<std::uint64_t> payload, unsigned flit_width,
                             CodecSpec codec, std::uint64_t seed)
    : spec_(std::move(spec)),
      payload_(std::move(payload)),
      rate_(spec_.rate),
      rng_(seed),
      bernoulli_(std::clamp(spec_.rate, 0.0, 1.0)),
      codec_(codec, flit_width)
{
    if (payload_.empty()) throw ValidationError("traffic source '" + spec_.name + "': empty payload");
}

std::vector<std::uint64_t> TrafficSource::next_payload(std::size_t count)
{
    std::vector<std::uint64_t> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        if (pos_ == payload_.size()) {
            pos_ = 0;
            ++recycles_;
            spdlog::debug("traffic source '{}': payload exhausted after {} words, recycling", spec_.name,
                          payload_.size());
        }
        out.push_back(codec_.encode(payload_[pos_++]));
        ++consumed_;
    }
    return out;
}

std::vector<std::uint64_t> inject_packets(const InjectionSpec& spec, std::uint64_t pe_cycles, std::uint64_t seed)
{
    if (!(spec.rate >= 0.0 && spec.rate <= 1.0))
        throw ValidationError("injection rate " + std::to_string(spec.rate) + " outside [0,1]");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution trial(spec.rate);
    std::vector<std::uint64_t> out;
    if (spec.rate == 0.0) return out;
    for (std::uint64_t t = 0; t < pe_cycles; ++t)
        if (trial(rng)) out.push_back(t);
    return out;
}

}  // namespace vclink
