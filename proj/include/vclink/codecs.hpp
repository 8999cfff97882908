#pragma once

// Low-power stream codecs applied end-to-end at the sources: bus-invert,
// Gray and correlator (XOR with the previous data word). Head flits are
// never encoded.

#include "vclink/stream_stats.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace vclink {

enum class CodecKind { None, Invert, Gray, Correlator };

struct CodecSpec {
    CodecKind kind = CodecKind::None;
    // Complement the correlator output (models inverting line drivers).
    bool invert_output = false;

    // Tokens: none, invert, gray, correlator, correlator+inv.
    static CodecSpec parse(std::string_view token);
    std::string token() const;
    unsigned output_width(unsigned data_width) const
    {
        return kind == CodecKind::Invert ? data_width + 1 : data_width;
    }
};

// One instance per stream; the invert and correlator codecs remember the
// previous word.
class Codec {
public:
    Codec(CodecSpec spec, unsigned data_width);

    std::uint64_t encode(std::uint64_t word);
    std::uint64_t decode(std::uint64_t code);
    void reset() { last_ = 0; }

    const CodecSpec& spec() const { return spec_; }
    unsigned data_width() const { return width_; }
    unsigned output_width() const { return spec_.output_width(width_); }

private:
    CodecSpec spec_;
    unsigned width_;
    std::uint64_t mask_;
    std::uint64_t last_ = 0;  // invert: last code sent; correlator: last data word
};

DataStream encode_invert(const DataStream& stream);
DataStream encode_gray(const DataStream& stream);
DataStream encode_correlator(const DataStream& stream, bool invert_output = false);
DataStream encode_stream(const CodecSpec& spec, const DataStream& stream);

// `encoded.width` must equal the codec's output width for `data_width`.
DataStream decode_stream(const CodecSpec& spec, const DataStream& encoded, unsigned data_width);

// (E_uncoded - E_coded) / E_uncoded in percent, both per effective payload byte.
double coding_gain(double uncoded_per_byte, double coded_per_byte);

}  // namespace vclink
