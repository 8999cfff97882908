#include "vclink/codecs.hpp"

#include "vclink/error.hpp"

#include <bit>

namespace vclink {

CodecSpec CodecSpec::parse(std::string_view token)
{
    if (token == "none") return {CodecKind::None, false};
    if (token == "invert") return {CodecKind::Invert, false};
    if (token == "gray") return {CodecKind::Gray, false};
    if (token == "correlator") return {CodecKind::Correlator, false};
    if (token == "correlator+inv") return {CodecKind::Correlator, true};
    throw ValidationError("unknown codec '" + std::string(token) +
                          "' (expected none, invert, gray, correlator or correlator+inv)");
}

std::string CodecSpec::token() const
{
    switch (kind) {
    case CodecKind::None: return "none";
    case CodecKind::Invert: return "invert";
    case CodecKind::Gray: return "gray";
    case CodecKind::Correlator: return invert_output ? "correlator+inv" : "correlator";
    }
    return "none";
}

Codec::Codec(CodecSpec spec, unsigned data_width) : spec_(spec), width_(data_width), mask_(width_mask(data_width))
{
    if (data_width < 1 || spec.output_width(data_width) > kMaxWidth)
        throw ValidationError("codec width " + std::to_string(data_width) + " unsupported");
}

std::uint64_t Codec::encode(std::uint64_t word)
{
    word &= mask_;
    switch (spec_.kind) {
    case CodecKind::None: return word;
    case CodecKind::Gray: return word ^ (word >> 1);
    case CodecKind::Invert: {
        // Ties (distance exactly N/2) are sent as-is.
        const auto distance = static_cast<unsigned>(std::popcount((word ^ last_) & mask_));
        std::uint64_t code = word;
        if (2 * distance > width_) code = (~word & mask_) | (std::uint64_t{1} << width_);
        last_ = code;
        return code;
    }
    case CodecKind::Correlator: {
        std::uint64_t code = word ^ last_;
        last_ = word;
        return spec_.invert_output ? (~code & mask_) : code;
    }
    }
    return word;
}

std::uint64_t Codec::decode(std::uint64_t code)
{
    switch (spec_.kind) {
    case CodecKind::None: return code & mask_;
    case CodecKind::Gray: {
        std::uint64_t w = code & mask_;
        for (unsigned shift = 1; shift < 64; shift <<= 1) w ^= w >> shift;
        return w;
    }
    case CodecKind::Invert: {
        const bool inverted = (code >> width_) & 1u;
        return inverted ? (~code & mask_) : (code & mask_);
    }
    case CodecKind::Correlator: {
        std::uint64_t c = code & mask_;
        if (spec_.invert_output) c = ~c & mask_;
        last_ ^= c;
        return last_;
    }
    }
    return code;
}

DataStream encode_stream(const CodecSpec& spec, const DataStream& stream)
{
    stream.validate();
    Codec codec(spec, stream.width);
    DataStream out;
    out.width = codec.output_width();
    out.type_id = stream.type_id;
    out.words.reserve(stream.size());
    for (auto w : stream.words) out.words.push_back(codec.encode(w));
    return out;
}

DataStream encode_invert(const DataStream& stream)
{
    return encode_stream({CodecKind::Invert, false}, stream);
}

DataStream encode_gray(const DataStream& stream)
{
    return encode_stream({CodecKind::Gray, false}, stream);
}

DataStream encode_correlator(const DataStream& stream, bool invert_output)
{
    return encode_stream({CodecKind::Correlator, invert_output}, stream);
}

DataStream decode_stream(const CodecSpec& spec, const DataStream& encoded, unsigned data_width)
{
    Codec codec(spec, data_width);
    if (encoded.width != codec.output_width())
        throw ValidationError("decode_stream: width mismatch (encoded " + std::to_string(encoded.width) +
                              ", expected " + std::to_string(codec.output_width()) + ")");
    encoded.validate();
    DataStream out;
    out.width = data_width;
    out.type_id = encoded.type_id;
    out.words.reserve(encoded.size());
    for (auto c : encoded.words) out.words.push_back(codec.decode(c));
    return out;
}

double coding_gain(double uncoded_per_byte, double coded_per_byte)
{
    if (uncoded_per_byte == 0.0) throw ValidationError("coding_gain: uncoded energy is zero");
    return 100.0 * (uncoded_per_byte - coded_per_byte) / uncoded_per_byte;
}

}  // namespace vclink
