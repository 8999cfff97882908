#include "helpers.hpp"

#include "vclink/codecs.hpp"
#include "vclink/error.hpp"

#include <bit>
#include <cmath>

using namespace vclink;

TEST_CASE("bus invert")
{
    Codec c(CodecSpec{CodecKind::Invert, false}, 16);
    CHECK(c.output_width() == 17);
    CHECK(c.encode(0xFFFF) == (std::uint64_t{1} << 16));
    CHECK(c.encode(0xFFFF) == (std::uint64_t{1} << 16));
    Codec d(CodecSpec{CodecKind::Invert, false}, 16);
    CHECK(d.encode(0x0000) == 0x0000);

    // Never more than N/2 data wires toggle relative to the previous code.
    const auto s = test::uniform(16, 5000, 3);
    const auto e = encode_invert(s);
    for (std::size_t k = 1; k < e.size(); ++k)
        CHECK(std::popcount((e.words[k] ^ e.words[k - 1]) & 0xFFFF) <= 8);
}

TEST_CASE("gray")
{
    Codec g(CodecSpec{CodecKind::Gray, false}, 4);
    CHECK(g.encode(7) == 4);
    CHECK(g.encode(0) == 0);
    std::vector<std::uint64_t> ramp(1000);
    for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = k;
    const auto e = encode_gray(test::words(ramp, 10));
    for (std::size_t k = 1; k < e.size(); ++k) CHECK(std::popcount(e.words[k] ^ e.words[k - 1]) == 1);
}

TEST_CASE("correlator")
{
    CHECK(encode_correlator(test::words({5, 5, 5}, 4)).words == std::vector<std::uint64_t>{5, 0, 0});
    const auto inv = encode_correlator(test::words({9, 9, 9, 9}, 4), true);
    for (std::size_t k = 1; k < inv.size(); ++k) CHECK(inv.words[k] == 15);
}

TEST_CASE("codec round trips on 1000 random streams")
{
    const std::vector<std::string> tokens{"invert", "gray", "correlator", "correlator+inv"};
    std::mt19937_64 rng(2024);
    std::size_t failures = 0;
    for (int r = 0; r < 1000; ++r) {
        const unsigned width = 2 + static_cast<unsigned>(rng() % 31);
        const auto s = (r % 2) ? test::uniform(width, 200, rng()) : test::gaussian(width, std::exp2((width / 10.0 + width - 1) / 2), 0.9, 200, rng());
        for (const auto& t : tokens) {
            const auto spec = CodecSpec::parse(t);
            const auto e = encode_stream(spec, s);
            if (e.width != spec.output_width(width) || decode_stream(spec, e, width).words != s.words) ++failures;
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("codec tokens and gains")
{
    for (const auto* t : {"none", "invert", "gray", "correlator", "correlator+inv"})
        CHECK(CodecSpec::parse(t).token() == t);
    CHECK_THROWS_AS(CodecSpec::parse("corr"), ValidationError);
    CHECK(coding_gain(10, 10) == 0.0);
    CHECK(coding_gain(10, 5) == doctest::Approx(50.0));
}
