#include "helpers.hpp"

#include "vclink/bit_oracle.hpp"
#include "vclink/energy_model.hpp"
#include "vclink/error.hpp"
#include "vclink/reporting.hpp"

#include <sstream>

using namespace vclink;

namespace {

LinkTrace trace_of(std::initializer_list<std::uint64_t> words, unsigned width)
{
    LinkTrace t;
    t.width = width;
    for (auto w : words) t.push_active(w, 0);
    return t;
}

}  // namespace

TEST_CASE("exact_switching")
{
    SUBCASE("every cycle toggles")
    {
        const auto s = exact_switching(trace_of({0b00, 0b11, 0b00}, 2));
        CHECK(s.t.T.diagonal() == Vector::Ones(2));
        CHECK(s.transitions == 2);
    }
    SUBCASE("idle holds the value")
    {
        LinkTrace t;
        t.width = 4;
        t.push_active(0b0101, 0);
        t.push_idle();
        t.push_idle();
        t.push_active(0b0110, 0);
        const auto s = exact_switching(t);
        CHECK(s.t.T(0, 0) == doctest::Approx(1.0 / 3));
        CHECK(s.t.T(1, 1) == doctest::Approx(1.0 / 3));
        CHECK(s.t.T(2, 2) == 0.0);
        // bit 0 falls while bit 1 rises
        CHECK(s.t.T(0, 1) == doctest::Approx(2.0 / 3));
    }
    SUBCASE("agrees with the stream statistics on active-only traces")
    {
        const auto s = test::gaussian(12, 100, 0.9, 5000, 7);
        LinkTrace t;
        t.width = 12;
        for (auto w : s.words) t.push_active(w, 0);
        CHECK((exact_switching(t).t.T - compute_sequential_switching(s).T).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("exact_energy")
{
    const Matrix c = template_2d_bus(8, 30, 70, 2).C;
    SUBCASE("constant trace") { CHECK(exact_energy(trace_of({9, 9, 9}, 8), Capacitance2D{c}, {}).total_fj == 0.0); }
    SUBCASE("full swing, ground only")
    {
        Matrix g = Matrix::Zero(8, 8);
        g.diagonal().setConstant(25);
        const auto e = exact_energy(trace_of({0, 255}, 8), Capacitance2D{g}, {});
        CHECK(e.total_fj == doctest::Approx(8 * 25 * 1.1 * 1.1 / 2 * 1e-3));
    }
    SUBCASE("equals energy_2d of the exact switching matrix")
    {
        LinkTrace t;
        t.width = 8;
        t.types = 2;
        const auto s = test::uniform(8, 100000, 3);
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (k % 7 == 3)
                t.push_idle();
            else
                t.push_active(s.words[k], k % 2);
        }
        const TechnologyParams tech;
        const auto e = exact_energy(t, Capacitance2D{c}, tech);
        const double via_t = tech.to_femtojoule(energy_2d(exact_switching(t).t, Capacitance2D{c})) *
                             static_cast<double>(t.size() - 1);
        CHECK(e.total_fj == doctest::Approx(via_t).epsilon(1e-9));
    }
    SUBCASE("width mismatch")
    {
        CHECK_THROWS_AS(exact_energy(trace_of({1, 2}, 4), Capacitance2D{c}, {}), ValidationError);
    }
}

TEST_CASE("count_data_flow matches the observer")
{
    LinkTrace t;
    t.width = 4;
    t.types = 3;
    LinkObserver o("x", 3);
    // The observer starts idle on the head type with an all-zero word.
    t.push_idle();
    o.record_idle();
    std::mt19937_64 rng(5);
    for (int k = 0; k < 5000; ++k) {
        if (rng() % 3 == 0) {
            t.push_idle();
            o.record_idle();
        } else {
            const auto type = static_cast<std::uint32_t>(rng() % 3);
            t.push_active(rng() & 15, type);
            o.record_active(type);
        }
    }
    CHECK(count_data_flow(t).M == o.finalize().M);
}

TEST_CASE("LinkObserver")
{
    SUBCASE("direct counts")
    {
        LinkObserver o("l", 2);
        o.record_active(0);
        o.record_active(0);
        o.record_idle();
        o.record_active(1);
        CHECK(o.count(0, 0) == 1);
        CHECK(o.count(0, 2) == 1);
        CHECK(o.count(2, 1) == 1);
    }
    SUBCASE("all idle")
    {
        LinkObserver o("l", 2);
        for (int k = 0; k < 10; ++k) o.record_idle();
        CHECK(o.count(3, 3) == 9);
        CHECK(o.finalize().M(3, 3) == 1.0);
    }
    SUBCASE("normalization")
    {
        LinkObserver o("l", 1);
        for (int k = 0; k < 4; ++k) o.record_active(0);
        o.record_idle();
        const auto m = o.finalize();
        CHECK(m.M(0, 0) == 0.75);
        CHECK(m.M(0, 1) == 0.25);
        CHECK(m.M.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("link protocol files")
{
    std::stringstream ss;
    LinkTrace t;
    t.width = 8;
    t.types = 2;
    t.push_active(0x12, 0);
    t.push_active(0x34, 1);
    t.push_idle();
    t.push_idle();
    t.push_active(0xff, 0);
    write_link_protocol(ss, t, "A_to_B");
    const auto back = read_link_protocol(ss);
    REQUIRE(back.size() == 5);
    CHECK(back.active_cycles() == 3);
    CHECK(count_data_flow(back).M == count_data_flow(t).M);
    CHECK(back.cycles[3].word == 0x34);

    std::stringstream empty;
    CHECK_THROWS_AS(read_link_protocol(empty), ValidationError);
    std::stringstream wide("# link=x width=4 n=1\n1,1,ff\n");
    CHECK_THROWS_WITH_AS(read_link_protocol(wide), doctest::Contains("width mismatch"), ValidationError);
    std::stringstream gap("# link=x width=4 n=1\n1,1,f\n3,1,f\n");
    CHECK_THROWS_AS(read_link_protocol(gap), ValidationError);
}

TEST_CASE("latency_stats")
{
    const std::vector<std::uint64_t> two{2, 4};
    CHECK(latency_stats(two).mean == 3.0);
    const std::vector<std::uint64_t> one{7};
    const auto s = latency_stats(one, 2e-9);
    CHECK(s.mean == s.median);
    CHECK(s.max == 7.0);
    CHECK(s.mean_ns() == doctest::Approx(14.0));
    CHECK_THROWS_AS(latency_stats({}), ValidationError);
}
