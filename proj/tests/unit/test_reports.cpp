#include "helpers.hpp"

#include "vclink/config.hpp"
#include "vclink/error.hpp"
#include "vclink/experiments.hpp"
#include "vclink/noc_sim.hpp"
#include "vclink/report_writer.hpp"

#include <json.hpp>

#include <fstream>

using namespace vclink;

TEST_CASE("stored runs reproduce the inline energy exactly")
{
    const auto cfg = parse_config(VCLINK_SOURCE_DIR "/configs/case_study.xml");
    SimOptions o;
    o.cycles = 8000;
    const auto r = run(cfg.network, cfg.traffic, o);

    EnergyAnalysisOptions eo;
    eo.cap2d = default_2d_template(16);
    eo.cap3d = default_3d_template(16);
    const auto inline_energy = analyze_energy(r.links, r.flows, type_stats(r.type_words, 16), 16, eo);

    test::TempDir dir("run");
    emit_reports(r, dir.path, &inline_energy);
    const auto stored = load_run(dir.path);
    CHECK(stored.links.size() == r.links.size());
    for (std::size_t k = 0; k < r.flows.size(); ++k) CHECK(stored.flows[k].M == r.flows[k].M);

    const auto again = analyze_energy(stored.links, stored.flows, type_stats(stored.type_words, 16), 16, eo);
    CHECK(again.model_total_fj == inline_energy.model_total_fj);
    CHECK(again.standard_total_fj == inline_energy.standard_total_fj);

    // Post-simulation coding equals coding at the sources on the model path.
    const auto codec = CodecSpec::parse("correlator+inv");
    const auto coded = analyze_energy(stored.links, stored.flows,
                                      type_stats(encode_type_words(stored.type_words, codec, 16), 16), 16, eo);
    SimOptions oc = o;
    oc.codec = codec;
    const auto rc = run(cfg.network, cfg.traffic, oc);
    const auto at_source = analyze_energy(rc.links, rc.flows, type_stats(rc.type_words, 16), 16, eo);
    CHECK(coded.model_total_fj == doctest::Approx(at_source.model_total_fj).epsilon(1e-12));

    std::ifstream in(dir.path / "summary.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("vc_count") == 4);
    CHECK(j.at("links").size() == r.links.size());
    CHECK(j.at("energy").at("model_total_fj").get<double>() == inline_energy.model_total_fj);
    CHECK(std::filesystem::exists(dir.path / "M" / "R5_to_R7.csv"));
    CHECK(std::filesystem::exists(dir.path / "energy.csv"));
}

TEST_CASE("utilization agrees with flit counts")
{
    const auto cfg = parse_config(VCLINK_SOURCE_DIR "/configs/case_study.xml");
    SimOptions o;
    o.cycles = 4000;
    const auto r = run(cfg.network, cfg.traffic, o);
    for (std::size_t k = 0; k < r.links.size(); ++k) {
        // Observation starts after the first cycle, so one flit may fall outside.
        const double pairs = static_cast<double>(r.flows[k].cycles - 1);
        CHECK(std::abs(r.flows[k].active_fraction() * pairs - static_cast<double>(r.link_flits[k])) <= 1.0 + 1e-9);
    }
}

TEST_CASE("load_run errors")
{
    test::TempDir dir("empty");
    CHECK_THROWS_AS(load_run(dir.path), ValidationError);
    std::ofstream(dir.path / "summary.json") << "{ not json";
    CHECK_THROWS_AS(load_run(dir.path), ValidationError);
}

TEST_CASE("experiment drivers")
{
    SUBCASE("accuracy point is reproducible and small")
    {
        const auto a = accuracy_point(16, 3, 0.7, 4, 5000, 11);
        const auto b = accuracy_point(16, 3, 0.7, 4, 5000, 11, 2);
        CHECK(a.rmse_pp == b.rmse_pp);
        CHECK(a.rmse_pp < 1.5);
    }
    SUBCASE("inversion gain changes sign with multiplexing")
    {
        const std::vector<DataStream> in{test::uniform(16, 50000, 1), test::uniform(16, 50000, 2)};
        const TechnologyParams tech;
        const CodecSpec inv{CodecKind::Invert, false};
        const auto b0 = mux_energy(in, {}, 0.0, 1, default_2d_template(16), tech);
        const auto i0 = mux_energy(in, inv, 0.0, 1, default_2d_template(17), tech);
        const auto b1 = mux_energy(in, {}, 1.0, 1, default_2d_template(16), tech);
        const auto i1 = mux_energy(in, inv, 1.0, 1, default_2d_template(17), tech);
        CHECK(coding_gain(b0.oracle_fj_per_byte, i0.oracle_fj_per_byte) > 5.0);
        CHECK(coding_gain(b1.oracle_fj_per_byte, i1.oracle_fj_per_byte) < 0.0);
    }
    SUBCASE("correlator gain grows with the multiplexing probability")
    {
        std::vector<DataStream> in;
        for (int k = 0; k < 2; ++k) in.push_back(generate_correlated_msb_stream(16, 8, 0.99, 50000, 5 + k));
        const TechnologyParams tech;
        const auto c = CodecSpec::parse("correlator+inv");
        double last = -1e9;
        for (double m : {0.0, 0.5, 1.0}) {
            const auto b = mux_energy(in, {}, m, 3, default_3d_template(16), tech);
            const auto e = mux_energy(in, c, m, 3, default_3d_template(16), tech);
            const double g = coding_gain(b.oracle_fj_per_byte, e.oracle_fj_per_byte);
            CHECK(g > last);
            last = g;
        }
    }
}
