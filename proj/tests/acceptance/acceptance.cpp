// Acceptance checks. One line per criterion:
//   criterion N <name>: PASS|FAIL <measured values>
// Exit status is 0 when every selected criterion passes.

#include "vclink/bit_oracle.hpp"
#include "vclink/codecs.hpp"
#include "vclink/config.hpp"
#include "vclink/energy_model.hpp"
#include "vclink/experiments.hpp"
#include "vclink/noc_sim.hpp"
#include "vclink/report_writer.hpp"
#include "vclink/stream_stats.hpp"
#include "vclink/vc_link_model.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>

using namespace vclink;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kRmseMax = 1.0;           // pp
constexpr double kMaeMax = 4.0;            // pp
constexpr double kEnergyErrMax = 0.01;     // relative
constexpr double kMuxRatioLo = 1.7, kMuxRatioHi = 2.3;
constexpr double kInvGainLo = 10.0, kInvGainHi = 18.0;  // percent at mux 0
constexpr double kCodingMarginPp = 10.0;
constexpr double kStdUnderFactor = 2.0;
constexpr double kLatencyRatioMax = 0.7;
constexpr double kIdentityTol = 1e-12;
constexpr double kSpeedupMin = 100.0;

constexpr std::uint64_t kSeed = 42;
constexpr std::uint64_t kCaseSeed = 1;
constexpr std::uint64_t kCaseCycles = 100000;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<DataStream> gaussian_pair(double sigma, double rho, std::size_t length, std::uint64_t seed)
{
    std::vector<DataStream> out;
    for (unsigned k = 0; k < 2; ++k) {
        StreamSpec s;
        s.distribution = Distribution::Gaussian;
        s.width = 16;
        s.sigma = sigma;
        s.rho = rho;
        s.length = length;
        s.seed = seed + k;
        out.push_back(generate_stream(s));
    }
    return out;
}

// Case study -----------------------------------------------------------------

std::string case_config_path;

EnergyAnalysisOptions case_energy()
{
    EnergyAnalysisOptions eo;
    eo.cap2d = default_2d_template(16);
    eo.cap3d = default_3d_template(16);
    return eo;
}

const CaseStudyResult& case_study(unsigned vcs)
{
    static std::map<unsigned, CaseStudyResult> cache;
    if (auto it = cache.find(vcs); it != cache.end()) return it->second;
    const auto cfg = parse_config(case_config_path);
    CaseStudyOptions o;
    o.vc_count = vcs;
    o.cycles = kCaseCycles;
    o.seed = kCaseSeed;
    o.codecs = {CodecSpec{}, CodecSpec::parse("gray"), CodecSpec::parse("correlator+inv")};
    return cache.emplace(vcs, run_case_study(cfg, case_energy(), o)).first->second;
}

const CaseStudyCodec& codec_row(const CaseStudyResult& r, const std::string& token)
{
    for (const auto& c : r.codecs)
        if (c.codec.token() == token) return c;
    throw std::runtime_error("codec " + token + " missing");
}

std::optional<std::size_t> row_of(const EnergyAnalysis& e, const std::string& link)
{
    for (std::size_t i = 0; i < e.rows.size(); ++i)
        if (e.rows[i].link.name == link) return i;
    return std::nullopt;
}

// Criteria ---------------------------------------------------------------------

Verdict c1_switching_accuracy()
{
    const auto t0 = std::chrono::steady_clock::now();
    double rmse = 0, mae = 0;
    std::string worst;
    for (unsigned w : {16u, 32u})
        for (unsigned k = 2; k <= 5; ++k)
            for (double m : {0.1, 0.4, 0.7, 1.0}) {
                const auto p = accuracy_point(w, k, m, 100, 10000, kSeed);
                rmse = std::max(rmse, p.rmse_pp);
                if (p.mae_pp > mae) {
                    mae = p.mae_pp;
                    worst = fmt::format("N={} k={} mux={}", w, k, m);
                }
            }
    return {rmse <= kRmseMax && mae <= kMaeMax,
            fmt::format("max RMSE {:.3f} pp (<= {}), max MAE {:.3f} pp (<= {}) at {}; 100 runs x 10000 flits, {:.0f} s",
                        rmse, kRmseMax, mae, kMaeMax, worst, seconds_since(t0))};
}

Verdict c2_energy_error()
{
    const auto& r = case_study(4);
    const auto& none = codec_row(r, "none");
    double worst = 0, model = 0, oracle = 0;
    std::string worst_link, lines;
    for (std::size_t i = 0; i < none.model.rows.size(); ++i) {
        const double o = none.oracle[i].total_fj;
        if (o <= 0) continue;
        const double m = none.model.rows[i].model_total_fj;
        model += m;
        oracle += o;
        const double e = (m - o) / o;
        lines += fmt::format(" {} {:+.3f}%", none.model.rows[i].link.name, 100 * e);
        if (std::abs(e) > std::abs(worst)) {
            worst = e;
            worst_link = none.model.rows[i].link.name;
        }
    }
    const double agg = (model - oracle) / oracle;
    return {std::abs(worst) < kEnergyErrMax && std::abs(agg) < kEnergyErrMax,
            fmt::format("aggregate {:+.3f}%, worst link {} {:+.3f}% (< {}%);{}", 100 * agg, worst_link, 100 * worst,
                        100 * kEnergyErrMax, lines)};
}

Verdict c3_mux_trend()
{
    const auto in = gaussian_pair(256, 0.99, 200000, kSeed);
    const TechnologyParams tech;
    auto ratio = [&](const CapacitanceModel& cap) {
        const auto a = mux_energy(in, {}, 0.0, kSeed, cap, tech);
        const auto b = mux_energy(in, {}, 1.0, kSeed, cap, tech);
        return std::pair{b.oracle_fj_per_byte / a.oracle_fj_per_byte, b.model_fj_per_byte / a.model_fj_per_byte};
    };
    const auto [o2, m2] = ratio(default_2d_template(16));
    const auto [o3, m3] = ratio(default_3d_template(16));
    auto in_range = [](double r) { return r >= kMuxRatioLo && r <= kMuxRatioHi; };
    return {in_range(o2) && in_range(o3),
            fmt::format("energy/byte ratio mux 1 vs 0: 2D {:.3f} (model {:.3f}), 3D {:.3f} (model {:.3f}); "
                        "required [{}, {}]",
                        o2, m2, o3, m3, kMuxRatioLo, kMuxRatioHi)};
}

Verdict c4_invert_crossover()
{
    std::vector<DataStream> in;
    for (unsigned k = 0; k < 2; ++k) {
        StreamSpec s;
        s.width = 16;
        s.length = 200000;
        s.seed = kSeed + k;
        in.push_back(generate_stream(s));
    }
    const TechnologyParams tech;
    const CodecSpec inv{CodecKind::Invert, false};
    auto gain = [&](double m, bool three_d) {
        const CapacitanceModel base = three_d ? CapacitanceModel(default_3d_template(16)) : default_2d_template(16);
        const CapacitanceModel wide = three_d ? CapacitanceModel(default_3d_template(17)) : default_2d_template(17);
        return coding_gain(mux_energy(in, {}, m, kSeed, base, tech).oracle_fj_per_byte,
                           mux_energy(in, inv, m, kSeed, wide, tech).oracle_fj_per_byte);
    };
    const double g20 = gain(0, false), g21 = gain(1, false), g30 = gain(0, true), g31 = gain(1, true);
    auto ok0 = [](double g) { return g >= kInvGainLo && g <= kInvGainHi; };
    return {ok0(g20) && ok0(g30) && g21 < 0 && g31 < 0,
            fmt::format("gain at mux 0: 2D {:+.2f}%, 3D {:+.2f}% (in [{}, {}]); at mux 1: 2D {:+.2f}%, 3D {:+.2f}% (< 0)",
                        g20, g30, kInvGainLo, kInvGainHi, g21, g31)};
}

Verdict c5_coding_order()
{
    auto gains = [](const CaseStudyResult& r) {
        const double base = codec_row(r, "none").oracle_total_fj;
        return std::pair{coding_gain(base, codec_row(r, "gray").oracle_total_fj),
                         coding_gain(base, codec_row(r, "correlator+inv").oracle_total_fj)};
    };
    const auto [gray4, corr4] = gains(case_study(4));
    const auto [gray1, corr1] = gains(case_study(1));
    const bool with_vc = corr4 - gray4 >= kCodingMarginPp;
    const bool without_vc = gray1 > corr1 && corr1 < 0;
    return {with_vc && without_vc,
            fmt::format("4 VCs: correlator {:+.2f}% vs gray {:+.2f}% (margin {:.2f} pp >= {}); "
                        "1 VC: gray {:+.2f}% vs correlator {:+.2f}% (need gray > correlator and correlator < 0)",
                        corr4, gray4, corr4 - gray4, kCodingMarginPp, gray1, corr1)};
}

Verdict c6_standard_underestimation()
{
    const auto& none = codec_row(case_study(4), "none");
    bool pass = true;
    std::string detail;
    for (const char* link : {"R2_to_R5", "R5_to_R7"}) {
        const auto i = row_of(none.model, link);
        if (!i) return {false, std::string("link ") + link + " not found"};
        const auto& row = none.model.rows[*i];
        const double factor = none.oracle[*i].total_fj / row.standard_total_fj;
        pass = pass && factor >= kStdUnderFactor;
        detail += fmt::format("{}: oracle/standard {:.2f} (model/standard {:.2f}, active {:.2f}); ", link, factor,
                              row.model_total_fj / row.standard_total_fj, row.report.active_fraction);
    }
    return {pass, detail + fmt::format("required >= {}", kStdUnderFactor)};
}

Verdict c7_vc_latency()
{
    const auto& r4 = case_study(4);
    const auto& r1 = case_study(1);
    const double ratio = r4.flit_latency.mean_ns() / r1.flit_latency.mean_ns();
    return {ratio <= kLatencyRatioMax,
            fmt::format("flit latency 4 VCs {:.2f} ns, 1 VC {:.2f} ns, ratio {:.3f} (<= {}); network latency {:.1f} / "
                        "{:.1f} ns",
                        r4.flit_latency.mean_ns(), r1.flit_latency.mean_ns(), ratio, kLatencyRatioMax,
                        r4.network_latency.mean_ns(), r1.network_latency.mean_ns())};
}

Verdict c8_properties()
{
    std::vector<std::string> failed;
    std::string counts;

    // Stress run: every node sends to a distant node, small buffers, 1e5 cycles with
    // flit and credit conservation checked after every cycle.
    {
        NetworkConfig c;
        c.topology = Topology(3, 3, 2);
        c.router.vc_count = 2;
        c.router.buffer_depth = 2;
        c.flits_per_packet = 8;
        std::vector<InjectionSpec> traffic;
        const auto& nodes = c.topology.nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            InjectionSpec s;
            s.name = "S" + std::to_string(i);
            s.source = nodes[i];
            s.destination = nodes[nodes.size() - 1 - i];
            if (s.destination == s.source) s.destination = nodes[(i + 1) % nodes.size()];
            s.type_id = static_cast<std::uint32_t>(i % 3);
            s.rate = 0.06;
            StreamSpec p;
            p.width = 16;
            p.length = 8192;
            p.seed = 100 + i;
            s.payload = p;
            traffic.push_back(s);
        }
        const auto dir = fs::temp_directory_path() / fmt::format("vclink_accept_{}", ::getpid());
        fs::create_directories(dir);
        SimOptions o;
        o.cycles = 100000;
        o.seed = kSeed;
        o.check_invariants = true;
        o.protocol_dir = dir;
        o.payload_types = 3;
        const auto r = run(c, traffic, o);
        std::size_t m_ok = 0, proto_ok = 0;
        for (std::size_t k = 0; k < r.links.size(); ++k) {
            try {
                r.flows[k].validate(1e-12);
                ++m_ok;
            } catch (const std::exception&) {
            }
            const auto t = replay_link_protocol(dir / (r.links[k].name + ".protocol.csv"));
            proto_ok += count_data_flow(t).M == r.flows[k].M;
        }
        fs::remove_all(dir);
        if (m_ok != r.links.size()) failed.push_back("M invariants");
        if (proto_ok != r.links.size()) failed.push_back("observer vs protocol");
        if (r.flits_injected < r.flits_delivered) failed.push_back("flit conservation");
        counts += fmt::format("stress {} cycles, {} links, {} flits delivered, M ok {}/{}, protocol recount {}/{}; ",
                              r.cycles, r.links.size(), r.flits_delivered, m_ok, r.links.size(), proto_ok,
                              r.links.size());

        // M invariants on the case-study simulations as well.
        std::size_t case_ok = 0, case_total = 0;
        const auto cfg = parse_config(case_config_path);
        for (unsigned vcs : {4u, 1u}) {
            auto net = cfg.network;
            net.router.vc_count = vcs;
            SimOptions co;
            co.cycles = 20000;
            co.check_invariants = true;
            const auto cr = run(net, cfg.traffic, co);
            for (const auto& f : cr.flows) {
                ++case_total;
                try {
                    f.validate(1e-12);
                    ++case_ok;
                } catch (const std::exception&) {
                }
            }
        }
        if (case_ok != case_total) failed.push_back("case-study M invariants");
        counts += fmt::format("case-study M ok {}/{}; ", case_ok, case_total);
    }

    // Codec round trips.
    {
        std::mt19937_64 rng(kSeed);
        std::size_t bad = 0;
        for (int r = 0; r < 1000; ++r) {
            StreamSpec s;
            s.width = 2 + static_cast<unsigned>(rng() % 31);
            s.length = 500;
            s.seed = rng();
            const auto d = generate_stream(s);
            for (const char* t : {"invert", "gray", "correlator", "correlator+inv"}) {
                const auto spec = CodecSpec::parse(t);
                if (decode_stream(spec, encode_stream(spec, d), s.width).words != d.words) ++bad;
            }
        }
        if (bad) failed.push_back("codec round trip");
        counts += fmt::format("codec round trips 4000, failures {}; ", bad);
    }

    // energy_3d with probability-independent capacitances equals energy_2d.
    {
        double worst = 0;
        std::mt19937_64 rng(kSeed);
        std::uniform_real_distribution<double> u(0, 100);
        for (int r = 0; r < 200; ++r) {
            const unsigned n = 2 + static_cast<unsigned>(rng() % 30);
            StreamSpec s;
            s.width = n;
            s.length = 2000;
            s.seed = rng();
            const auto t = compute_sequential_switching(generate_stream(s));
            Matrix c0(n, n);
            for (unsigned i = 0; i < n; ++i)
                for (unsigned j = 0; j <= i; ++j) c0(i, j) = c0(j, i) = u(rng);
            Vector p(n);
            for (unsigned i = 0; i < n; ++i) p(i) = u(rng) / 100;
            const double e2 = energy_2d(t, {c0});
            const double a = energy_3d(t, p, {c0, Matrix::Zero(n, n)});
            const double b = energy_3d(t, Vector::Zero(n), {c0, -0.1 * c0});
            worst = std::max({worst, std::abs(a - e2) / e2, std::abs(b - e2) / e2});
        }
        if (worst > kIdentityTol) failed.push_back("3D/2D identity");
        counts += fmt::format("3D/2D identity max rel diff {:.2e}; ", worst);
    }

    // mux_switching against a brute-force enumeration of all cross pairs of 4-bit words.
    {
        double worst = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            StreamSpec a;
            a.width = 4;
            a.length = 1000;
            a.seed = seed;
            a.distribution = seed % 2 ? Distribution::Gaussian : Distribution::Uniform;
            a.sigma = 3;
            a.rho = 0.8;
            StreamSpec b = a;
            b.seed = seed + 1000;
            b.distribution = Distribution::Uniform;
            const auto x = generate_stream(a), y = generate_stream(b);
            Matrix e = Matrix::Zero(4, 4);
            for (auto wa : x.words)
                for (auto wb : y.words)
                    for (int i = 0; i < 4; ++i)
                        for (int j = 0; j < 4; ++j)
                            e(i, j) += (int((wb >> i) & 1) - int((wa >> i) & 1)) * (int((wb >> j) & 1) - int((wa >> j) & 1));
            e /= 1e6;
            const auto t = mux_switching(compute_bit_stats(x), compute_bit_stats(y));
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    worst = std::max(worst, std::abs(t.T(i, j) - (i == j ? e(i, i) : e(i, i) - e(i, j))));
        }
        if (worst > kIdentityTol) failed.push_back("mux switching brute force");
        counts += fmt::format("mux switching brute force max abs diff {:.2e}", worst);
    }

    std::string f;
    for (const auto& s : failed) f += (f.empty() ? "" : ", ") + s;
    return {failed.empty(), counts + (failed.empty() ? "" : "; failed: " + f)};
}

Verdict c9_speed()
{
    // 1e6-cycle link trace: three correlated sources multiplexed, with idle stretches.
    constexpr std::size_t kCycles = 1000000;
    std::vector<DataStream> in;
    for (unsigned k = 0; k < 3; ++k) in.push_back(generate_correlated_msb_stream(16, 8, 0.99, kCycles, kSeed + k));
    const auto mux = multiplex_streams(in, 0.5, kSeed, kCycles);
    LinkTrace trace;
    trace.width = 16;
    trace.types = 4;
    std::mt19937_64 rng(kSeed);
    std::bernoulli_distribution idle(0.3);
    std::vector<std::vector<std::uint64_t>> per(4);
    for (std::size_t k = 0; k < kCycles; ++k) {
        if (idle(rng)) {
            trace.push_idle();
            continue;
        }
        trace.push_active(mux.stream.words[k], mux.sources[k]);
        per[mux.sources[k]].push_back(mux.stream.words[k]);
    }
    per[3].push_back(0);  // unused head type
    const auto m = count_data_flow(trace);
    const auto stats = type_stats(per, 16);
    const CapacitanceModel cap = default_3d_template(16);
    const TechnologyParams tech;

    auto t0 = std::chrono::steady_clock::now();
    const auto exact = exact_energy(trace, cap, tech);
    const double oracle_s = seconds_since(t0);

    constexpr int kReps = 200;
    double model_fj = 0;
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < kReps; ++r) model_fj += link_energy_report(stats, m, cap, tech).model.per_cycle_fj;
    const double model_s = seconds_since(t0) / kReps;
    model_fj /= kReps;

    t0 = std::chrono::steady_clock::now();
    const auto stats_again = type_stats(per, 16);
    const double stats_s = seconds_since(t0);

    const double speedup = oracle_s / model_s;
    return {speedup >= kSpeedupMin,
            fmt::format("oracle {:.1f} ms, model evaluation over recorded M {:.3f} ms, speedup {:.0f}x (>= {}); "
                        "per-type statistics (once per stream, reusable across links and codecs) {:.1f} ms; "
                        "model vs oracle per-cycle energy {:+.3f}%",
                        1e3 * oracle_s, 1e3 * model_s, speedup, kSpeedupMin, 1e3 * stats_s,
                        100 * (model_fj - exact.per_cycle_fj) / exact.per_cycle_fj)};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    std::vector<int> only;
    std::string report;
    case_config_path = VCLINK_SOURCE_DIR "/configs/case_study.xml";
    app.add_option("--only", only, "criteria to run (default all)")->delimiter(',')->check(CLI::Range(1, 9));
    app.add_option("--config", case_config_path, "case-study configuration")->check(CLI::ExistingFile);
    app.add_option("--report", report, "append result lines to this file");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"switching accuracy", c1_switching_accuracy},
        {"end-to-end energy error", c2_energy_error},
        {"mux-probability energy trend", c3_mux_trend},
        {"invert-coding crossover", c4_invert_crossover},
        {"coding ordering", c5_coding_order},
        {"standard-model underestimation", c6_standard_underestimation},
        {"VC latency effect", c7_vc_latency},
        {"property suites", c8_properties},
        {"speed", c9_speed},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const auto line =
            fmt::format("criterion {} {}: {} {}", id, criteria[i].first, v.pass ? "PASS" : "FAIL", v.detail);
        fmt::print("{}\n", line);
        std::fflush(stdout);
        if (!report.empty()) std::ofstream(report, std::ios::app) << line << '\n';
        failures += v.pass ? 0 : 1;
    }
    return failures ? 1 : 0;
}
