// vclink: NoC simulation with per-link data-flow recording and VC-aware
// link energy analysis.

#include "vclink/bit_oracle.hpp"
#include "vclink/codecs.hpp"
#include "vclink/config.hpp"
#include "vclink/energy_model.hpp"
#include "vclink/error.hpp"
#include "vclink/experiments.hpp"
#include "vclink/noc_sim.hpp"
#include "vclink/report_writer.hpp"
#include "vclink/reporting.hpp"
#include "vclink/stream_stats.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace vclink;

namespace {

struct Common {
    std::uint64_t seed = 1;
    bool seed_set = false;
    unsigned jobs = 1;
    std::string log_level = "warn";
    double vdd = TechnologyParams{}.vdd;
};

// "template" selects the built-in stand-in parasitics at the needed width.
struct CapChoice {
    std::string spec;
    bool empty() const { return spec.empty(); }
    CapacitanceModel load(CapacitanceKind kind, unsigned width) const
    {
        if (spec == "template")
            return kind == CapacitanceKind::Planar2D ? CapacitanceModel(default_2d_template(width))
                                                     : CapacitanceModel(default_3d_template(width));
        auto m = load_capacitance_model(spec, kind);
        if (width_of(m) != width)
            throw ValidationError(fmt::format("{}: capacitance model is {} wide, link is {} bits", spec, width_of(m),
                                              width));
        return m;
    }
};

std::vector<CodecSpec> parse_codecs(const std::vector<std::string>& tokens)
{
    std::vector<CodecSpec> out;
    for (const auto& t : tokens) out.push_back(CodecSpec::parse(t));
    return out;
}

std::ofstream open_out(const fs::path& p)
{
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw RuntimeError("cannot write " + p.string());
    return out;
}

TechnologyParams tech_of(const Common& c, double clock_period)
{
    TechnologyParams t;
    t.vdd = c.vdd;
    t.clock_period = clock_period;
    t.validate();
    return t;
}

EnergyAnalysisOptions energy_options(const CapChoice& cap2d, const CapChoice& cap3d, unsigned width,
                                     const TechnologyParams& tech, bool eq11_literal, bool local_links)
{
    EnergyAnalysisOptions o;
    if (!cap2d.empty()) o.cap2d = cap2d.load(CapacitanceKind::Planar2D, width);
    if (!cap3d.empty()) o.cap3d = cap3d.load(CapacitanceKind::Tsv3D, width);
    o.tech = tech;
    o.p_mode = eq11_literal ? BitProbabilityMode::Literal : BitProbabilityMode::Corrected;
    o.include_local_links = local_links;
    return o;
}

void print_energy(const EnergyAnalysis& e)
{
    fmt::print("{:<24} {:>10} {:>14} {:>14} {:>10}\n", "link", "active", "model fJ", "standard fJ", "fJ/byte");
    for (const auto& r : e.rows)
        fmt::print("{:<24} {:>10.4f} {:>14.6g} {:>14.6g} {:>10.4g}\n", r.link.name, r.report.active_fraction,
                   r.model_total_fj, r.standard_total_fj, r.report.model.per_payload_byte_fj.value_or(0.0));
    fmt::print("{:<24} {:>10} {:>14.6g} {:>14.6g} {:>10.4g}\n", "total", "", e.model_total_fj, e.standard_total_fj,
               e.model_fj_per_byte());
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> cycles;
    std::optional<unsigned> vcs;
    std::string codec = "none";
    CapChoice cap2d, cap3d;
    bool debug_protocol = false;
    bool eq11_literal = false;
    bool local_links = false;
    bool check = false;
    std::uint64_t drain = 0;
};

int cmd_simulate(const SimulateArgs& a, const Common& c)
{
    auto cfg = parse_config(a.config);
    if (a.vcs) cfg.network.router.vc_count = *a.vcs;
    cfg.network.validate();
    SimOptions o;
    o.cycles = a.cycles.value_or(cfg.cycles.value_or(10000));
    o.seed = c.seed_set ? c.seed : cfg.seed.value_or(c.seed);
    o.codec = CodecSpec::parse(a.codec);
    o.check_invariants = a.check;
    o.drain_cycles = a.drain;
    const fs::path out = a.out;
    if (a.debug_protocol) o.protocol_dir = out / "protocol";
    spdlog::info("simulating {} cycles (seed {}, {} VC)", o.cycles, o.seed, cfg.network.router.vc_count);
    const auto result = run(cfg.network, cfg.traffic, o);

    std::optional<EnergyAnalysis> energy;
    if (!a.cap2d.empty() || !a.cap3d.empty()) {
        const auto eo = energy_options(a.cap2d, a.cap3d, result.link_width, tech_of(c, result.clock_period),
                                       a.eq11_literal, a.local_links);
        energy = analyze_energy(result.links, result.flows, type_stats(result.type_words, result.link_width),
                                result.data_width, eo);
    }
    emit_reports(result, out, energy ? &*energy : nullptr);

    std::ifstream lat(out / "latency.txt");
    std::cout << lat.rdbuf();
    if (energy) print_energy(*energy);
    fmt::print("results written to {}\n", out.string());
    return 0;
}

// analyze -------------------------------------------------------------------

struct AnalyzeArgs {
    std::string run;
    std::string out;
    std::string codec = "none";
    CapChoice cap2d{"template"}, cap3d{"template"};
    bool eq11_literal = false;
    bool local_links = false;
};

int cmd_analyze(const AnalyzeArgs& a, const Common& c)
{
    const auto run = load_run(a.run);
    const auto codec = CodecSpec::parse(a.codec);
    std::vector<std::vector<std::uint64_t>> words;
    unsigned width = run.link_width;
    if (codec.kind == CodecKind::None || codec.token() == run.codec.token()) {
        words = run.type_words;
    } else {
        if (run.codec.kind != CodecKind::None)
            throw ValidationError("run in " + a.run + " was simulated with codec '" + run.codec.token() +
                                  "'; post-simulation coding needs an uncoded run");
        words = encode_type_words(run.type_words, codec, run.data_width);
        width = codec.output_width(run.data_width);
    }
    const auto eo = energy_options(a.cap2d, a.cap3d, width, tech_of(c, run.clock_period), a.eq11_literal,
                                   a.local_links);
    const auto energy = analyze_energy(run.links, run.flows, type_stats(words, width), run.data_width, eo);
    print_energy(energy);
    const fs::path out = a.out.empty() ? fs::path(a.run) / ("energy_" + codec.token() + ".csv") : fs::path(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_energy_csv(out, energy);
    fmt::print("energy report written to {}\n", out.string());
    return 0;
}

// oracle --------------------------------------------------------------------

struct OracleArgs {
    std::vector<std::string> traces;
    CapChoice cap2d, cap3d;
    std::string out;
};

int cmd_oracle(const OracleArgs& a, const Common& c)
{
    if (a.cap2d.empty() == a.cap3d.empty()) throw ValidationError("oracle: give exactly one of --cap2d or --cap3d");
    const auto tech = tech_of(c, 1e-9);
    fmt::print("{:<40} {:>10} {:>10} {:>14} {:>14}\n", "trace", "cycles", "active", "fJ/cycle", "total fJ");
    nlohmann::json j = nlohmann::json::array();
    for (const auto& path : a.traces) {
        const auto trace = replay_link_protocol(path);
        const auto cap = a.cap2d.empty() ? a.cap3d.load(CapacitanceKind::Tsv3D, trace.width)
                                         : a.cap2d.load(CapacitanceKind::Planar2D, trace.width);
        const auto e = exact_energy(trace, cap, tech);
        const double active =
            trace.size() ? static_cast<double>(trace.active_cycles()) / static_cast<double>(trace.size()) : 0.0;
        fmt::print("{:<40} {:>10} {:>10.4f} {:>14.6g} {:>14.6g}\n", fs::path(path).filename().string(), trace.size(),
                   active, e.per_cycle_fj, e.total_fj);
        j.push_back({{"trace", path},
                     {"cycles", trace.size()},
                     {"active_fraction", active},
                     {"fj_per_cycle", e.per_cycle_fj},
                     {"total_fj", e.total_fj}});
    }
    if (!a.out.empty()) open_out(a.out) << j.dump(2) << '\n';
    return 0;
}

// streams -------------------------------------------------------------------

struct StreamsArgs {
    std::string dist = "gaussian";
    unsigned width = 16;
    double sigma = 256;
    double rho = 0.99;
    std::size_t length = 100000;
    std::optional<unsigned> msbs;
    std::string codec = "none";
    std::string out;
    bool csv = false;
};

int cmd_streams(const StreamsArgs& a, const Common& c)
{
    DataStream s;
    if (a.msbs) {
        s = generate_correlated_msb_stream(a.width, *a.msbs, a.rho, a.length, c.seed);
    } else {
        StreamSpec spec;
        spec.distribution = parse_distribution(a.dist);
        spec.width = a.width;
        spec.sigma = a.sigma;
        spec.rho = a.rho;
        spec.length = a.length;
        spec.seed = c.seed;
        s = generate_stream(spec);
    }
    s = encode_stream(CodecSpec::parse(a.codec), s);

    double mean = 0, var = 0, cov = 0;
    for (auto w : s.words) mean += static_cast<double>(w);
    mean /= static_cast<double>(s.words.size());
    for (std::size_t t = 0; t < s.words.size(); ++t) {
        const double d = static_cast<double>(s.words[t]) - mean;
        var += d * d;
        if (t) cov += d * (static_cast<double>(s.words[t - 1]) - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(s.words.size()));
    const double r1 = var > 0 ? cov / var : 1.0;
    const auto bits = compute_bit_stats(s);
    const auto t = compute_sequential_switching(s);
    fmt::print("words {}  width {}  mean {:.3f}  std {:.3f}  lag-1 corr {:.4f}  self switching {:.4f}\n",
               s.words.size(), s.width, mean, sd, r1, t.T.diagonal().sum());
    if (!a.out.empty()) {
        const fs::path out = a.out;
        fs::create_directories(out);
        if (a.csv)
            write_stream_csv(out / "stream.csv", s);
        else
            write_stream_binary(out / "stream.nestrm", s);
        write_bit_stats_csv(out / "bits.csv", bits);
        write_switching_csv(out / "switching.csv", t);
        fmt::print("stream and statistics written to {}\n", out.string());
    }
    return 0;
}

// sweep-mux -----------------------------------------------------------------

struct SweepMuxArgs {
    std::string experiment = "accuracy";
    std::vector<unsigned> widths{16, 32};
    std::string streams = "2..5";
    std::vector<double> mux{0.1, 0.4, 0.7, 1.0};
    std::size_t runs = 100;
    std::size_t length = 10000;
    double sigma = 256;
    double rho = 0.99;
    CapChoice cap2d{"template"}, cap3d{"template"};
    std::string out;
};

std::pair<unsigned, unsigned> parse_range(const std::string& s)
{
    unsigned lo = 0, hi = 0;
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            lo = hi = static_cast<unsigned>(std::stoul(s));
        } else {
            lo = static_cast<unsigned>(std::stoul(s.substr(0, dots)));
            hi = static_cast<unsigned>(std::stoul(s.substr(dots + 2)));
        }
    } catch (const std::exception&) {
        throw ValidationError("bad range '" + s + "' (expected N or A..B)");
    }
    if (lo < 2 || hi < lo) throw ValidationError("bad stream range '" + s + "' (need 2 <= A <= B)");
    return {lo, hi};
}

int cmd_sweep_mux(const SweepMuxArgs& a, const Common& c)
{
    std::ostringstream csv;
    if (a.experiment == "accuracy") {
        const auto [lo, hi] = parse_range(a.streams);
        csv << "width,streams,mux_prob,runs,rmse_pp,mae_pp,rmse_self_pp,rmse_coupling_pp\n";
        for (unsigned w : a.widths)
            for (unsigned k = lo; k <= hi; ++k)
                for (double m : a.mux) {
                    const auto p = accuracy_point(w, k, m, a.runs, a.length, c.seed, c.jobs);
                    csv << fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", w, k, m, a.runs, p.rmse_pp,
                                       p.mae_pp, p.rmse_self_pp, p.rmse_coupling_pp);
                    spdlog::info("N={} k={} mux={} rmse={:.3f} pp mae={:.3f} pp", w, k, m, p.rmse_pp, p.mae_pp);
                }
    } else if (a.experiment == "energy" || a.experiment == "invert") {
        const bool invert = a.experiment == "invert";
        const unsigned w = a.widths.front();
        std::vector<DataStream> data;
        for (unsigned k = 0; k < 2; ++k) {
            StreamSpec s;
            s.distribution = invert ? Distribution::Uniform : Distribution::Gaussian;
            s.width = w;
            s.sigma = a.sigma;
            s.rho = invert ? 0.0 : a.rho;
            s.length = a.length;
            s.seed = c.seed + k;
            data.push_back(generate_stream(s));
        }
        const auto tech = tech_of(c, 1e-9);
        const auto c2 = a.cap2d.load(CapacitanceKind::Planar2D, w);
        const auto c3 = a.cap3d.load(CapacitanceKind::Tsv3D, w);
        if (!invert) {
            csv << "mux_prob,switch_rate,model_2d_fj_per_byte,oracle_2d_fj_per_byte,model_3d_fj_per_byte,"
                   "oracle_3d_fj_per_byte\n";
            for (double m : a.mux) {
                const auto e2 = mux_energy(data, {}, m, c.seed, c2, tech);
                const auto e3 = mux_energy(data, {}, m, c.seed, c3, tech);
                csv << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", m, e2.switch_rate,
                                   e2.model_fj_per_byte, e2.oracle_fj_per_byte, e3.model_fj_per_byte,
                                   e3.oracle_fj_per_byte);
            }
        } else {
            const CodecSpec inv{CodecKind::Invert, false};
            const auto c2i = a.cap2d.load(CapacitanceKind::Planar2D, w + 1);
            const auto c3i = a.cap3d.load(CapacitanceKind::Tsv3D, w + 1);
            csv << "mux_prob,model_gain_2d_pct,oracle_gain_2d_pct,model_gain_3d_pct,oracle_gain_3d_pct\n";
            for (double m : a.mux) {
                const auto b2 = mux_energy(data, {}, m, c.seed, c2, tech);
                const auto i2 = mux_energy(data, inv, m, c.seed, c2i, tech);
                const auto b3 = mux_energy(data, {}, m, c.seed, c3, tech);
                const auto i3 = mux_energy(data, inv, m, c.seed, c3i, tech);
                csv << fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f}\n", m,
                                   coding_gain(b2.model_fj_per_byte, i2.model_fj_per_byte),
                                   coding_gain(b2.oracle_fj_per_byte, i2.oracle_fj_per_byte),
                                   coding_gain(b3.model_fj_per_byte, i3.model_fj_per_byte),
                                   coding_gain(b3.oracle_fj_per_byte, i3.oracle_fj_per_byte));
            }
        }
    } else {
        throw ValidationError("unknown experiment '" + a.experiment + "' (expected accuracy, energy or invert)");
    }
    if (a.out.empty())
        std::cout << csv.str();
    else
        open_out(a.out) << csv.str();
    return 0;
}

// sweep-coding --------------------------------------------------------------

struct SweepCodingArgs {
    unsigned width = 16;
    std::size_t length = 0;
    std::vector<double> mux{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    CapChoice cap2d{"template"}, cap3d{"template"};
    std::string out;
};

int cmd_sweep_coding(const SweepCodingArgs& a, const Common& c)
{
    // Two sources of 2 MB each unless a length is given.
    const std::size_t length = a.length ? a.length : (2u << 20) * 8 / a.width / 2;
    std::vector<DataStream> correlated, random;
    for (unsigned k = 0; k < 2; ++k) {
        correlated.push_back(generate_correlated_msb_stream(a.width, 8, 0.99, length, c.seed + k));
        StreamSpec s;
        s.width = a.width;
        s.length = length;
        s.seed = c.seed + 100 + k;
        random.push_back(generate_stream(s));
    }
    const auto tech = tech_of(c, 1e-9);
    struct Case {
        const char* data;
        const std::vector<DataStream>* streams;
        CodecSpec codec;
    };
    const std::vector<Case> cases{{"correlated", &correlated, CodecSpec::parse("correlator+inv")},
                                  {"random", &random, CodecSpec::parse("invert")}};

    std::vector<std::string> rows(a.mux.size() * cases.size() * 2);
    parallel_for(rows.size(), c.jobs, [&](std::size_t i) {
        const double m = a.mux[i / (cases.size() * 2)];
        const auto& cs = cases[(i / 2) % cases.size()];
        const bool is3d = i % 2;
        const unsigned cw = cs.codec.output_width(a.width);
        const CapChoice& cap = is3d ? a.cap3d : a.cap2d;
        const auto kind = is3d ? CapacitanceKind::Tsv3D : CapacitanceKind::Planar2D;
        const auto base = mux_energy(*cs.streams, {}, m, c.seed, cap.load(kind, a.width), tech);
        const auto coded = mux_energy(*cs.streams, cs.codec, m, c.seed, cap.load(kind, cw), tech);
        rows[i] = fmt::format("{},{:.6f},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.4f},{:.4f}\n", m, base.switch_rate,
                              cs.data, cs.codec.token(), is3d ? "3d" : "2d", base.model_fj_per_byte,
                              base.oracle_fj_per_byte, coded.model_fj_per_byte, coded.oracle_fj_per_byte,
                              coding_gain(base.model_fj_per_byte, coded.model_fj_per_byte),
                              coding_gain(base.oracle_fj_per_byte, coded.oracle_fj_per_byte));
    });
    std::ostringstream csv;
    csv << "mux_prob,switch_rate,data,codec,link,uncoded_model_fj_per_byte,uncoded_oracle_fj_per_byte,"
           "coded_model_fj_per_byte,coded_oracle_fj_per_byte,model_gain_pct,oracle_gain_pct\n";
    for (const auto& r : rows) csv << r;
    if (a.out.empty())
        std::cout << csv.str();
    else
        open_out(a.out) << csv.str();
    return 0;
}

// case-study ----------------------------------------------------------------

struct CaseStudyArgs {
    std::string config = "configs/case_study.xml";
    std::string out;
    std::optional<std::uint64_t> cycles;
    std::vector<unsigned> vcs{4, 1};
    std::vector<std::string> codecs{"none", "gray", "correlator+inv"};
    CapChoice cap2d{"template"}, cap3d{"template"};
    bool no_oracle = false;
    bool eq11_literal = false;
};

int cmd_case_study(const CaseStudyArgs& a, const Common& c)
{
    const auto cfg = parse_config(a.config);
    CaseStudyOptions o;
    o.cycles = a.cycles.value_or(cfg.cycles.value_or(100000));
    o.seed = c.seed_set ? c.seed : cfg.seed.value_or(c.seed);
    o.codecs = parse_codecs(a.codecs);
    if (o.codecs.empty() || o.codecs.front().kind != CodecKind::None)
        o.codecs.insert(o.codecs.begin(), CodecSpec{});
    o.oracle = !a.no_oracle;
    o.jobs = c.jobs;
    const auto eo = energy_options(a.cap2d, a.cap3d, cfg.network.flit_width,
                                   tech_of(c, cfg.network.clock_period), a.eq11_literal, false);

    nlohmann::json j = nlohmann::json::array();
    std::ostringstream csv;
    csv << "vc_count,codec,link,vertical,active_fraction,oracle_fj,model_fj,standard_fj\n";
    for (unsigned v : a.vcs) {
        o.vc_count = v;
        const auto r = run_case_study(cfg, eo, o);
        const double packets = static_cast<double>(std::max<std::uint64_t>(1, r.packets_delivered));
        fmt::print("\nLink energy per transmitted packet [pJ] with {} virtual channel(s)\n", v);
        fmt::print("{:<16} {:>22} {:>22} {:>22}\n", "Data", "Bit-level sim.", "Presented model", "Standard model");
        const auto& base = r.codecs.front();
        auto cell = [&](double value, double reference, bool first) {
            if (first) return fmt::format("{:.3f}", value / packets * 1e-3);
            return fmt::format("{:.3f} ({:+.2f}%)", value / packets * 1e-3, 100.0 * (value - reference) / reference);
        };
        nlohmann::json jr;
        jr["vc_count"] = v;
        jr["flit_latency_ns"] = r.flit_latency.mean_ns();
        jr["network_latency_ns"] = r.network_latency.mean_ns();
        jr["packets_delivered"] = r.packets_delivered;
        for (std::size_t k = 0; k < r.codecs.size(); ++k) {
            const auto& cc = r.codecs[k];
            const bool first = k == 0;
            fmt::print("{:<16} {:>22} {:>22} {:>22}\n", cc.codec.token(),
                       o.oracle ? cell(cc.oracle_total_fj, base.oracle_total_fj, first) : std::string("-"),
                       cell(cc.model.model_total_fj, base.model.model_total_fj, first),
                       cell(cc.model.standard_total_fj, base.model.standard_total_fj, first));
            jr["codecs"].push_back({{"codec", cc.codec.token()},
                                    {"oracle_fj", cc.oracle_total_fj},
                                    {"model_fj", cc.model.model_total_fj},
                                    {"standard_fj", cc.model.standard_total_fj}});
            for (std::size_t i = 0; i < cc.model.rows.size(); ++i) {
                const auto& row = cc.model.rows[i];
                csv << fmt::format("{},{},{},{},{:.6f},{:.9g},{:.9g},{:.9g}\n", v, cc.codec.token(), row.link.name,
                                   row.link.vertical() ? 1 : 0, row.report.active_fraction,
                                   o.oracle ? cc.oracle[i].total_fj : 0.0, row.model_total_fj,
                                   row.standard_total_fj);
            }
        }
        fmt::print("Avg. flit latency: {:.1f} ns    Avg. network latency: {:.1f} ns\n", r.flit_latency.mean_ns(),
                   r.network_latency.mean_ns());
        j.push_back(jr);
    }
    if (!a.out.empty()) {
        const fs::path out = a.out;
        fs::create_directories(out);
        open_out(out / "case_study.csv") << csv.str();
        open_out(out / "case_study.json") << j.dump(2) << '\n';
        fmt::print("\nresults written to {}\n", out.string());
    }
    return 0;
}

void add_caps(CLI::App* app, CapChoice& cap2d, CapChoice& cap3d)
{
    app->add_option("--cap2d", cap2d.spec, "planar link capacitances (CSV) or 'template'");
    app->add_option("--cap3d", cap3d.spec, "TSV link capacitances (C0/dC CSV) or 'template'");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cycle-accurate VC NoC simulator with data-flow based link energy analysis", "vclink"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    auto* seed_opt = app.add_option("--seed", common.seed, "random seed")->capture_default_str();
    app.add_option("--jobs", common.jobs, "worker threads for sweeps")->check(CLI::Range(1u, 256u));
    app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error or off")
        ->capture_default_str();
    app.add_option("--vdd", common.vdd, "supply voltage in volts")->capture_default_str();

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "run the NoC simulator and record data-flow matrices");
    s->add_option("--config", sim.config, "simulator XML")->required()->check(CLI::ExistingFile);
    s->add_option("--out", sim.out, "output directory")->required();
    s->add_option("--cycles", sim.cycles, "base clock cycles (overrides the config)");
    s->add_option("--vcs", sim.vcs, "virtual channels per port (overrides the config)");
    s->add_option("--codec", sim.codec, "encode payloads at the sources")->capture_default_str();
    add_caps(s, sim.cap2d, sim.cap3d);
    s->add_flag("--debug-protocol", sim.debug_protocol, "write per-link flit protocols to <out>/protocol");
    s->add_flag("--eq11-literal", sim.eq11_literal, "use the printed link bit-probability formula");
    s->add_flag("--local-links", sim.local_links, "include NI links in the energy report");
    s->add_flag("--check", sim.check, "verify flit and credit invariants every cycle");
    s->add_option("--drain", sim.drain, "extra cycles to drain the network after injection stops");

    AnalyzeArgs an;
    auto* a = app.add_subcommand("analyze", "link energy from a stored run, optionally with a different codec");
    a->add_option("run", an.run, "directory written by simulate")->required()->check(CLI::ExistingDirectory);
    a->add_option("--out", an.out, "energy CSV (default <run>/energy_<codec>.csv)");
    a->add_option("--codec", an.codec, "codec applied to the stored payload streams")->capture_default_str();
    add_caps(a, an.cap2d, an.cap3d);
    a->add_flag("--eq11-literal", an.eq11_literal, "use the printed link bit-probability formula");
    a->add_flag("--local-links", an.local_links, "include NI links");

    OracleArgs orc;
    auto* o = app.add_subcommand("oracle", "bit-level energy of recorded link protocols");
    o->add_option("--trace", orc.traces, "protocol file(s)")->required()->check(CLI::ExistingFile);
    add_caps(o, orc.cap2d, orc.cap3d);
    o->add_option("--out", orc.out, "JSON summary");

    StreamsArgs st;
    auto* g = app.add_subcommand("streams", "generate a synthetic stream and its bit statistics");
    g->add_option("--dist", st.dist, "uniform, gaussian or lognormal")->capture_default_str();
    g->add_option("--width", st.width)->capture_default_str();
    g->add_option("--sigma", st.sigma)->capture_default_str();
    g->add_option("--rho", st.rho)->capture_default_str();
    g->add_option("--length", st.length)->capture_default_str();
    g->add_option("--msbs", st.msbs, "correlated-MSB stream with this many correlated upper bits");
    g->add_option("--codec", st.codec)->capture_default_str();
    g->add_option("--out", st.out, "output directory");
    g->add_flag("--csv", st.csv, "write the stream as CSV instead of binary");

    SweepMuxArgs sm;
    auto* m = app.add_subcommand("sweep-mux", "switching accuracy and link energy over the multiplexing probability");
    m->add_option("--experiment", sm.experiment, "accuracy, energy or invert")->capture_default_str();
    m->add_option("--widths", sm.widths, "flit widths")->delimiter(',');
    m->add_option("--streams", sm.streams, "stream count or range A..B")->capture_default_str();
    m->add_option("--mux", sm.mux, "multiplexing probabilities")->delimiter(',');
    m->add_option("--runs", sm.runs)->capture_default_str();
    m->add_option("--length", sm.length, "flits per run")->capture_default_str();
    m->add_option("--sigma", sm.sigma)->capture_default_str();
    m->add_option("--rho", sm.rho)->capture_default_str();
    add_caps(m, sm.cap2d, sm.cap3d);
    m->add_option("--out", sm.out, "CSV file (default stdout)");

    SweepCodingArgs sc;
    auto* c = app.add_subcommand("sweep-coding", "coding gains over the multiplexing probability");
    c->add_option("--width", sc.width)->capture_default_str();
    c->add_option("--length", sc.length, "words per stream (default 2 MB per source)");
    c->add_option("--mux", sc.mux)->delimiter(',');
    add_caps(c, sc.cap2d, sc.cap3d);
    c->add_option("--out", sc.out, "CSV file (default stdout)");

    CaseStudyArgs cs;
    auto* k = app.add_subcommand("case-study", "image sensor case study with and without virtual channels");
    k->add_option("--config", cs.config)->capture_default_str()->check(CLI::ExistingFile);
    k->add_option("--out", cs.out, "output directory");
    k->add_option("--cycles", cs.cycles);
    k->add_option("--vcs", cs.vcs, "VC counts to compare")->delimiter(',');
    k->add_option("--codec", cs.codecs, "codecs to compare")->delimiter(',');
    add_caps(k, cs.cap2d, cs.cap3d);
    k->add_flag("--no-oracle", cs.no_oracle, "skip the bit-level reference");
    k->add_flag("--eq11-literal", cs.eq11_literal, "use the printed link bit-probability formula");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    common.seed_set = seed_opt->count() > 0;

    try {
        spdlog::set_level(spdlog::level::from_str(common.log_level));
        if (*s) return cmd_simulate(sim, common);
        if (*a) return cmd_analyze(an, common);
        if (*o) return cmd_oracle(orc, common);
        if (*g) return cmd_streams(st, common);
        if (*m) return cmd_sweep_mux(sm, common);
        if (*c) return cmd_sweep_coding(sc, common);
        if (*k) return cmd_case_study(cs, common);
    } catch (const ValidationError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "runtime error: {}\n", e.what());
        return 2;
    }
    return 1;
}
