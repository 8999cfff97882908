#include "vclink/experiments.hpp"

#include "vclink/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace vclink {

namespace {

std::vector<std::vector<std::uint64_t>> split_by_source(const MuxResult& mux, std::size_t sources)
{
    std::vector<std::vector<std::uint64_t>> out(sources);
    for (std::size_t k = 0; k < mux.sources.size(); ++k) out[mux.sources[k]].push_back(mux.stream.words[k]);
    return out;
}

LinkTypeStats stats_of(const std::vector<std::vector<std::uint64_t>>& per_source, unsigned width)
{
    return type_stats(per_source, width);
}

}  // namespace

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn)
{
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

StreamSpec random_stream_spec(std::mt19937_64& rng, unsigned width, std::size_t length)
{
    StreamSpec s;
    s.width = width;
    s.length = length;
    s.distribution = static_cast<Distribution>(std::uniform_int_distribution<int>(0, 2)(rng));
    const double lo = width / 10.0;
    const double hi = width - 1.0;
    s.sigma = std::exp2(std::uniform_real_distribution<double>(lo, hi)(rng));
    s.rho = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    s.seed = rng();
    return s;
}

SwitchingComparison compare_mux_switching(std::span<const DataStream> streams, double mux_prob, std::uint64_t seed,
                                          std::size_t length)
{
    const auto mux = multiplex_streams(streams, mux_prob, seed, length);
    const unsigned width = mux.stream.width;
    const auto k = static_cast<std::uint32_t>(streams.size());
    const auto trace = LinkTrace::from_words(mux.stream.words, mux.sources, width, k);
    const auto m = count_data_flow(trace);

    SwitchingComparison out;
    out.model = link_switching(stats_of(split_by_source(mux, k), width), m);
    out.oracle = exact_switching(trace).t;
    std::size_t switches = 0;
    for (std::size_t i = 1; i < mux.sources.size(); ++i) switches += mux.sources[i] != mux.sources[i - 1];
    out.switch_rate = mux.sources.size() > 1 ? static_cast<double>(switches) / (mux.sources.size() - 1) : 0.0;
    return out;
}

AccuracyPoint accuracy_point(unsigned width, unsigned streams, double mux_prob, std::size_t runs,
                             std::size_t length, std::uint64_t seed, unsigned jobs)
{
    if (streams < 2) throw ValidationError("accuracy_point: need at least two streams");
    if (runs < 1) throw ValidationError("accuracy_point: need at least one run");
    struct RunError {
        double sq_all = 0, sq_self = 0, sq_coupling = 0, max_abs = 0;
    };
    std::vector<RunError> errors(runs);
    parallel_for(runs, jobs, [&](std::size_t r) {
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * (r + 1)));
        std::vector<DataStream> data;
        for (unsigned s = 0; s < streams; ++s) {
            auto d = generate_stream(random_stream_spec(rng, width, length));
            d.type_id = s + 1;
            data.push_back(std::move(d));
        }
        const auto cmp = compare_mux_switching(data, mux_prob, rng(), length);
        RunError e;
        const Matrix diff = (cmp.model.T - cmp.oracle.T) * 100.0;
        for (Eigen::Index i = 0; i < diff.rows(); ++i)
            for (Eigen::Index j = 0; j < diff.cols(); ++j) {
                const double d2 = diff(i, j) * diff(i, j);
                e.sq_all += d2;
                (i == j ? e.sq_self : e.sq_coupling) += d2;
                e.max_abs = std::max(e.max_abs, std::abs(diff(i, j)));
            }
        errors[r] = e;
    });

    AccuracyPoint p;
    p.width = width;
    p.streams = streams;
    p.mux_prob = mux_prob;
    p.runs = runs;
    double all = 0, self = 0, coupling = 0;
    for (const auto& e : errors) {
        all += e.sq_all;
        self += e.sq_self;
        coupling += e.sq_coupling;
        p.mae_pp = std::max(p.mae_pp, e.max_abs);
    }
    const double n = static_cast<double>(width);
    p.rmse_pp = std::sqrt(all / (runs * n * n));
    p.rmse_self_pp = std::sqrt(self / (runs * n));
    p.rmse_coupling_pp = width > 1 ? std::sqrt(coupling / (runs * n * (n - 1))) : 0.0;
    return p;
}

MuxEnergy mux_energy(std::span<const DataStream> streams, const CodecSpec& codec, double mux_prob,
                     std::uint64_t seed, const CapacitanceModel& cap, const TechnologyParams& tech,
                     std::optional<std::size_t> length)
{
    if (streams.empty()) throw ValidationError("mux_energy: no streams");
    const unsigned data_width = streams.front().width;
    std::vector<DataStream> coded;
    for (const auto& s : streams) coded.push_back(encode_stream(codec, s));
    const auto mux = multiplex_streams(coded, mux_prob, seed, length);
    const unsigned width = mux.stream.width;
    const auto k = static_cast<std::uint32_t>(streams.size());
    const auto trace = LinkTrace::from_words(mux.stream.words, mux.sources, width, k);

    EnergyReportOptions ro;
    ro.head_type = k;  // no head flits in this experiment
    ro.payload_bits = data_width;
    const auto report =
        link_energy_report(stats_of(split_by_source(mux, k), width), count_data_flow(trace), cap, tech, ro);
    const auto exact = exact_energy(trace, cap, tech);

    MuxEnergy out;
    const double bytes_per_cycle = data_width / 8.0;
    out.model_per_cycle_fj = report.model.per_cycle_fj;
    out.oracle_per_cycle_fj = exact.per_cycle_fj;
    out.model_fj_per_byte = out.model_per_cycle_fj / bytes_per_cycle;
    out.oracle_fj_per_byte = out.oracle_per_cycle_fj / bytes_per_cycle;
    std::size_t switches = 0;
    for (std::size_t i = 1; i < mux.sources.size(); ++i) switches += mux.sources[i] != mux.sources[i - 1];
    out.switch_rate = mux.sources.size() > 1 ? static_cast<double>(switches) / (mux.sources.size() - 1) : 0.0;
    return out;
}

Capacitance2D default_2d_template(unsigned width, const TemplateParasitics& t)
{
    return template_2d_bus(width, t.ground_2d, t.couple_2d, t.range_2d);
}

Capacitance3D default_3d_template(unsigned width, const TemplateParasitics& t)
{
    const auto cols = static_cast<unsigned>(std::ceil(std::sqrt(static_cast<double>(width))));
    const unsigned rows = (width + cols - 1) / cols;
    return template_3d_tsv(rows, cols, t.c0_neighbor, t.dc_neighbor, t.c0_ground, t.dc_ground, width);
}

CaseStudyResult run_case_study(const SimulationConfig& config, const EnergyAnalysisOptions& energy,
                               const CaseStudyOptions& options)
{
    NetworkConfig net = config.network;
    if (options.vc_count) net.router.vc_count = *options.vc_count;
    for (const auto& c : options.codecs)
        if (c.output_width(net.flit_width) != net.flit_width)
            throw ValidationError("case study: codec '" + c.token() + "' changes the link width");

    SimOptions base;
    base.cycles = options.cycles;
    base.seed = options.seed;
    base.capture_traces = options.oracle;

    // Index 0 is the uncoded run; coded runs only feed the oracle.
    std::vector<SimulationResult> sims(options.oracle ? options.codecs.size() + 1 : 1);
    parallel_for(sims.size(), options.jobs, [&](std::size_t i) {
        SimOptions o = base;
        if (i > 0) o.codec = options.codecs[i - 1];
        sims[i] = run(net, config.traffic, o);
    });
    const auto& sim = sims[0];

    CaseStudyResult out;
    out.vc_count = net.router.vc_count;
    out.cycles = sim.cycles;
    out.packets_delivered = sim.packets_delivered;
    if (!sim.flit_latency.empty()) out.flit_latency = latency_stats(sim.flit_latency, sim.clock_period);
    if (!sim.packet_latency.empty()) out.network_latency = latency_stats(sim.packet_latency, sim.clock_period);

    for (std::size_t c = 0; c < options.codecs.size(); ++c) {
        CaseStudyCodec r;
        r.codec = options.codecs[c];
        const auto words = encode_type_words(sim.type_words, r.codec, net.flit_width);
        r.model = analyze_energy(sim.links, sim.flows, type_stats(words, sim.link_width), net.flit_width, energy);
        if (options.oracle) {
            const auto& coded = r.codec.kind == CodecKind::None ? sim : sims[c + 1];
            for (const auto& row : r.model.rows) {
                if (coded.flows[row.link.id].M != sim.flows[row.link.id].M)
                    throw RuntimeError("case study: data flow differs between coded and uncoded runs on " +
                                       row.link.name);
                const auto& cap = row.link.vertical() ? *energy.cap3d : *energy.cap2d;
                r.oracle.push_back(exact_energy(coded.traces[row.link.id], cap, energy.tech));
                r.oracle_total_fj += r.oracle.back().total_fj;
            }
        }
        out.codecs.push_back(std::move(r));
    }
    return out;
}

}  // namespace vclink
