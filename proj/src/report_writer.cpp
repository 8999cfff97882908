#include "vclink/report_writer.hpp"

#include "vclink/error.hpp"
#include "vclink/reporting.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>

namespace vclink {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write " + path.string());
    return out;
}

json latency_json(const std::vector<std::uint64_t>& samples, double clock_period)
{
    if (samples.empty()) return json{{"count", 0}};
    const auto s = latency_stats(samples, clock_period);
    return json{{"count", s.count},         {"mean_cycles", s.mean},    {"median_cycles", s.median},
                {"p95_cycles", s.p95},      {"max_cycles", s.max},      {"mean_ns", s.mean_ns()},
                {"median_ns", s.median_ns()}, {"p95_ns", s.p95_ns()}, {"max_ns", s.max_ns()}};
}

LinkKind parse_link_kind(const std::string& s)
{
    if (s == "inject") return LinkKind::Inject;
    if (s == "eject") return LinkKind::Eject;
    if (s == "router") return LinkKind::Router;
    throw ValidationError("unknown link kind '" + s + "' in summary.json");
}

Port parse_port(const std::string& s)
{
    for (int p = 0; p < kPortCount; ++p)
        if (port_name(static_cast<Port>(p)) == s) return static_cast<Port>(p);
    throw ValidationError("unknown port '" + s + "' in summary.json");
}

}  // namespace

std::string link_kind_name(LinkKind kind)
{
    switch (kind) {
    case LinkKind::Inject: return "inject";
    case LinkKind::Eject: return "eject";
    case LinkKind::Router: return "router";
    }
    return "router";
}

std::vector<std::vector<std::uint64_t>> encode_type_words(const std::vector<std::vector<std::uint64_t>>& type_words,
                                                          const CodecSpec& codec, unsigned data_width)
{
    std::vector<std::vector<std::uint64_t>> out(type_words.size());
    if (type_words.empty()) return out;
    const std::size_t head = type_words.size() - 1;
    for (std::size_t t = 0; t < type_words.size(); ++t) {
        if (t == head) {
            out[t] = type_words[t];
            continue;
        }
        Codec c(codec, data_width);
        out[t].reserve(type_words[t].size());
        for (auto w : type_words[t]) out[t].push_back(c.encode(w));
    }
    return out;
}

LinkTypeStats type_stats(const std::vector<std::vector<std::uint64_t>>& type_words, unsigned width)
{
    LinkTypeStats stats;
    for (const auto& words : type_words) {
        if (words.empty())
            stats.types.push_back({BitStats{Matrix::Zero(width, width)}, SwitchingMatrix::zero(width)});
        else
            stats.types.push_back(LinkTypeStats::from_words(words, width));
    }
    return stats;
}

EnergyAnalysis analyze_energy(const std::vector<LinkInfo>& links, const std::vector<DataFlowMatrix>& flows,
                              const LinkTypeStats& stats, unsigned data_width, const EnergyAnalysisOptions& options)
{
    if (links.size() != flows.size()) throw ValidationError("analyze_energy: link/matrix count mismatch");
    EnergyAnalysis out;
    EnergyReportOptions ro;
    ro.payload_bits = data_width;
    ro.p_mode = options.p_mode;
    for (std::size_t k = 0; k < links.size(); ++k) {
        const auto& link = links[k];
        if (link.kind != LinkKind::Router && !options.include_local_links) continue;
        const auto& cap = link.vertical() ? options.cap3d : options.cap2d;
        if (!cap) continue;
        if (flows[k].types != stats.count())
            throw ValidationError("analyze_energy: link " + link.name + " has " + std::to_string(flows[k].types) +
                                  " types, statistics have " + std::to_string(stats.count()));
        LinkEnergyRow row;
        row.link = link;
        row.cycles = flows[k].cycles;
        row.report = link_energy_report(stats, flows[k], *cap, options.tech, ro);
        const double transitions = flows[k].cycles > 0 ? static_cast<double>(flows[k].cycles - 1) : 0.0;
        row.model_total_fj = row.report.model.per_cycle_fj * transitions;
        row.standard_total_fj = row.report.standard.per_cycle_fj * transitions;
        out.model_total_fj += row.model_total_fj;
        out.standard_total_fj += row.standard_total_fj;
        out.payload_bytes += row.report.payload_bytes_per_cycle * transitions;
        out.rows.push_back(std::move(row));
    }
    return out;
}

void write_energy_csv(const std::filesystem::path& path, const EnergyAnalysis& energy)
{
    auto out = open_out(path);
    out << "link,kind,vertical,cycles,active_fraction,model_fj_per_cycle,standard_fj_per_cycle,"
           "model_fj_per_flit,model_fj_per_byte,model_total_fj,standard_total_fj\n";
    for (const auto& r : energy.rows) {
        out << fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.link.name,
                           link_kind_name(r.link.kind), r.link.vertical() ? 1 : 0, r.cycles,
                           r.report.active_fraction, r.report.model.per_cycle_fj, r.report.standard.per_cycle_fj,
                           r.report.model.per_flit_fj.value_or(0.0), r.report.model.per_payload_byte_fj.value_or(0.0),
                           r.model_total_fj, r.standard_total_fj);
    }
    out << fmt::format("TOTAL,,,,,,,,{:.17g},{:.17g},{:.17g}\n", energy.model_fj_per_byte(), energy.model_total_fj,
                       energy.standard_total_fj);
}

void emit_reports(const SimulationResult& result, const std::filesystem::path& out_dir, const EnergyAnalysis* energy)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "M", ec);
    if (ec) throw RuntimeError("cannot create " + (out_dir / "M").string() + ": " + ec.message());
    fs::create_directories(out_dir / "streams", ec);
    if (ec) throw RuntimeError("cannot create " + (out_dir / "streams").string() + ": " + ec.message());

    for (std::size_t k = 0; k < result.links.size(); ++k)
        write_data_flow_csv(out_dir / "M" / (result.links[k].name + ".csv"), result.flows[k]);
    for (std::size_t t = 0; t < result.type_words.size(); ++t) {
        DataStream s;
        s.width = result.link_width;
        s.type_id = static_cast<std::uint32_t>(t + 1);
        s.words = result.type_words[t];
        write_stream_binary(out_dir / "streams" / fmt::format("type_{}.nestrm", t + 1), s);
    }

    json j;
    j["cycles"] = result.cycles;
    j["types"] = result.types;
    j["head_type"] = result.types;
    j["data_width"] = result.data_width;
    j["link_width"] = result.link_width;
    j["clock_period_s"] = result.clock_period;
    j["vc_count"] = result.vc_count;
    j["codec"] = result.codec.token();
    j["packets"] = {{"created", result.packets_created}, {"delivered", result.packets_delivered}};
    j["flits"] = {{"injected", result.flits_injected}, {"delivered", result.flits_delivered}};
    j["latency"] = {{"flit", latency_json(result.flit_latency, result.clock_period)},
                    {"network", latency_json(result.packet_latency, result.clock_period)}};
    json links = json::array();
    for (std::size_t k = 0; k < result.links.size(); ++k) {
        const auto& l = result.links[k];
        links.push_back({{"id", l.id},
                         {"name", l.name},
                         {"kind", link_kind_name(l.kind)},
                         {"from", l.from},
                         {"to", l.to},
                         {"port", std::string(port_name(l.port))},
                         {"vertical", l.vertical()},
                         {"cycles", result.link_cycles[k]},
                         {"flits", result.link_flits[k]},
                         {"active_fraction", result.flows[k].active_fraction()},
                         {"matrix", "M/" + l.name + ".csv"}});
    }
    j["links"] = links;
    json sources = json::array();
    for (const auto& s : result.sources)
        sources.push_back({{"name", s.name},
                           {"type", s.type + 1},
                           {"packets", s.packets},
                           {"words_consumed", s.words_consumed},
                           {"recycles", s.recycles},
                           {"blocked_pe_cycles", s.blocked_cycles}});
    j["sources"] = sources;
    if (energy) {
        j["energy"] = {{"model_total_fj", energy->model_total_fj},
                       {"standard_total_fj", energy->standard_total_fj},
                       {"payload_bytes", energy->payload_bytes},
                       {"model_fj_per_byte", energy->model_fj_per_byte()}};
    }
    open_out(out_dir / "summary.json") << j.dump(2) << '\n';

    {
        auto out = open_out(out_dir / "latency.txt");
        out << fmt::format("Network performance with {} virtual channel(s)\n", result.vc_count);
        auto line = [&](const char* label, const std::vector<std::uint64_t>& samples) {
            if (samples.empty()) {
                out << fmt::format("{:<26}{:>12}\n", label, "n/a");
                return;
            }
            const auto s = latency_stats(samples, result.clock_period);
            out << fmt::format("{:<26}{:>9.1f} ns  (median {:.1f}, p95 {:.1f}, max {:.1f} ns; {} samples)\n", label,
                               s.mean_ns(), s.median_ns(), s.p95_ns(), s.max_ns(), s.count);
        };
        line("Avg. flit latency:", result.flit_latency);
        line("Avg. network latency:", result.packet_latency);
        out << fmt::format("{:<26}{:>9}\n", "Packets delivered:", result.packets_delivered);
    }
    {
        auto out = open_out(out_dir / "utilization.txt");
        out << fmt::format("{:<32} {:>8} {:>10} {:>12}\n", "link", "kind", "flits", "utilization");
        for (std::size_t k = 0; k < result.links.size(); ++k)
            out << fmt::format("{:<32} {:>8} {:>10} {:>12.4f}\n", result.links[k].name,
                               link_kind_name(result.links[k].kind), result.link_flits[k],
                               result.flows[k].active_fraction());
    }
    if (energy) write_energy_csv(out_dir / "energy.csv", *energy);
}

RunArtifacts load_run(const std::filesystem::path& dir)
{
    const auto summary_path = dir / "summary.json";
    std::ifstream in(summary_path);
    if (!in) throw ValidationError("missing " + summary_path.string() + " (run `simulate --out` first)");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(summary_path.string() + ": " + e.what());
    }
    RunArtifacts run;
    try {
        run.data_width = j.at("data_width").get<unsigned>();
        run.link_width = j.at("link_width").get<unsigned>();
        run.codec = CodecSpec::parse(j.at("codec").get<std::string>());
        run.clock_period = j.at("clock_period_s").get<double>();
        const auto types = j.at("types").get<std::uint32_t>();
        for (const auto& l : j.at("links")) {
            LinkInfo info;
            info.id = l.at("id").get<std::uint32_t>();
            info.name = l.at("name").get<std::string>();
            info.kind = parse_link_kind(l.at("kind").get<std::string>());
            info.from = l.at("from").get<std::uint32_t>();
            info.to = l.at("to").get<std::uint32_t>();
            info.port = parse_port(l.at("port").get<std::string>());
            run.links.push_back(info);
            run.flows.push_back(read_data_flow_csv(dir / l.at("matrix").get<std::string>()));
        }
        for (std::uint32_t t = 0; t < types; ++t) {
            const auto p = dir / "streams" / fmt::format("type_{}.nestrm", t + 1);
            if (!std::filesystem::exists(p)) throw ValidationError("missing stream file " + p.string());
            run.type_words.push_back(read_stream_binary(p).words);
        }
    } catch (const json::exception& e) {
        throw ValidationError(summary_path.string() + ": " + e.what());
    }
    return run;
}

}  // namespace vclink
