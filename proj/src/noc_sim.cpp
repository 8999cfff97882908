#include "vclink/noc_sim.hpp"

#include "vclink/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <map>
#include <numeric>

namespace vclink {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

constexpr int kNoLink = -1;

enum class VcState : std::uint8_t { Idle, Routed, Active };

struct InputVc {
    std::deque<Flit> buffer;
    VcState state = VcState::Idle;
    Port out = Port::Local;
    unsigned out_vc = 0;
};

struct Router {
    std::uint32_t node = 0;
    Coord pos;
    unsigned delay = 1;
    std::array<int, kPortCount> in_link{};
    std::array<int, kPortCount> out_link{};
    std::array<std::vector<InputVc>, kPortCount> inputs;
    std::array<std::vector<OutputVc>, kPortCount> outputs;
    std::array<RoundRobinArbiter, kPortCount> switch_arb;
    std::array<RoundRobinArbiter, kPortCount> vc_arb;
};

struct Packet {
    std::uint64_t id = 0;
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::uint32_t type = 0;
    unsigned priority = 0;
    std::uint64_t created = 0;
    std::vector<std::uint64_t> words;
    int source = -1;  // traffic source index, -1 for scripted packets
};

struct NiChannel {
    bool busy = false;
    Packet packet;
    std::uint32_t next = 0;
    std::uint64_t ready_since = 0;
    unsigned credits = 0;
};

struct Reassembly {
    bool open = false;
    std::uint64_t packet_id = 0;
    std::uint32_t next_seq = 0;
    DeliveredPacket packet;
};

struct Interface {
    std::uint32_t node = 0;
    unsigned delay = 1;
    int inject = kNoLink;
    int eject = kNoLink;
    std::deque<Packet> queue;
    std::vector<NiChannel> channels;
    RoundRobinArbiter arb;
    std::vector<std::size_t> sources;
    std::map<int, unsigned> home;  // source -> local VC
    std::vector<Reassembly> rx;  // per eject VC
};

struct Link {
    LinkInfo info;
    std::deque<Flit> flits;
    std::deque<std::pair<std::uint64_t, std::uint8_t>> credits;  // (ready, vc), travelling upstream
    LinkObserver observer;
    bool sent = false;
    std::uint32_t sent_type = 0;
    std::uint64_t sent_word = 0;
    std::uint64_t held_word = 0;
    std::uint64_t flit_count = 0;
    std::uint64_t cycles = 0;
    LinkTrace trace;
    std::unique_ptr<std::ofstream> protocol;

    Link(LinkInfo i, std::uint32_t types) : info(std::move(i)), observer(info.name, types) {}
};

bool better_priority(const Flit& a, const Flit& b)
{
    return a.priority < b.priority;
}

}  // namespace

RoutingAlgorithm parse_routing(std::string_view token)
{
    const auto t = lower(token);
    if (t == "xyz" || t == "xy") return RoutingAlgorithm::XYZ;
    throw ValidationError("unknown routing algorithm '" + std::string(token) + "' (supported: XYZ)");
}

SelectionStrategy parse_selection(std::string_view token)
{
    const auto t = lower(token);
    if (t == "roundrobin" || t == "round_robin") return SelectionStrategy::RoundRobin;
    throw ValidationError("unknown selection strategy '" + std::string(token) + "' (supported: RoundRobin)");
}

ArbitrationMode parse_arbitration(std::string_view token)
{
    const auto t = lower(token);
    if (t == "fair") return ArbitrationMode::Fair;
    if (t == "priority") return ArbitrationMode::Priority;
    throw ValidationError("unknown arbitration '" + std::string(token) + "' (expected fair or priority)");
}

std::string_view to_string(ArbitrationMode mode)
{
    return mode == ArbitrationMode::Fair ? "fair" : "priority";
}

void RouterConfig::validate() const
{
    if (vc_count < 1 || vc_count > 255) throw ValidationError("vcCount must be in 1..255");
    if (buffer_depth < 1) throw ValidationError("bufferDepth must be >= 1");
    if (clock_delay < 1) throw ValidationError("router clockDelay must be >= 1");
}

void NetworkConfig::validate() const
{
    router.validate();
    if (pe_clock_delay < 1) throw ValidationError("PE clockDelay must be >= 1");
    if (flit_width < 1 || flit_width > kMaxWidth - 1)
        throw ValidationError("flitWidth must be in 1.." + std::to_string(kMaxWidth - 1));
    if (flits_per_packet < 1) throw ValidationError("flitsPerPacket must be >= 1");
    if (ni_queue_depth < 1) throw ValidationError("niQueueDepth must be >= 1");
    if (!(clock_period > 0.0)) throw ValidationError("clockPeriod must be > 0");
    for (const auto& m : {router_delay, pe_delay})
        for (const auto& [node, d] : m) {
            if (node >= topology.node_count()) throw ValidationError("clock delay override for unknown node");
            if (d < 1) throw ValidationError("clockDelay must be >= 1");
        }
}

std::string NetworkConfig::node_name(std::uint32_t node) const
{
    if (auto it = node_names.find(node); it != node_names.end()) return it->second;
    const auto c = topology.coord(node);
    return "R" + std::to_string(c.x) + "-" + std::to_string(c.y) + "-" + std::to_string(c.z);
}

std::uint64_t head_word(std::uint32_t dst, std::uint64_t packet_id, unsigned width, std::size_t node_count)
{
    const unsigned dst_bits = std::max(1u, static_cast<unsigned>(std::bit_width(node_count > 0 ? node_count - 1 : 0)));
    if (width <= dst_bits) return dst & width_mask(width);
    const unsigned id_bits = width - dst_bits;
    return ((std::uint64_t{dst} << id_bits) | (packet_id & width_mask(id_bits))) & width_mask(width);
}

std::optional<std::size_t> RoundRobinArbiter::peek(const std::vector<bool>& requests) const
{
    const std::size_t n = requests.size();
    if (n == 0) return std::nullopt;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = (next_ + k) % n;
        if (requests[i]) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> RoundRobinArbiter::arbitrate(const std::vector<bool>& requests)
{
    if (requests.size() != size_) size_ = requests.size();
    auto w = peek(requests);
    if (w) grant(*w);
    return w;
}

std::optional<unsigned> allocate_vc(std::span<const OutputVc> vcs, unsigned buffer_depth, ArbitrationMode mode,
                                    unsigned priority)
{
    auto is_free = [&](unsigned v) { return !vcs[v].allocated && vcs[v].credits == buffer_depth; };
    if (vcs.empty()) return std::nullopt;
    if (mode == ArbitrationMode::Priority) {
        const unsigned v = std::min<unsigned>(priority, static_cast<unsigned>(vcs.size() - 1));
        return is_free(v) ? std::optional<unsigned>(v) : std::nullopt;
    }
    for (unsigned v = 0; v < vcs.size(); ++v)
        if (is_free(v)) return v;
    return std::nullopt;
}

std::optional<std::uint32_t> SimulationResult::find_link(std::string_view name) const
{
    for (const auto& l : links)
        if (l.name == name) return l.id;
    return std::nullopt;
}

struct Network::Impl {
    NetworkConfig cfg;
    SimOptions opts;
    std::uint32_t types = 1;
    std::uint32_t head_type = 0;
    unsigned link_width = 0;
    unsigned depth = 0;
    unsigned vcs = 1;
    std::uint64_t now = 0;
    bool injection = true;
    std::uint64_t next_packet = 0;

    std::vector<Router> routers;
    std::vector<Interface> nis;
    std::vector<Link> links;
    std::vector<LinkInfo> infos;
    std::vector<TrafficSource> sources;
    std::vector<SourceReport> source_reports;

    std::uint64_t flits_injected = 0;
    std::uint64_t flits_delivered = 0;
    std::uint64_t packets_created = 0;
    std::uint64_t packets_delivered = 0;
    std::vector<std::uint64_t> flit_latency;
    std::vector<std::uint64_t> packet_latency;
    std::vector<std::vector<std::uint64_t>> type_words;
    std::vector<DeliveredPacket> delivered;

    Impl(NetworkConfig c, std::vector<InjectionSpec> traffic, SimOptions o);

    bool ticks(unsigned delay) const { return now % delay == 0; }
    int add_link(LinkKind kind, std::uint32_t from, std::uint32_t to, Port port);

    void router_receive(Router& r);
    void router_switch(Router& r);
    void router_allocate(Router& r);
    void router_route(Router& r);
    void ni_eject(Interface& ni);
    void ni_tick(Interface& ni);
    void observe(Link& l);
    void send(Link& l, Flit f);
    void check() const;
    std::uint64_t in_flight() const;
};

int Network::Impl::add_link(LinkKind kind, std::uint32_t from, std::uint32_t to, Port port)
{
    LinkInfo info;
    info.id = static_cast<std::uint32_t>(links.size());
    info.kind = kind;
    info.from = from;
    info.to = to;
    info.port = port;
    const auto a = cfg.node_name(from);
    const auto b = cfg.node_name(to);
    switch (kind) {
    case LinkKind::Inject: info.name = "NI_" + a + "_to_" + a; break;
    case LinkKind::Eject: info.name = a + "_to_NI_" + a; break;
    case LinkKind::Router: info.name = a + "_to_" + b; break;
    }
    links.emplace_back(info, types);
    auto& l = links.back();
    l.trace.width = link_width;
    l.trace.types = types;
    if (opts.protocol_dir) {
        l.protocol = std::make_unique<std::ofstream>(*opts.protocol_dir / (info.name + ".protocol.csv"));
        if (!*l.protocol) throw RuntimeError("cannot write protocol file in " + opts.protocol_dir->string());
        *l.protocol << "# link=" << info.name << " width=" << link_width << " n=" << types << '\n';
    }
    infos.push_back(info);
    return static_cast<int>(info.id);
}

Network::Impl::Impl(NetworkConfig c, std::vector<InjectionSpec> traffic, SimOptions o)
    : cfg(std::move(c)), opts(std::move(o))
{
    cfg.validate();
    validate_traffic(traffic, cfg.topology, cfg.flit_width);
    const auto payload_types =
        opts.payload_types.value_or(static_cast<std::uint32_t>(traffic.size()));
    for (const auto& t : traffic)
        if (t.type_id >= payload_types)
            throw ValidationError("traffic source '" + t.name + "': type id out of range");
    types = payload_types + 1;
    head_type = types - 1;
    link_width = opts.codec.output_width(cfg.flit_width);
    if (link_width > kMaxWidth) throw ValidationError("link width exceeds " + std::to_string(kMaxWidth) + " bits");
    depth = cfg.router.buffer_depth;
    vcs = cfg.router.vc_count;
    if (opts.protocol_dir) std::filesystem::create_directories(*opts.protocol_dir);

    const auto& topo = cfg.topology;
    const auto n = static_cast<std::uint32_t>(topo.node_count());
    routers.resize(n);
    nis.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto& r = routers[i];
        r.node = i;
        r.pos = topo.coord(i);
        r.delay = cfg.router_delay.count(i) ? cfg.router_delay.at(i) : cfg.router.clock_delay;
        r.in_link.fill(kNoLink);
        r.out_link.fill(kNoLink);
        for (int p = 0; p < kPortCount; ++p) {
            r.inputs[p].resize(vcs);
            r.outputs[p].assign(vcs, OutputVc{false, depth});
            r.switch_arb[p] = RoundRobinArbiter(std::size_t{kPortCount} * vcs);
            r.vc_arb[p] = RoundRobinArbiter(std::size_t{kPortCount} * vcs);
        }
        auto& ni = nis[i];
        ni.node = i;
        ni.delay = cfg.pe_delay.count(i) ? cfg.pe_delay.at(i) : cfg.pe_clock_delay;
        ni.channels.resize(vcs);
        for (auto& ch : ni.channels) ch.credits = depth;
        ni.arb = RoundRobinArbiter(vcs);
        ni.rx.resize(vcs);
    }
    // Links in a fixed order: per node, inject and eject first, then router
    // outputs by ascending port index.
    for (std::uint32_t i = 0; i < n; ++i) {
        auto& r = routers[i];
        const int inj = add_link(LinkKind::Inject, i, i, Port::Local);
        nis[i].inject = inj;
        r.in_link[0] = inj;
        const int ej = add_link(LinkKind::Eject, i, i, Port::Local);
        nis[i].eject = ej;
        r.out_link[0] = ej;
        for (int p = 1; p < kPortCount; ++p) {
            const auto nb = topo.index_of(vclink::step(r.pos, static_cast<Port>(p)));
            if (!nb) continue;
            r.out_link[p] = add_link(LinkKind::Router, i, *nb, static_cast<Port>(p));
        }
    }
    for (const auto& l : links)
        if (l.info.kind == LinkKind::Router)
            routers[l.info.to].in_link[static_cast<int>(opposite(l.info.port))] = static_cast<int>(l.info.id);

    type_words.resize(types);
    for (std::size_t k = 0; k < traffic.size(); ++k) {
        auto payload = materialize_payload(traffic[k].payload, cfg.flit_width);
        const auto node = topo.require_index(traffic[k].source);
        SourceReport rep;
        rep.name = traffic[k].name;
        rep.type = traffic[k].type_id;
        source_reports.push_back(rep);
        sources.emplace_back(std::move(traffic[k]), std::move(payload), cfg.flit_width, opts.codec,
                             source_seed(opts.seed, k));
        nis[node].sources.push_back(k);
    }
}

void Network::Impl::send(Link& l, Flit f)
{
    f.ready = now + 1;
    l.sent = true;
    l.sent_type = f.type;
    l.sent_word = f.word;
    l.flits.push_back(std::move(f));
}

void Network::Impl::observe(Link& l)
{
    ++l.cycles;
    if (l.sent) {
        l.observer.record_active(l.sent_type);
        l.held_word = l.sent_word;
        ++l.flit_count;
        if (opts.capture_traces) l.trace.push_active(l.sent_word, l.sent_type);
    } else {
        l.observer.record_idle();
        if (opts.capture_traces) l.trace.push_idle();
    }
    if (l.protocol) {
        char buf[24];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, l.held_word, 16);
        auto& out = *l.protocol;
        out << l.cycles << ',';
        if (l.sent)
            out << (l.sent_type + 1);
        else
            out << "IDLE";
        out << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
    }
    l.sent = false;
}

void Network::Impl::router_receive(Router& r)
{
    for (int p = 0; p < kPortCount; ++p) {
        if (r.in_link[p] != kNoLink) {
            auto& l = links[r.in_link[p]];
            while (!l.flits.empty() && l.flits.front().ready <= now) {
                Flit f = std::move(l.flits.front());
                l.flits.pop_front();
                auto& buf = r.inputs[p][f.vc].buffer;
                if (buf.size() >= depth)
                    throw RuntimeError("internal error: buffer overflow at " + cfg.node_name(r.node) + " port " +
                                       std::string(port_name(static_cast<Port>(p))) + " vc " + std::to_string(f.vc));
                buf.push_back(std::move(f));
            }
        }
        if (r.out_link[p] != kNoLink) {
            auto& l = links[r.out_link[p]];
            while (!l.credits.empty() && l.credits.front().first <= now) {
                auto& ovc = r.outputs[p][l.credits.front().second];
                if (++ovc.credits > depth)
                    throw RuntimeError("internal error: credit overflow at " + cfg.node_name(r.node));
                l.credits.pop_front();
            }
        }
    }
}

void Network::Impl::router_switch(Router& r)
{
    std::array<bool, kPortCount> input_used{};
    std::vector<bool> ready(std::size_t{kPortCount} * vcs);
    for (int o = 0; o < kPortCount; ++o) {
        if (r.out_link[o] == kNoLink) continue;
        std::fill(ready.begin(), ready.end(), false);
        bool any = false;
        for (int p = 0; p < kPortCount; ++p) {
            if (input_used[p]) continue;
            for (unsigned v = 0; v < vcs; ++v) {
                const auto& ivc = r.inputs[p][v];
                if (ivc.state != VcState::Active || static_cast<int>(ivc.out) != o || ivc.buffer.empty()) continue;
                if (r.outputs[o][ivc.out_vc].credits == 0) continue;
                ready[std::size_t(p) * vcs + v] = true;
                any = true;
            }
        }
        if (!any) continue;

        std::optional<std::size_t> win;
        if (cfg.router.arbitration == ArbitrationMode::Priority) {
            // Highest class among ready VCs; round robin among equals.
            int best = -1;
            for (std::size_t k = 0; k < ready.size(); ++k)
                if (ready[k]) {
                    const auto& f = r.inputs[k / vcs][k % vcs].buffer.front();
                    if (best < 0 || better_priority(f, r.inputs[best / vcs][best % vcs].buffer.front()))
                        best = static_cast<int>(k);
                }
            const auto top = r.inputs[best / vcs][best % vcs].buffer.front().priority;
            for (std::size_t k = 0; k < ready.size(); ++k)
                if (ready[k] && r.inputs[k / vcs][k % vcs].buffer.front().priority != top) ready[k] = false;
        }
        win = r.switch_arb[o].arbitrate(ready);
        const int p = static_cast<int>(*win / vcs);
        const unsigned v = static_cast<unsigned>(*win % vcs);
        auto& ivc = r.inputs[p][v];
        Flit f = std::move(ivc.buffer.front());
        ivc.buffer.pop_front();
        input_used[p] = true;

        auto& ovc = r.outputs[o][ivc.out_vc];
        --ovc.credits;
        f.vc = static_cast<std::uint8_t>(ivc.out_vc);
        const bool tail = f.tail;
        send(links[r.out_link[o]], std::move(f));
        links[r.in_link[p]].credits.emplace_back(now + 1, static_cast<std::uint8_t>(v));
        if (tail) {
            ivc.state = VcState::Idle;
            ovc.allocated = false;
        }
    }
}

void Network::Impl::router_allocate(Router& r)
{
    std::vector<bool> req(std::size_t{kPortCount} * vcs);
    for (int o = 0; o < kPortCount; ++o) {
        if (r.out_link[o] == kNoLink) continue;
        bool any = false;
        for (int p = 0; p < kPortCount; ++p)
            for (unsigned v = 0; v < vcs; ++v) {
                const auto& ivc = r.inputs[p][v];
                const bool want = ivc.state == VcState::Routed && static_cast<int>(ivc.out) == o;
                req[std::size_t(p) * vcs + v] = want;
                any |= want;
            }
        if (!any) continue;
        // Requesters are served in round-robin order; each takes a VC if one
        // is available for it.
        auto& arb = r.vc_arb[o];
        const std::size_t n = req.size();
        const std::size_t start = arb.pointer();
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = (start + k) % n;
            if (!req[idx]) continue;
            auto& ivc = r.inputs[idx / vcs][idx % vcs];
            const auto vc = allocate_vc(r.outputs[o], depth, cfg.router.arbitration, ivc.buffer.front().priority);
            if (!vc) continue;
            ivc.state = VcState::Active;
            ivc.out_vc = *vc;
            r.outputs[o][*vc].allocated = true;
            arb.grant(idx);
        }
    }
}

void Network::Impl::router_route(Router& r)
{
    for (int p = 0; p < kPortCount; ++p)
        for (unsigned v = 0; v < vcs; ++v) {
            auto& ivc = r.inputs[p][v];
            if (ivc.state != VcState::Idle || ivc.buffer.empty()) continue;
            const auto& f = ivc.buffer.front();
            if (!f.head)
                throw RuntimeError("internal error: body flit at the front of an idle VC at " + cfg.node_name(r.node));
            ivc.out = route_xyz(cfg.topology, r.pos, cfg.topology.coord(f.dst));
            ivc.state = VcState::Routed;
        }
}

void Network::Impl::ni_eject(Interface& ni)
{
    auto& l = links[ni.eject];
    while (!l.flits.empty() && l.flits.front().ready <= now) {
        Flit f = std::move(l.flits.front());
        l.flits.pop_front();
        l.credits.emplace_back(now + 1, f.vc);
        if (f.dst != ni.node)
            throw RuntimeError("internal error: flit of packet " + std::to_string(f.packet_id) + " ejected at " +
                               cfg.node_name(ni.node) + " instead of " + cfg.node_name(f.dst));
        auto& rx = ni.rx[f.vc];
        if (f.head) {
            if (rx.open) throw RuntimeError("internal error: head flit interleaved into an open packet");
            rx.open = true;
            rx.packet_id = f.packet_id;
            rx.next_seq = 0;
            rx.packet = DeliveredPacket{f.packet_id, f.src, f.dst, 0, f.created, 0, {}};
        }
        if (!rx.open || rx.packet_id != f.packet_id || rx.next_seq != f.seq)
            throw RuntimeError("internal error: flit " + std::to_string(f.seq) + " of packet " +
                               std::to_string(f.packet_id) + " arrived out of order");
        ++rx.next_seq;
        if (!f.head) {
            rx.packet.type = f.type;
            if (opts.keep_delivered) rx.packet.words.push_back(f.word);
        }
        ++flits_delivered;
        flit_latency.push_back(now - f.enqueued);
        if (f.tail) {
            ++packets_delivered;
            packet_latency.push_back(now - f.created);
            rx.open = false;
            if (opts.keep_delivered) {
                rx.packet.completed = now;
                delivered.push_back(std::move(rx.packet));
            }
        }
    }
}

void Network::Impl::ni_tick(Interface& ni)
{
    auto& inj = links[ni.inject];
    while (!inj.credits.empty() && inj.credits.front().first <= now) {
        auto& ch = ni.channels[inj.credits.front().second];
        if (++ch.credits > depth) throw RuntimeError("internal error: credit overflow at NI");
        inj.credits.pop_front();
    }

    const unsigned flits = cfg.flits_per_packet;
    for (auto k : ni.sources) {
        auto& src = sources[k];
        if (!injection) continue;
        if (ni.queue.size() >= cfg.ni_queue_depth) {
            ++source_reports[k].blocked_cycles;
            continue;
        }
        if (!src.trial()) continue;
        Packet pkt;
        pkt.id = next_packet++;
        pkt.src = ni.node;
        pkt.dst = cfg.topology.require_index(src.spec().destination);
        pkt.type = src.spec().type_id;
        pkt.priority = src.spec().priority;
        pkt.created = now;
        pkt.words = src.next_payload(flits - 1);
        pkt.source = static_cast<int>(k);
        ++packets_created;
        ++source_reports[k].packets;
        ni.queue.push_back(std::move(pkt));
    }

    // Queued packets claim free local VCs in order. A source keeps at most
    // one packet in service so its words enter the network in stream order.
    for (auto it = ni.queue.begin(); it != ni.queue.end();) {
        const bool source_busy =
            it->source >= 0 && std::any_of(ni.channels.begin(), ni.channels.end(), [&](const NiChannel& ch) {
                return ch.busy && ch.packet.source == it->source;
            });
        if (source_busy) {
            ++it;
            continue;
        }
        // Packets of one source share a local VC and stay FIFO past the first router.
        std::optional<unsigned> vc;
        const auto pinned = ni.home.find(it->source);
        if (pinned != ni.home.end()) {
            const auto& ch = ni.channels[pinned->second];
            if (!ch.busy && ch.credits == depth) vc = pinned->second;
        } else {
            std::vector<OutputVc> view(vcs);
            for (unsigned v = 0; v < vcs; ++v) view[v] = {ni.channels[v].busy, ni.channels[v].credits};
            vc = allocate_vc(view, depth, cfg.router.arbitration, it->priority);
            if (vc && it->source >= 0) ni.home[it->source] = *vc;
        }
        if (!vc) {
            if (pinned != ni.home.end()) {
                ++it;
                continue;
            }
            if (cfg.router.arbitration == ArbitrationMode::Fair) break;
            ++it;
            continue;
        }
        auto& ch = ni.channels[*vc];
        ch.busy = true;
        ch.packet = std::move(*it);
        ch.next = 0;
        ch.ready_since = now;
        it = ni.queue.erase(it);
    }

    std::vector<bool> ready(vcs, false);
    bool any = false;
    for (unsigned v = 0; v < vcs; ++v) {
        ready[v] = ni.channels[v].busy && ni.channels[v].credits > 0;
        any |= ready[v];
    }
    if (any) {
        if (cfg.router.arbitration == ArbitrationMode::Priority) {
            unsigned top = ~0u;
            for (unsigned v = 0; v < vcs; ++v)
                if (ready[v]) top = std::min(top, ni.channels[v].packet.priority);
            for (unsigned v = 0; v < vcs; ++v)
                if (ready[v] && ni.channels[v].packet.priority != top) ready[v] = false;
        }
        const auto v = static_cast<unsigned>(*ni.arb.arbitrate(ready));
        auto& ch = ni.channels[v];
        const auto& pkt = ch.packet;
        Flit f;
        f.head = ch.next == 0;
        f.tail = ch.next + 1 == flits;
        f.packet_id = pkt.id;
        f.type = f.head ? head_type : pkt.type;
        f.word = f.head ? head_word(pkt.dst, pkt.id, cfg.flit_width, cfg.topology.node_count())
                        : pkt.words[ch.next - 1];
        f.src = pkt.src;
        f.dst = pkt.dst;
        f.seq = ch.next;
        f.vc = static_cast<std::uint8_t>(v);
        f.priority = static_cast<std::uint8_t>(std::min(pkt.priority, 255u));
        f.created = pkt.created;
        f.enqueued = ch.ready_since;
        if (opts.record_type_words) type_words[f.type].push_back(f.word);
        --ch.credits;
        ++flits_injected;
        send(inj, std::move(f));
        if (++ch.next == flits) {
            ch.busy = false;
            ch.packet.words.clear();
        } else {
            ch.ready_since = now + ni.delay;
        }
    }
    observe(inj);
}

std::uint64_t Network::Impl::in_flight() const
{
    std::uint64_t n = 0;
    for (const auto& l : links) n += l.flits.size();
    for (const auto& r : routers)
        for (const auto& port : r.inputs)
            for (const auto& ivc : port) n += ivc.buffer.size();
    return n;
}

void Network::Impl::check() const
{
    if (flits_injected != in_flight() + flits_delivered)
        throw RuntimeError("internal error: flit conservation violated at cycle " + std::to_string(now));
    for (const auto& r : routers)
        for (int o = 0; o < kPortCount; ++o) {
            std::vector<unsigned> owners(r.outputs[o].size(), 0);
            for (const auto& port : r.inputs)
                for (const auto& ivc : port)
                    if (ivc.state == VcState::Active && static_cast<int>(ivc.out) == o) ++owners[ivc.out_vc];
            for (std::size_t v = 0; v < owners.size(); ++v)
                if (owners[v] != (r.outputs[o][v].allocated ? 1u : 0u))
                    throw RuntimeError("internal error: output vc " + std::to_string(v) + " of " +
                                       cfg.node_name(r.node) + " port " +
                                       std::string(port_name(static_cast<Port>(o))) + " has " +
                                       std::to_string(owners[v]) + " owners at cycle " + std::to_string(now));
        }
    for (const auto& l : links) {
        std::vector<unsigned> held(vcs, 0);
        for (const auto& f : l.flits) ++held[f.vc];
        for (const auto& c : l.credits) ++held[c.second];
        for (unsigned v = 0; v < vcs; ++v) {
            unsigned credits = 0;
            if (l.info.kind == LinkKind::Inject)
                credits = nis[l.info.from].channels[v].credits;
            else
                credits = routers[l.info.from].outputs[static_cast<int>(l.info.port)][v].credits;
            std::size_t occupancy = 0;
            if (l.info.kind != LinkKind::Eject) {
                const auto in_port = l.info.kind == LinkKind::Inject ? 0 : static_cast<int>(opposite(l.info.port));
                const auto& buf = routers[l.info.to].inputs[in_port][v].buffer;
                occupancy = buf.size();
                for (const auto& f : buf)
                    if (f.packet_id != buf.front().packet_id)
                        throw RuntimeError("internal error: VC holds flits of two packets on " + l.info.name);
            }
            if (occupancy > depth)
                throw RuntimeError("internal error: buffer occupancy above depth on " + l.info.name);
            if (credits + held[v] + occupancy != depth)
                throw RuntimeError("internal error: credit invariant violated on " + l.info.name + " vc " +
                                   std::to_string(v) + " at cycle " + std::to_string(now) + " (credits " +
                                   std::to_string(credits) + ", in flight " + std::to_string(held[v]) +
                                   ", buffered " + std::to_string(occupancy) + ")");
        }
    }
}

Network::Network(NetworkConfig config, std::vector<InjectionSpec> traffic, SimOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(traffic), std::move(options)))
{
}

Network::~Network() = default;

void Network::step()
{
    auto& s = *impl_;
    for (auto& r : s.routers)
        if (s.ticks(r.delay)) s.router_receive(r);
    for (auto& r : s.routers) {
        if (!s.ticks(r.delay)) continue;
        s.router_switch(r);
        s.router_allocate(r);
        s.router_route(r);
        for (int o = 0; o < kPortCount; ++o)
            if (r.out_link[o] != kNoLink) s.observe(s.links[r.out_link[o]]);
    }
    for (auto& ni : s.nis) {
        s.ni_eject(ni);
        if (s.ticks(ni.delay)) s.ni_tick(ni);
    }
    if (s.opts.check_invariants) s.check();
    ++s.now;
}

std::uint64_t Network::now() const
{
    return impl_->now;
}

std::uint64_t Network::enqueue_packet(Coord src, Coord dst, std::uint32_t type, std::vector<std::uint64_t> payload,
                                      unsigned priority)
{
    auto& s = *impl_;
    const auto from = s.cfg.topology.require_index(src);
    const auto to = s.cfg.topology.require_index(dst);
    if (type >= s.head_type) throw ValidationError("enqueue_packet: payload type out of range");
    if (payload.size() != s.cfg.flits_per_packet - 1)
        throw ValidationError("enqueue_packet: payload must have flitsPerPacket - 1 words");
    for (auto& w : payload) w &= width_mask(s.link_width);
    Packet p;
    p.id = s.next_packet++;
    p.src = from;
    p.dst = to;
    p.type = type;
    p.priority = priority;
    p.created = s.now;
    p.words = std::move(payload);
    ++s.packets_created;
    s.nis[from].queue.push_back(std::move(p));
    return s.next_packet - 1;
}

void Network::set_injection_enabled(bool enabled)
{
    impl_->injection = enabled;
}

bool Network::drained() const
{
    const auto& s = *impl_;
    if (s.in_flight() != 0) return false;
    for (const auto& ni : s.nis) {
        if (!ni.queue.empty()) return false;
        for (const auto& ch : ni.channels)
            if (ch.busy) return false;
    }
    return true;
}

void Network::check_invariants() const
{
    impl_->check();
}

const NetworkConfig& Network::config() const
{
    return impl_->cfg;
}

std::uint32_t Network::types() const
{
    return impl_->types;
}

unsigned Network::link_width() const
{
    return impl_->link_width;
}

const std::vector<LinkInfo>& Network::links() const
{
    return impl_->infos;
}

std::optional<std::uint32_t> Network::find_link(Coord from, Coord to) const
{
    const auto& topo = impl_->cfg.topology;
    const auto a = topo.index_of(from), b = topo.index_of(to);
    if (!a || !b) return std::nullopt;
    for (const auto& l : impl_->infos)
        if (l.kind == LinkKind::Router && l.from == *a && l.to == *b) return l.id;
    return std::nullopt;
}

std::uint32_t Network::inject_link(Coord node) const
{
    return static_cast<std::uint32_t>(impl_->nis[impl_->cfg.topology.require_index(node)].inject);
}

std::uint32_t Network::eject_link(Coord node) const
{
    return static_cast<std::uint32_t>(impl_->nis[impl_->cfg.topology.require_index(node)].eject);
}

const LinkObserver& Network::observer(std::uint32_t link) const
{
    return impl_->links.at(link).observer;
}

const LinkTrace& Network::trace(std::uint32_t link) const
{
    return impl_->links.at(link).trace;
}

std::uint64_t Network::flits_injected() const
{
    return impl_->flits_injected;
}

std::uint64_t Network::flits_delivered() const
{
    return impl_->flits_delivered;
}

std::uint64_t Network::flits_in_flight() const
{
    return impl_->in_flight();
}

std::size_t Network::buffered_flits(Coord node, Port in_port, unsigned vc) const
{
    const auto& r = impl_->routers[impl_->cfg.topology.require_index(node)];
    return r.inputs[static_cast<int>(in_port)].at(vc).buffer.size();
}

const std::vector<DeliveredPacket>& Network::delivered() const
{
    return impl_->delivered;
}

SimulationResult Network::finish()
{
    auto& s = *impl_;
    SimulationResult out;
    out.cycles = s.now;
    out.types = s.types;
    out.data_width = s.cfg.flit_width;
    out.link_width = s.link_width;
    out.clock_period = s.cfg.clock_period;
    out.vc_count = s.vcs;
    out.codec = s.opts.codec;
    out.links = s.infos;
    for (auto& l : s.links) {
        if (l.protocol) l.protocol->flush();
        out.flows.push_back(l.observer.finalize());
        out.link_flits.push_back(l.flit_count);
        out.link_cycles.push_back(l.cycles);
        if (s.opts.capture_traces) out.traces.push_back(std::move(l.trace));
    }
    out.flit_latency = std::move(s.flit_latency);
    out.packet_latency = std::move(s.packet_latency);
    out.packets_created = s.packets_created;
    out.packets_delivered = s.packets_delivered;
    out.flits_injected = s.flits_injected;
    out.flits_delivered = s.flits_delivered;
    for (std::size_t k = 0; k < s.sources.size(); ++k) {
        auto rep = s.source_reports[k];
        rep.words_consumed = s.sources[k].consumed();
        rep.recycles = s.sources[k].recycles();
        out.sources.push_back(rep);
    }
    out.type_words = std::move(s.type_words);
    out.delivered = std::move(s.delivered);
    return out;
}

SimulationResult run(const NetworkConfig& config, const std::vector<InjectionSpec>& traffic,
                     const SimOptions& options)
{
    if (options.cycles < 1) throw ValidationError("cycles must be >= 1");
    Network net(config, traffic, options);
    for (std::uint64_t c = 0; c < options.cycles; ++c) net.step();
    if (options.drain_cycles > 0) {
        net.set_injection_enabled(false);
        for (std::uint64_t c = 0; c < options.drain_cycles && !net.drained(); ++c) net.step();
    }
    return net.finish();
}

}  // namespace vclink
