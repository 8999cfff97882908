#include "helpers.hpp"

#include "vclink/bit_oracle.hpp"
#include "vclink/config.hpp"
#include "vclink/error.hpp"
#include "vclink/noc_sim.hpp"

#include <set>

using namespace vclink;

namespace {

const char* kCaseStudy = VCLINK_SOURCE_DIR "/configs/case_study.xml";

NetworkConfig line3(unsigned vcs, unsigned flits)
{
    NetworkConfig c;
    c.topology = Topology(3, 1, 1);
    c.router.vc_count = vcs;
    c.flits_per_packet = flits;
    return c;
}

InjectionSpec source(Coord from, Coord to, double rate, std::uint64_t seed, std::uint32_t type = 0)
{
    InjectionSpec s;
    s.type_id = type;
    s.name = "S" + from.str();
    s.source = from;
    s.destination = to;
    s.rate = rate;
    StreamSpec p;
    p.width = 16;
    p.length = 4096;
    p.seed = seed;
    s.payload = p;
    return s;
}

}  // namespace

TEST_CASE("topology")
{
    const Topology t(2, 2, 1);
    CHECK(t.node_count() == 4);
    NetworkConfig c;
    c.topology = t;
    SimOptions o;
    o.cycles = 10;
    Network n(c, {}, o);
    std::size_t router = 0, local = 0;
    for (const auto& l : n.links()) (l.kind == LinkKind::Router ? router : local) += 1;
    CHECK(router == 8);
    CHECK(local == 8);

    const Topology cs(3, 2, 2, {{0, 1, 1, 1, 1}});
    CHECK(cs.node_count() == 7);
    CHECK_FALSE(cs.contains({0, 0, 0}));
    CHECK(cs.contains({1, 1, 0}));

    CHECK(route_xyz(Topology(2, 2, 2), {1, 0, 0}, {0, 1, 1}) == Port::XMinus);
    CHECK(route_xyz(Topology(2, 2, 2), {0, 1, 1}, {0, 1, 0}) == Port::ZMinus);
    CHECK(route_xyz(Topology(2, 2, 2), {0, 1, 1}, {0, 1, 1}) == Port::Local);
}

TEST_CASE("VC allocation and arbitration")
{
    std::vector<OutputVc> vcs(3, OutputVc{false, 4});
    CHECK(allocate_vc(vcs, 4, ArbitrationMode::Fair, 0) == 0u);
    vcs[0].allocated = true;
    vcs[1].credits = 3;  // still draining a previous packet
    CHECK(allocate_vc(vcs, 4, ArbitrationMode::Fair, 0) == 2u);
    vcs[2].allocated = true;
    CHECK_FALSE(allocate_vc(vcs, 4, ArbitrationMode::Fair, 0).has_value());
    std::vector<OutputVc> free(2, OutputVc{false, 4});
    CHECK(allocate_vc(free, 4, ArbitrationMode::Priority, 1) == 1u);
    CHECK(allocate_vc(free, 4, ArbitrationMode::Priority, 5) == 1u);

    RoundRobinArbiter rr(3);
    std::string order;
    for (int k = 0; k < 6; ++k) order += static_cast<char>('A' + *rr.arbitrate({true, true, true}));
    CHECK(order == "ABCABC");
    CHECK(*rr.arbitrate({false, true, false}) == 1u);
    CHECK(*rr.arbitrate({false, true, false}) == 1u);
}

TEST_CASE("single packet latency on an empty path")
{
    // Inject link (1 cycle) plus three routers with three stages each.
    for (unsigned flits : {2u, 5u}) {
        SimOptions o;
        o.cycles = 80;
        o.payload_types = 1;
        Network n(line3(2, flits), {}, o);
        n.enqueue_packet({0, 0, 0}, {2, 0, 0}, 0, std::vector<std::uint64_t>(flits - 1, 0x5a));
        for (int k = 0; k < 80; ++k) n.step();
        const auto r = n.finish();
        REQUIRE(r.packet_latency.size() == 1);
        for (auto l : r.flit_latency) CHECK(l == 10);
        CHECK(r.packet_latency.front() == 10 + flits - 1);
    }
}

TEST_CASE("idle network")
{
    SimOptions o;
    o.cycles = 500;
    const auto r = run(line3(2, 4), {}, o);
    for (const auto& f : r.flows) {
        const auto h = static_cast<Eigen::Index>(f.types) - 1;
        CHECK(f.M(f.idle(static_cast<std::uint32_t>(h)), f.idle(static_cast<std::uint32_t>(h))) == 1.0);
    }
}

TEST_CASE("heavy contention keeps credits and flits consistent")
{
    NetworkConfig c;
    c.topology = Topology(3, 3, 1);
    c.router.vc_count = 3;
    c.router.buffer_depth = 2;
    c.flits_per_packet = 6;
    std::vector<InjectionSpec> traffic;
    std::uint64_t seed = 1;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            if (x != 1 || y != 1) traffic.push_back(source({x, y, 0}, {1, 1, 0}, 0.3, seed++));
    SimOptions o;
    o.cycles = 20000;
    o.check_invariants = true;
    o.drain_cycles = 20000;
    o.seed = 9;
    const auto r = run(c, traffic, o);
    CHECK(r.flits_injected == r.flits_delivered);
    CHECK(r.packets_created >= r.packets_delivered);
    CHECK(r.packets_delivered > 0);
    for (const auto& f : r.flows) CHECK_NOTHROW(f.validate(1e-12));
}

TEST_CASE("payload words arrive intact and in order")
{
    auto c = line3(4, 8);
    std::vector<InjectionSpec> traffic{source({0, 0, 0}, {2, 0, 0}, 0.5, 1), source({1, 0, 0}, {2, 0, 0}, 0.5, 2, 1)};
    SimOptions o;
    o.cycles = 5000;
    o.drain_cycles = 5000;
    o.keep_delivered = true;
    const auto r = run(c, traffic, o);
    std::vector<std::vector<std::uint64_t>> got(2);
    for (const auto& p : r.delivered) got[p.type].insert(got[p.type].end(), p.words.begin(), p.words.end());
    for (std::size_t s = 0; s < 2; ++s) {
        const auto want = materialize_payload(traffic[s].payload, 16);
        REQUIRE(got[s].size() > 0);
        for (std::size_t k = 0; k < got[s].size(); ++k) CHECK(got[s][k] == want[k % want.size()]);
    }
}

TEST_CASE("case-study run: determinism, protocol recount, invariants")
{
    const auto cfg = parse_config(kCaseStudy);
    CHECK(cfg.network.topology.node_count() == 7);
    test::TempDir dir("proto");
    SimOptions o;
    o.cycles = 6000;
    o.seed = 3;
    o.protocol_dir = dir.path;
    o.check_invariants = true;
    const auto a = run(cfg.network, cfg.traffic, o);
    o.protocol_dir.reset();
    o.check_invariants = false;
    const auto b = run(cfg.network, cfg.traffic, o);

    CHECK(a.flit_latency == b.flit_latency);
    std::size_t vertical = 0;
    for (std::size_t k = 0; k < a.links.size(); ++k) {
        CHECK(a.flows[k].M == b.flows[k].M);
        CHECK_NOTHROW(a.flows[k].validate(1e-12));
        const auto trace = replay_link_protocol(dir.path / (a.links[k].name + ".protocol.csv"));
        CHECK(count_data_flow(trace).M == a.flows[k].M);
        CHECK(a.flows[k].active_fraction() ==
              doctest::Approx(static_cast<double>(a.link_flits[k]) / static_cast<double>(a.flows[k].cycles - 1))
                  .epsilon(1e-3));
        if (a.links[k].kind == LinkKind::Router && a.links[k].vertical()) ++vertical;
    }
    CHECK(vertical == 2);
    CHECK(a.find_link("R5_to_R7").has_value());
}

TEST_CASE("more VCs lower the latency of the case study")
{
    const auto cfg = parse_config(kCaseStudy);
    SimOptions o;
    o.cycles = 20000;
    auto four = cfg.network;
    auto one = cfg.network;
    one.router.vc_count = 1;
    const auto r4 = run(four, cfg.traffic, o);
    const auto r1 = run(one, cfg.traffic, o);
    CHECK(latency_stats(r4.flit_latency).mean < latency_stats(r1.flit_latency).mean);
}

TEST_CASE("a source's words cross its first router link in stream order")
{
    auto c = line3(4, 6);
    // The second source congests the shared hop and backs up the first router.
    std::vector<InjectionSpec> traffic{source({0, 0, 0}, {2, 0, 0}, 0.15, 1), source({1, 0, 0}, {2, 0, 0}, 0.15, 2, 1)};
    SimOptions o;
    o.cycles = 20000;
    o.capture_traces = true;
    o.record_type_words = true;
    const auto r = run(c, traffic, o);
    const auto& tr = r.traces[*r.find_link(c.node_name(0) + "_to_" + c.node_name(1))];
    std::vector<std::uint64_t> seen;
    for (const auto& cy : tr.cycles)
        if (!cy.idle && cy.type == 0) seen.push_back(cy.word);
    REQUIRE(seen.size() > 1000);
    CHECK(seen == std::vector<std::uint64_t>(r.type_words[0].begin(), r.type_words[0].begin() + seen.size()));
}
