#pragma once

// Cycle-accurate NoC model: input-buffered virtual-channel routers with a
// three-stage head pipeline (route computation, VC allocation, switch
// traversal), credit flow control, XYZ routing and per-link observation of
// the transmitted data types.

#include "vclink/bit_oracle.hpp"
#include "vclink/codecs.hpp"
#include "vclink/reporting.hpp"
#include "vclink/topology.hpp"
#include "vclink/traffic.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vclink {

enum class RoutingAlgorithm { XYZ };
enum class SelectionStrategy { RoundRobin };
enum class ArbitrationMode { Fair, Priority };

RoutingAlgorithm parse_routing(std::string_view token);
SelectionStrategy parse_selection(std::string_view token);
ArbitrationMode parse_arbitration(std::string_view token);
std::string_view to_string(ArbitrationMode mode);

struct RouterConfig {
    unsigned vc_count = 1;
    unsigned buffer_depth = 4;
    RoutingAlgorithm routing = RoutingAlgorithm::XYZ;
    SelectionStrategy selection = SelectionStrategy::RoundRobin;
    ArbitrationMode arbitration = ArbitrationMode::Fair;
    unsigned clock_delay = 1;

    void validate() const;
};

struct NetworkConfig {
    Topology topology{1, 1, 1};
    RouterConfig router;
    unsigned pe_clock_delay = 1;
    unsigned flit_width = 16;
    unsigned flits_per_packet = 32;
    unsigned ni_queue_depth = 4;  // packets an NI holds before its PE blocks
    double clock_period = 1e-9;   // base cycle
    // Per-node overrides keyed by node index.
    std::map<std::uint32_t, unsigned> router_delay;
    std::map<std::uint32_t, unsigned> pe_delay;
    std::map<std::uint32_t, std::string> node_names;

    void validate() const;
    std::string node_name(std::uint32_t node) const;
};

struct Flit {
    bool head = false;
    bool tail = false;
    std::uint64_t packet_id = 0;
    std::uint32_t type = 0;
    std::uint64_t word = 0;
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::uint32_t seq = 0;
    std::uint8_t vc = 0;
    std::uint8_t priority = 0;
    std::uint64_t created = 0;   // packet creation cycle
    std::uint64_t enqueued = 0;  // cycle the flit became ready at the source NI
    std::uint64_t ready = 0;     // arrival cycle at the far end of a link
};

// Deterministic head-flit word: destination index in the upper bits,
// packet id in the rest.
std::uint64_t head_word(std::uint32_t dst, std::uint64_t packet_id, unsigned width, std::size_t node_count);

class RoundRobinArbiter {
public:
    explicit RoundRobinArbiter(std::size_t size = 0) : size_(size) {}

    // First requester at or after the pointer; the pointer moves past it.
    std::optional<std::size_t> arbitrate(const std::vector<bool>& requests);
    // Same search without updating the pointer.
    std::optional<std::size_t> peek(const std::vector<bool>& requests) const;
    void grant(std::size_t winner) { next_ = size_ ? (winner + 1) % size_ : 0; }
    std::size_t pointer() const { return next_; }
    std::size_t size() const { return size_; }

private:
    std::size_t size_;
    std::size_t next_ = 0;
};

struct OutputVc {
    bool allocated = false;
    unsigned credits = 0;
};

// Downstream VC for a head at the front of an input VC. Fair mode takes the
// lowest-index VC that is unallocated with all credits returned; priority
// mode requires the VC matching the packet's class (clamped to the last VC).
std::optional<unsigned> allocate_vc(std::span<const OutputVc> vcs, unsigned buffer_depth, ArbitrationMode mode,
                                    unsigned priority);

enum class LinkKind { Inject, Eject, Router };

struct LinkInfo {
    std::uint32_t id = 0;
    std::string name;
    LinkKind kind = LinkKind::Router;
    std::uint32_t from = 0;  // node index of the sending side
    std::uint32_t to = 0;
    Port port = Port::Local;  // output port at the sending router
    bool vertical() const { return port == Port::ZPlus || port == Port::ZMinus; }
};

struct SimOptions {
    std::uint64_t cycles = 10000;
    std::uint64_t seed = 1;
    CodecSpec codec;
    bool capture_traces = false;
    std::optional<std::filesystem::path> protocol_dir;
    bool check_invariants = false;
    bool record_type_words = true;
    bool keep_delivered = false;
    // After `cycles`, keep simulating without new packets until the network
    // is empty or this many extra cycles have passed.
    std::uint64_t drain_cycles = 0;
    // Number of payload types; defaults to one per traffic source. The head
    // type always follows the payload types.
    std::optional<std::uint32_t> payload_types;
};

struct DeliveredPacket {
    std::uint64_t id = 0;
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::uint32_t type = 0;
    std::uint64_t created = 0;
    std::uint64_t completed = 0;
    std::vector<std::uint64_t> words;  // body words in arrival order
};

struct SourceReport {
    std::string name;
    std::uint32_t type = 0;
    std::uint64_t packets = 0;
    std::uint64_t words_consumed = 0;
    std::uint64_t recycles = 0;
    std::uint64_t blocked_cycles = 0;  // PE cycles with a full NI queue
};

struct SimulationResult {
    std::uint64_t cycles = 0;
    std::uint32_t types = 1;
    unsigned data_width = 0;
    unsigned link_width = 0;
    double clock_period = 1e-9;
    unsigned vc_count = 1;
    CodecSpec codec;
    std::vector<LinkInfo> links;
    std::vector<DataFlowMatrix> flows;
    std::vector<std::uint64_t> link_flits;
    std::vector<std::uint64_t> link_cycles;
    std::vector<LinkTrace> traces;  // empty unless capture_traces
    std::vector<std::uint64_t> flit_latency;    // cycles
    std::vector<std::uint64_t> packet_latency;  // cycles
    std::uint64_t packets_created = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t flits_injected = 0;
    std::uint64_t flits_delivered = 0;
    std::vector<SourceReport> sources;
    // Words that entered the network, per type in injection order.
    std::vector<std::vector<std::uint64_t>> type_words;
    std::vector<DeliveredPacket> delivered;

    std::optional<std::uint32_t> find_link(std::string_view name) const;
};

class Network {
public:
    Network(NetworkConfig config, std::vector<InjectionSpec> traffic, SimOptions options);
    ~Network();
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    // One base cycle: links deliver, routers receive, router pipelines run,
    // then NIs and PEs act. Routers and PEs only act on their clock ticks.
    void step();
    std::uint64_t now() const;

    // Queues a packet at the NI of `src` without a traffic source.
    std::uint64_t enqueue_packet(Coord src, Coord dst, std::uint32_t type, std::vector<std::uint64_t> payload,
                                 unsigned priority = 0);
    void set_injection_enabled(bool enabled);
    bool drained() const;

    // Throws RuntimeError if flit conservation, the credit invariant or
    // buffer bounds are violated.
    void check_invariants() const;

    const NetworkConfig& config() const;
    std::uint32_t types() const;
    unsigned link_width() const;
    const std::vector<LinkInfo>& links() const;
    std::optional<std::uint32_t> find_link(Coord from, Coord to) const;
    std::uint32_t inject_link(Coord node) const;
    std::uint32_t eject_link(Coord node) const;
    const LinkObserver& observer(std::uint32_t link) const;
    const LinkTrace& trace(std::uint32_t link) const;
    std::uint64_t flits_injected() const;
    std::uint64_t flits_delivered() const;
    std::uint64_t flits_in_flight() const;
    std::size_t buffered_flits(Coord node, Port in_port, unsigned vc) const;
    const std::vector<DeliveredPacket>& delivered() const;

    SimulationResult finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Builds the network, runs `options.cycles` base cycles (plus draining) and
// returns finalized matrices and statistics.
SimulationResult run(const NetworkConfig& config, const std::vector<InjectionSpec>& traffic,
                     const SimOptions& options);

}  // namespace vclink
