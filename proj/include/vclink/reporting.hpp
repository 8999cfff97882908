#pragma once

// Per-link data-flow observation and latency statistics collected while the
// simulator runs.

#include "vclink/vc_link_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vclink {

// Counts transitions between consecutive link-cycle states. Memory is
// O(n^2) regardless of the number of observed cycles.
class LinkObserver {
public:
    LinkObserver(std::string link, std::uint32_t types);

    void record_active(std::uint32_t type);
    void record_idle();  // holds the type of the last transmitted flit

    const std::string& link() const { return link_; }
    std::uint32_t types() const { return types_; }
    std::uint64_t cycles() const { return cycles_; }
    std::uint64_t active_cycles() const { return active_; }
    // Raw 2n x 2n counts, row = previous state, column = current state.
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::uint64_t count(std::uint32_t from_state, std::uint32_t to_state) const
    {
        return counts_[std::size_t{from_state} * 2 * types_ + to_state];
    }

    // Throws ValidationError when fewer than two cycles were observed.
    DataFlowMatrix finalize() const;

private:
    void record_state(std::uint32_t state);

    std::string link_;
    std::uint32_t types_;
    std::uint32_t held_;   // type of the pattern currently on the wires
    std::uint32_t state_;  // state of the previous cycle
    std::uint64_t cycles_ = 0;
    std::uint64_t active_ = 0;
    std::vector<std::uint64_t> counts_;
};

std::vector<DataFlowMatrix> finalize_matrices(std::span<const LinkObserver> observers);

struct LatencySummary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
    double max = 0.0;
    double clock_period = 1e-9;

    double mean_ns() const { return mean * clock_period * 1e9; }
    double median_ns() const { return median * clock_period * 1e9; }
    double p95_ns() const { return p95 * clock_period * 1e9; }
    double max_ns() const { return max * clock_period * 1e9; }
};

// Samples are in base cycles. Median interpolates between the two middle
// samples; p95 is the nearest-rank percentile. Throws on empty input.
LatencySummary latency_stats(std::span<const std::uint64_t> samples, double clock_period = 1e-9);

}  // namespace vclink
