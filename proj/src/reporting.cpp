#include "vclink/reporting.hpp"

#include "vclink/error.hpp"

#include <algorithm>
#include <cmath>

namespace vclink {

LinkObserver::LinkObserver(std::string link, std::uint32_t types)
    : link_(std::move(link)), types_(types), held_(types - 1), state_(0)
{
    if (types < 1) throw ValidationError("LinkObserver: need at least one data type");
    counts_.assign(std::size_t{2} * types * 2 * types, 0);
}

void LinkObserver::record_state(std::uint32_t state)
{
    if (cycles_ > 0) ++counts_[std::size_t{state_} * 2 * types_ + state];
    state_ = state;
    ++cycles_;
}

void LinkObserver::record_active(std::uint32_t type)
{
    if (type >= types_)
        throw ValidationError("LinkObserver " + link_ + ": type " + std::to_string(type) + " out of range");
    held_ = type;
    ++active_;
    record_state(type);
}

void LinkObserver::record_idle()
{
    record_state(held_ + types_);
}

DataFlowMatrix LinkObserver::finalize() const
{
    if (cycles_ < 2)
        throw ValidationError("finalize_matrices: link " + link_ + " observed " + std::to_string(cycles_) +
                              " cycle(s), need at least 2");
    const Eigen::Index dim = 2 * static_cast<Eigen::Index>(types_);
    DataFlowMatrix m{Matrix::Zero(dim, dim), types_, cycles_, link_};
    const double pairs = static_cast<double>(cycles_ - 1);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            m.M(r, c) = static_cast<double>(counts_[static_cast<std::size_t>(r * dim + c)]) / pairs;
    return m;
}

std::vector<DataFlowMatrix> finalize_matrices(std::span<const LinkObserver> observers)
{
    std::vector<DataFlowMatrix> out;
    out.reserve(observers.size());
    for (const auto& o : observers) out.push_back(o.finalize());
    return out;
}

LatencySummary latency_stats(std::span<const std::uint64_t> samples, double clock_period)
{
    if (samples.empty()) throw ValidationError("latency_stats: no samples");
    std::vector<std::uint64_t> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    LatencySummary out;
    out.count = s.size();
    out.clock_period = clock_period;
    long double sum = 0;
    for (auto v : s) sum += v;
    out.mean = static_cast<double>(sum / s.size());
    const std::size_t mid = s.size() / 2;
    out.median = s.size() % 2 ? static_cast<double>(s[mid]) : 0.5 * (static_cast<double>(s[mid - 1]) + s[mid]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(s.size())));
    out.p95 = static_cast<double>(s[std::max<std::size_t>(rank, 1) - 1]);
    out.max = static_cast<double>(s.back());
    return out;
}

}  // namespace vclink
