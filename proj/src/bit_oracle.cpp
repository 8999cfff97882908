#include "vclink/bit_oracle.hpp"

#include "vclink/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace vclink {

namespace {

struct BitList {
    std::array<unsigned, 64> index{};
    unsigned count = 0;

    explicit BitList(std::uint64_t v)
    {
        while (v) {
            index[count++] = static_cast<unsigned>(std::countr_zero(v));
            v &= v - 1;
        }
    }
    const unsigned* begin() const { return index.data(); }
    const unsigned* end() const { return index.data() + count; }
};

Vector held_bit_frequencies(const LinkTrace& trace)
{
    Vector p = Vector::Zero(trace.width);
    const std::size_t first = trace.size() >= 2 ? 1 : 0;
    for (std::size_t k = first; k < trace.size(); ++k) {
        std::uint64_t w = trace.cycles[k].word;
        while (w) {
            p(std::countr_zero(w)) += 1.0;
            w &= w - 1;
        }
    }
    return p / static_cast<double>(trace.size() - first);
}

// Energy of every transition, summed transition by transition.
double sum_transition_energy(const LinkTrace& trace, const Matrix& c)
{
    const auto n = c.rows();
    Vector off_row_sum(n);
    for (Eigen::Index i = 0; i < n; ++i) off_row_sum(i) = c.row(i).sum() - c(i, i);

    double total = 0.0;
    for (std::size_t k = 1; k < trace.size(); ++k) {
        const std::uint64_t before = trace.cycles[k - 1].word;
        const std::uint64_t diff = before ^ trace.cycles[k].word;
        if (!diff) continue;
        const BitList toggled(diff);
        double e = 0.0;
        for (unsigned i : toggled) {
            e += c(i, i) + off_row_sum(i);
            const bool bi = (before >> i) & 1u;
            for (unsigned j : toggled) {
                if (j == i) continue;
                const bool bj = (before >> j) & 1u;
                // db_i db_j = +1 for same-direction toggles, -1 otherwise.
                e -= (bi == bj ? 1.0 : -1.0) * c(i, j);
            }
        }
        total += e;
    }
    return total;
}

[[noreturn]] void malformed(const std::string& source, std::size_t lineno, const std::string& why)
{
    throw ValidationError(source + ":" + std::to_string(lineno) + ": malformed record: " + why);
}

}  // namespace

std::uint64_t LinkTrace::active_cycles() const
{
    std::uint64_t n = 0;
    for (const auto& c : cycles) n += c.idle ? 0 : 1;
    return n;
}

void LinkTrace::push_active(std::uint64_t word, std::uint32_t type)
{
    cycles.push_back({word, type, false});
}

void LinkTrace::push_idle()
{
    if (cycles.empty())
        cycles.push_back({0, head_type(), true});
    else
        cycles.push_back({cycles.back().word, cycles.back().type, true});
}

LinkTrace LinkTrace::from_words(std::span<const std::uint64_t> words, std::span<const std::uint32_t> types,
                                unsigned width, std::uint32_t type_count)
{
    if (words.size() != types.size()) throw ValidationError("LinkTrace::from_words: length mismatch");
    LinkTrace t;
    t.width = width;
    t.types = type_count;
    t.cycles.reserve(words.size());
    for (std::size_t k = 0; k < words.size(); ++k) t.push_active(words[k], types[k]);
    return t;
}

ExactSwitching exact_switching(const LinkTrace& trace)
{
    if (trace.cycles.empty()) throw ValidationError("exact_switching: empty trace");
    const unsigned n = trace.width;
    ExactSwitching out;
    out.p = held_bit_frequencies(trace);
    if (trace.size() < 2) {
        out.t = SwitchingMatrix::zero(n);
        return out;
    }

    std::vector<std::uint64_t> self(n, 0);
    std::vector<std::int64_t> corr(std::size_t{n} * n, 0);
    for (std::size_t k = 1; k < trace.size(); ++k) {
        const std::uint64_t before = trace.cycles[k - 1].word;
        const BitList toggled(before ^ trace.cycles[k].word);
        for (unsigned i : toggled) {
            ++self[i];
            const bool bi = (before >> i) & 1u;
            for (unsigned j : toggled) {
                if (j == i) continue;
                corr[std::size_t{i} * n + j] += (bi == static_cast<bool>((before >> j) & 1u)) ? 1 : -1;
            }
        }
    }
    out.transitions = trace.size() - 1;
    const double pairs = static_cast<double>(out.transitions);
    Vector ts(n);
    Matrix tc = Matrix::Zero(n, n);
    for (unsigned i = 0; i < n; ++i) {
        ts(i) = static_cast<double>(self[i]) / pairs;
        for (unsigned j = 0; j < n; ++j) tc(i, j) = static_cast<double>(corr[std::size_t{i} * n + j]) / pairs;
    }
    out.t = SwitchingMatrix::from_parts(ts, tc);
    return out;
}

ExactEnergy exact_energy(const LinkTrace& trace, const CapacitanceModel& cap, const TechnologyParams& tech)
{
    if (trace.cycles.empty()) throw ValidationError("exact_energy: empty trace");
    if (width_of(cap) != trace.width)
        throw ValidationError("exact_energy: dimension mismatch (trace width " + std::to_string(trace.width) +
                              ", capacitance width " + std::to_string(width_of(cap)) + ")");
    tech.validate();

    Matrix c;
    if (const auto* m2 = std::get_if<Capacitance2D>(&cap))
        c = m2->C;
    else
        c = effective_tsv_capacitance(std::get<Capacitance3D>(cap), held_bit_frequencies(trace));

    ExactEnergy e;
    e.transitions = trace.size() - 1;
    e.active_cycles = trace.active_cycles();
    e.normalized_total = sum_transition_energy(trace, c);
    e.normalized_per_cycle = e.transitions ? e.normalized_total / static_cast<double>(e.transitions) : 0.0;
    e.total_fj = tech.to_femtojoule(e.normalized_total);
    e.per_cycle_fj = tech.to_femtojoule(e.normalized_per_cycle);
    return e;
}

DataFlowMatrix count_data_flow(const LinkTrace& trace, const std::string& link)
{
    if (trace.size() < 2) throw ValidationError("count_data_flow: need at least two cycles");
    const std::uint32_t n = trace.types;
    DataFlowMatrix m{Matrix::Zero(2 * n, 2 * n), n, trace.size(), link};
    auto state = [n](const LinkCycle& c) { return static_cast<Eigen::Index>(c.type + (c.idle ? n : 0)); };
    for (std::size_t k = 1; k < trace.size(); ++k) m.M(state(trace.cycles[k - 1]), state(trace.cycles[k])) += 1.0;
    m.M /= static_cast<double>(trace.size() - 1);
    return m;
}

void write_link_protocol(std::ostream& out, const LinkTrace& trace, const std::string& link)
{
    out << "# link=" << (link.empty() ? "-" : link) << " width=" << trace.width << " n=" << trace.types << '\n';
    char buf[32];
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const auto& c = trace.cycles[k];
        out << (k + 1) << ',';
        if (c.idle)
            out << "IDLE";
        else
            out << (c.type + 1);
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, c.word, 16);
        out << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
    }
}

void write_link_protocol(const std::filesystem::path& path, const LinkTrace& trace, const std::string& link)
{
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write " + path.string());
    write_link_protocol(out, trace, link);
    if (!out) throw RuntimeError("write failed: " + path.string());
}

LinkTrace read_link_protocol(std::istream& in, const std::string& source)
{
    LinkTrace trace;
    bool have_header = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto h = parse_header_line(line);
            trace.width = static_cast<unsigned>(std::stoul(h.require("width", source)));
            trace.types = static_cast<std::uint32_t>(std::stoul(h.require("n", source)));
            if (trace.width < 1 || trace.width > kMaxWidth) malformed(source, lineno, "bad width");
            if (trace.types < 1) malformed(source, lineno, "bad type count");
            have_header = true;
            continue;
        }
        if (!have_header) malformed(source, lineno, "record before '# link=... width=... n=...' header");

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            malformed(source, lineno, "expected 'cycle,type|IDLE,hexword'");
        const std::string_view text(line);
        const auto cycle_txt = text.substr(0, c1);
        const auto type_txt = text.substr(c1 + 1, c2 - c1 - 1);
        const auto word_txt = text.substr(c2 + 1);

        std::uint64_t cycle = 0;
        if (auto [p, ec] = std::from_chars(cycle_txt.data(), cycle_txt.data() + cycle_txt.size(), cycle);
            ec != std::errc() || p != cycle_txt.data() + cycle_txt.size())
            malformed(source, lineno, "bad cycle number");
        if (cycle != trace.size() + 1)
            malformed(source, lineno, "cycle " + std::to_string(cycle) + " out of sequence");

        std::uint64_t word = 0;
        if (auto [p, ec] = std::from_chars(word_txt.data(), word_txt.data() + word_txt.size(), word, 16);
            ec != std::errc() || p != word_txt.data() + word_txt.size() || word_txt.empty())
            malformed(source, lineno, "bad hex word");
        if (word & ~width_mask(trace.width))
            throw ValidationError(source + ":" + std::to_string(lineno) + ": width mismatch (word " +
                                  std::string(word_txt) + " exceeds " + std::to_string(trace.width) + " bits)");

        if (type_txt == "IDLE") {
            trace.push_idle();
            if (trace.cycles.back().word != word)
                malformed(source, lineno, "idle record does not hold the previous word");
        } else {
            std::uint32_t type = 0;
            if (auto [p, ec] = std::from_chars(type_txt.data(), type_txt.data() + type_txt.size(), type);
                ec != std::errc() || p != type_txt.data() + type_txt.size() || type < 1 || type > trace.types)
                malformed(source, lineno, "bad type id '" + std::string(type_txt) + "'");
            trace.push_active(word, type - 1);
        }
    }
    if (trace.cycles.empty()) throw ValidationError(source + ": empty protocol");
    return trace;
}

LinkTrace replay_link_protocol(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return read_link_protocol(in, path.string());
}

}  // namespace vclink
