#include "vclink/matrix_io.hpp"

#include "vclink/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vclink {

void CsvHeader::set(const std::string& key, const std::string& value)
{
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

std::optional<std::string> CsvHeader::get(const std::string& key) const
{
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return std::nullopt;
}

std::string CsvHeader::require(const std::string& key, const std::string& context) const
{
    auto v = get(key);
    if (!v) throw ValidationError(context + ": header lacks '" + key + "='");
    return *v;
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_header_line(const CsvHeader& header)
{
    std::string line = "#";
    for (const auto& [k, v] : header.entries()) line += " " + k + "=" + v;
    return line;
}

CsvHeader parse_header_line(const std::string& line)
{
    CsvHeader h;
    std::string body = line;
    if (!body.empty() && body.front() == '#') body.erase(0, 1);
    std::istringstream in(body);
    std::string token;
    while (in >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        h.set(token.substr(0, eq), token.substr(eq + 1));
    }
    return h;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const CsvHeader& header)
{
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << format_header_line(header) << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(m(r, c));
        }
        out << '\n';
    }
    if (!out) throw RuntimeError("write failed: " + path.string());
}

MatrixFile read_matrix_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());

    MatrixFile file;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (rows.empty() && file.header.entries().empty()) file.header = parse_header_line(line);
            continue;
        }
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            auto comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            std::string cell = line.substr(pos, comma - pos);
            while (!cell.empty() && cell.front() == ' ') cell.erase(0, 1);
            while (!cell.empty() && cell.back() == ' ') cell.pop_back();
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                      ": malformed number '" + cell + "'");
            row.push_back(v);
            pos = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": ragged row (" + std::to_string(row.size()) + " columns, expected " +
                                  std::to_string(rows.front().size()) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": no matrix rows");

    file.values.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            file.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return file;
}

}  // namespace vclink
