#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vclink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Ordered key/value pairs from a "# key=value key=value" header line.
class CsvHeader {
public:
    CsvHeader() = default;
    CsvHeader(std::initializer_list<std::pair<std::string, std::string>> kv) : entries_(kv) {}

    void set(const std::string& key, const std::string& value);
    std::optional<std::string> get(const std::string& key) const;
    // Throws ValidationError naming `key` and `context` when absent.
    std::string require(const std::string& key, const std::string& context) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct MatrixFile {
    CsvHeader header;
    Matrix values;
};

// Writes `m` as CSV, one row per line, preceded by a single "# k=v ..." line.
// Values use 17 significant digits so a reload is bit-identical.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const CsvHeader& header);

MatrixFile read_matrix_csv(const std::filesystem::path& path);

CsvHeader parse_header_line(const std::string& line);
std::string format_header_line(const CsvHeader& header);

std::string format_double(double v);

}  // namespace vclink
