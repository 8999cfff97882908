#include "vclink/energy_model.hpp"

#include "vclink/error.hpp"

#include <cmath>
#include <cstdlib>

namespace vclink {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

void require_square_symmetric(const Matrix& m, const std::string& what)
{
    if (m.rows() != m.cols() || m.rows() == 0)
        throw ValidationError(what + ": non-square capacitance matrix (" + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ")");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
            const double scale = std::max({std::abs(m(i, j)), std::abs(m(j, i)), 1e-300});
            if (std::abs(m(i, j) - m(j, i)) > kSymmetryTolerance * scale)
                throw ValidationError(what + ": asymmetric capacitance matrix at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
        }
    }
}

void require_dims(const SwitchingMatrix& t, Eigen::Index width, const char* op)
{
    if (t.T.rows() != width || t.T.cols() != width)
        throw ValidationError(std::string(op) + ": dimension mismatch (T is " + std::to_string(t.T.rows()) +
                              ", capacitance is " + std::to_string(width) + ")");
}

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix)
{
    return base.string() + suffix;
}

std::filesystem::path strip_3d_suffix(const std::filesystem::path& path)
{
    std::string s = path.string();
    for (const char* suffix : {".ct0.csv", ".dct.csv"}) {
        const std::string suf(suffix);
        if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0)
            return s.substr(0, s.size() - suf.size());
    }
    return path;
}

void check_header(const MatrixFile& f, const std::filesystem::path& path, const char* kind)
{
    if (auto k = f.header.get("kind"); k && *k != kind)
        throw ValidationError(path.string() + ": header says kind=" + *k + ", expected " + kind);
    if (auto u = f.header.get("units"); u && *u != "aF")
        throw ValidationError(path.string() + ": unsupported units '" + *u + "' (expected aF)");
    if (auto n = f.header.get("N"); n && std::stol(*n) != f.values.rows())
        throw ValidationError(path.string() + ": header N=" + *n + " disagrees with " +
                              std::to_string(f.values.rows()) + " rows");
}

}  // namespace

void Capacitance2D::validate() const
{
    require_square_symmetric(C, "2d model");
    for (Eigen::Index i = 0; i < C.rows(); ++i)
        for (Eigen::Index j = 0; j < C.cols(); ++j)
            if (C(i, j) < 0.0)
                throw ValidationError(i == j ? "2d model: negative diagonal (ground) capacitance"
                                             : "2d model: negative coupling capacitance");
}

void Capacitance3D::validate() const
{
    require_square_symmetric(C0, "3d model C_T0");
    require_square_symmetric(dC, "3d model dC_T");
    if (C0.rows() != dC.rows())
        throw ValidationError("3d model: dimension mismatch between C_T0 (" + std::to_string(C0.rows()) +
                              ") and dC_T (" + std::to_string(dC.rows()) + ")");
    for (Eigen::Index i = 0; i < C0.rows(); ++i) {
        if (C0(i, i) < 0.0) throw ValidationError("3d model: negative diagonal capacitance in C_T0");
        for (Eigen::Index j = 0; j < C0.cols(); ++j)
            if (C0(i, j) + 2.0 * dC(i, j) < -1e-12 * std::abs(C0(i, j)))
                throw ValidationError("3d model: C_T0 + 2 dC_T negative at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
    }
}

unsigned width_of(const CapacitanceModel& model)
{
    return std::visit([](const auto& m) { return m.width(); }, model);
}

void TechnologyParams::validate() const
{
    if (!(vdd > 0.0)) throw ValidationError("V_dd must be positive");
    if (!(clock_period > 0.0)) throw ValidationError("clock period must be positive");
}

CapacitanceKind parse_capacitance_kind(std::string_view token)
{
    if (token == "2d") return CapacitanceKind::Planar2D;
    if (token == "3d") return CapacitanceKind::Tsv3D;
    throw ValidationError("unknown capacitance kind '" + std::string(token) + "'");
}

CapacitanceModel load_capacitance_model(const std::filesystem::path& path, CapacitanceKind kind)
{
    if (kind == CapacitanceKind::Planar2D) {
        auto f = read_matrix_csv(path);
        check_header(f, path, "2d");
        Capacitance2D m{std::move(f.values)};
        m.validate();
        return m;
    }
    const auto base = strip_3d_suffix(path);
    auto ct0 = read_matrix_csv(with_suffix(base, ".ct0.csv"));
    auto dct = read_matrix_csv(with_suffix(base, ".dct.csv"));
    check_header(ct0, with_suffix(base, ".ct0.csv"), "3d");
    check_header(dct, with_suffix(base, ".dct.csv"), "3d");
    Capacitance3D m{std::move(ct0.values), std::move(dct.values)};
    m.validate();
    return m;
}

void save_capacitance_model(const std::filesystem::path& path, const CapacitanceModel& model)
{
    if (const auto* m2 = std::get_if<Capacitance2D>(&model)) {
        write_matrix_csv(path, m2->C, {{"kind", "2d"}, {"units", "aF"}, {"N", std::to_string(m2->width())}});
        return;
    }
    const auto& m3 = std::get<Capacitance3D>(model);
    const auto base = strip_3d_suffix(path);
    const CsvHeader h{{"kind", "3d"}, {"units", "aF"}, {"N", std::to_string(m3.width())}};
    write_matrix_csv(with_suffix(base, ".ct0.csv"), m3.C0, h);
    write_matrix_csv(with_suffix(base, ".dct.csv"), m3.dC, h);
}

Capacitance2D template_2d_bus(unsigned width, double c_ground, double c_couple, unsigned neighbor_range)
{
    if (width < 1) throw ValidationError("template_2d_bus: width must be >= 1");
    if (c_ground < 0.0 || c_couple < 0.0) throw ValidationError("template_2d_bus: negative capacitance");
    if (neighbor_range < 1) throw ValidationError("template_2d_bus: neighbor_range must be >= 1");
    Capacitance2D m{Matrix::Zero(width, width)};
    for (unsigned i = 0; i < width; ++i) {
        m.C(i, i) = c_ground;
        for (unsigned j = 0; j < width; ++j) {
            const unsigned d = i > j ? i - j : j - i;
            if (d >= 1 && d <= neighbor_range) m.C(i, j) = c_couple / d;
        }
    }
    return m;
}

Capacitance3D template_3d_tsv(unsigned rows, unsigned cols, double c0_neighbor, double dc_neighbor,
                              double c0_ground, double dc_ground, unsigned count)
{
    if (rows < 1 || cols < 1) throw ValidationError("template_3d_tsv: empty grid");
    if (count == 0) count = rows * cols;
    if (count > rows * cols || count <= (rows - 1) * cols)
        throw ValidationError("template_3d_tsv: " + std::to_string(count) + " TSVs do not fit a " +
                              std::to_string(rows) + "x" + std::to_string(cols) + " grid");
    const double diag = 1.0 / std::sqrt(2.0);
    Capacitance3D m{Matrix::Zero(count, count), Matrix::Zero(count, count)};
    for (unsigned a = 0; a < count; ++a) {
        m.C0(a, a) = c0_ground;
        m.dC(a, a) = dc_ground;
        const int ra = static_cast<int>(a / cols), ca = static_cast<int>(a % cols);
        for (unsigned b = 0; b < count; ++b) {
            if (a == b) continue;
            const int dr = std::abs(ra - static_cast<int>(b / cols));
            const int dc = std::abs(ca - static_cast<int>(b % cols));
            if (dr + dc == 1) {
                m.C0(a, b) = c0_neighbor;
                m.dC(a, b) = dc_neighbor;
            } else if (dr == 1 && dc == 1) {
                m.C0(a, b) = c0_neighbor * diag;
                m.dC(a, b) = dc_neighbor * diag;
            }
        }
    }
    m.validate();
    return m;
}

Matrix effective_tsv_capacitance(const Capacitance3D& model, const Vector& p)
{
    const Eigen::Index n = model.C0.rows();
    if (p.size() != n)
        throw ValidationError("effective_tsv_capacitance: probability vector has length " +
                              std::to_string(p.size()) + ", model width is " + std::to_string(n));
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(p(i) >= 0.0 && p(i) <= 1.0))
            throw ValidationError("effective_tsv_capacitance: probability outside [0, 1]");
    const Matrix spread = p * Vector::Ones(n).transpose() + Vector::Ones(n) * p.transpose();
    return model.C0 + model.dC.cwiseProduct(spread);
}

double energy_2d(const SwitchingMatrix& t, const Capacitance2D& cap)
{
    require_dims(t, cap.C.rows(), "energy_2d");
    return t.T.cwiseProduct(cap.C).sum();
}

double energy_3d(const SwitchingMatrix& t, const Vector& p, const Capacitance3D& cap)
{
    require_dims(t, cap.C0.rows(), "energy_3d");
    return t.T.cwiseProduct(effective_tsv_capacitance(cap, p)).sum();
}

double normalized_energy(const SwitchingMatrix& t, const Vector& p, const CapacitanceModel& cap)
{
    if (const auto* m2 = std::get_if<Capacitance2D>(&cap)) return energy_2d(t, *m2);
    return energy_3d(t, p, std::get<Capacitance3D>(cap));
}

}  // namespace vclink
