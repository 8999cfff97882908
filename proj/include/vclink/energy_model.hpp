#pragma once

// Pattern-dependent link energy for metal-wire (2D) and TSV (3D) links.
// All capacitances are attofarads; normalized energies are therefore aF and
// absolute energies femtojoules (aF * V^2 / 2 * 1e-3).

#include "vclink/matrix_io.hpp"
#include "vclink/stream_stats.hpp"

#include <filesystem>
#include <string_view>
#include <variant>

namespace vclink {

struct Capacitance2D {
    Matrix C;  // diagonal: ground, off-diagonal: coupling

    unsigned width() const { return static_cast<unsigned>(C.rows()); }
    void validate() const;
};

// C_ij(p) = C0_ij + dC_ij * (p_i + p_j). dC keeps the sign it was given.
struct Capacitance3D {
    Matrix C0;
    Matrix dC;

    unsigned width() const { return static_cast<unsigned>(C0.rows()); }
    void validate() const;
};

using CapacitanceModel = std::variant<Capacitance2D, Capacitance3D>;

unsigned width_of(const CapacitanceModel& model);

struct TechnologyParams {
    double vdd = 1.1;             // volts
    double clock_period = 1e-9;  // seconds per base cycle

    void validate() const;
    // Absolute energy in fJ for a normalized energy in aF.
    double to_femtojoule(double normalized_af) const { return normalized_af * vdd * vdd * 0.5 * 1e-3; }
};

enum class CapacitanceKind { Planar2D, Tsv3D };
CapacitanceKind parse_capacitance_kind(std::string_view token);

// 2D: a single CSV. 3D: `path` names the pair `<path>.ct0.csv` / `<path>.dct.csv`
// (a path ending in either suffix is accepted too).
CapacitanceModel load_capacitance_model(const std::filesystem::path& path, CapacitanceKind kind);
void save_capacitance_model(const std::filesystem::path& path, const CapacitanceModel& model);

// Parallel bus: C_ground on the diagonal, C_couple / |i-j| up to `neighbor_range`.
// These templates are non-physical stand-ins; calibrate for real studies.
Capacitance2D template_2d_bus(unsigned width, double c_ground, double c_couple, unsigned neighbor_range = 1);

// TSV array placed row-major on a rows x cols grid. Side neighbours couple
// with the full neighbour value, diagonal neighbours with 1/sqrt(2) of it.
// `count` (default rows*cols) leaves trailing grid positions empty; the
// last row must stay occupied.
Capacitance3D template_3d_tsv(unsigned rows, unsigned cols, double c0_neighbor, double dc_neighbor,
                              double c0_ground, double dc_ground, unsigned count = 0);

Matrix effective_tsv_capacitance(const Capacitance3D& model, const Vector& p);

// <T, C>: Frobenius inner product, aF.
double energy_2d(const SwitchingMatrix& t, const Capacitance2D& cap);
// <T, C0 + dC o (p 1^T + 1 p^T)>, aF.
double energy_3d(const SwitchingMatrix& t, const Vector& p, const Capacitance3D& cap);
// Dispatches on the model kind; `p` is ignored for 2D links.
double normalized_energy(const SwitchingMatrix& t, const Vector& p, const CapacitanceModel& cap);

}  // namespace vclink
