// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "flowpinn/point_set.hpp"

namespace flowpinn {

// ---------------------------------------------------------------------------
// Nondimensionalization
// ---------------------------------------------------------------------------

/// Reference magnitudes: coordinates by `length`, velocities by `velocity`,
/// pressure by `pressure` (rho * V^2 for a cascade), viscosity by
/// velocity * length.
struct Scales {
    double length = 1.0;
    double velocity = 1.0;
    double pressure = 1.0;

    void validate() const;
    static Scales from_inlet(double chord, double inlet_speed, double density);
};

PointSet nondimensionalize(const PointSet& points, const Scales& scales);
PointSet redimensionalize(const PointSet& points, const Scales& scales);

// ---------------------------------------------------------------------------
// Point files
// ---------------------------------------------------------------------------

/// Canonical column name -> header name in the file. Unlisted names map to
/// themselves. Canonical names: x, y, u, v, p, nu_eff, mask_u, mask_v, mask_p.
using ColumnMap = std::map<std::string, std::string>;

/// Reads a delimited text file with a header row. The delimiter is a comma
/// when the header contains one, whitespace otherwise. Empty or "nan" label
/// cells and 0 entries in mask columns mark a field unavailable at a point.
PointSet load_points(const std::string& path, const ColumnMap& columns = {});
PointSet parse_points(const std::string& text, const ColumnMap& columns = {}, const std::string& origin = "<text>");

/// Writes x, y, u, v, p, [nu_eff,] mask_u, mask_v, mask_p with shortest
/// round-trip formatting, so load_points(write_points(s)) is bit-identical.
void write_points(const std::string& path, const PointSet& points);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
std::string format_points(const PointSet& points);

// ---------------------------------------------------------------------------
// Sampling and noise
// ---------------------------------------------------------------------------

PointSet sample_without_replacement(const PointSet& pool, std::size_t n, std::uint64_t seed);

/// Uniform points in [x_min, x_max] x [y_min, y_max], unlabeled.
PointSet sample_rectangle(double x_min, double x_max, double y_min, double y_max, std::size_t n,
                          std::uint64_t seed);

struct NoiseReference {
    double velocity = 1.0;
    double pressure = 1.0;
};

/// Adds N(0, (level * reference)^2) to every available label. Coordinates
/// and masks are untouched; level 0 returns an identical copy.
PointSet inject_noise(const PointSet& points, double level, std::uint64_t seed, const NoiseReference& reference = {});

// ---------------------------------------------------------------------------
// Manufactured solution
// ---------------------------------------------------------------------------

/// Decay rate Re/2 - sqrt(Re^2/4 + 4 pi^2); negative for every Re > 0.
double kovasznay_lambda(double reynolds);

/// Kovasznay flow. Exact steady incompressible Navier-Stokes solution with
/// density 1 and viscosity 1/Re. Generic so it can be evaluated on doubles
/// or built as an expression graph.
template <class T>
std::array<T, 3> kovasznay(const T& x, const T& y, double reynolds) {
    using std::cos;
    using std::exp;
    using std::sin;
    const double lam = kovasznay_lambda(reynolds);
    const double two_pi = 2.0 * std::numbers::pi;
    const T decay = exp(x * lam);
    T u = 1.0 - decay * cos(y * two_pi);
    T v = decay * sin(y * two_pi) * (lam / two_pi);
    T p = 0.5 * (1.0 - exp(x * (2.0 * lam)));
    return {u, v, p};
}

/// Kovasznay values with their first and second derivatives, written out by
/// hand. Index order: value, d/dx, d/dy, d2/dx2, d2/dy2; each is (u, v, p).
std::array<std::array<double, 3>, 5> kovasznay_jet(double x, double y, double reynolds);

/// Labels every point with the analytic solution (all masks set).
void label_with_kovasznay(PointSet& points, double reynolds);

// ---------------------------------------------------------------------------
// Dataset bundles
// ---------------------------------------------------------------------------

enum class ProblemMode { Forward, Inverse };

const char* mode_name(ProblemMode mode);
ProblemMode parse_mode(const std::string& text);

struct DatasetBundle {
    PointSet residual;
    PointSet labeled;
    PointSet inlet;
    PointSet outlet;
    PointSet wall;
    PeriodicPairs periodic;
    Scales scales;
    std::map<std::string, std::string> provenance;

    void validate() const;
};

/// Rectangular Kovasznay domain with a streamwise "blade" segment at
/// y = wall_y, x in [wall_x_min, wall_x_max] whose imposed velocity is the
/// analytic one. The lower and upper edges are periodic (pitch must be a
/// whole number of the solution's unit period in y).
struct ManufacturedDomain {
    double reynolds = 40.0;
    double x_min = 0.0, x_max = 2.0;
    double y_min = -0.5, y_max = 1.5;
    double wall_y = 0.5;
    double wall_x_min = 0.5, wall_x_max = 1.5;
    std::size_t residual_points = 5000;
    std::size_t labeled_points = 500;
    std::size_t edge_points = 64;
    std::size_t velocity_points = 1000;  // inverse mode interior velocity labels
};

/// External point files, already in physical units unless `nondimensional`.
struct FileSources {
    std::string mesh;  // pool of mesh nodes with reference fields (u, v, p, optional nu_eff)
    std::string inlet, outlet, wall, periodic_lower, periodic_upper;
    double pitch = 0.0;
    std::size_t residual_points = 20000;
    std::size_t labeled_points = 2000;
    std::size_t velocity_points = 1000;
    bool nondimensional = false;
    ColumnMap columns;
};

struct BundleConfig {
    ProblemMode mode = ProblemMode::Forward;
    std::optional<ManufacturedDomain> manufactured;
    FileSources files;
    Scales scales;
    std::uint64_t seed = 1234;
    bool inverse_wall_no_slip = false;  // keep the no-slip wall term in inverse mode
};

/// Forward: every boundary set plus fully labeled interior points.
/// Inverse: residual points, interior velocity-only labels and
/// pressure-only boundary labels; inlet/outlet/periodic left empty.
DatasetBundle build_bundle(const BundleConfig& config);

/// Pairs lower/upper periodic points by sorted x and checks the pitch.
PeriodicPairs pair_periodic(PointSet lower, PointSet upper, double pitch);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace flowpinn
