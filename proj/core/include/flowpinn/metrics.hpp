// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowpinn/data.hpp"
#include "flowpinn/network.hpp"
#include "flowpinn/point_set.hpp"

namespace flowpinn {

enum class RelativeMode {
    MeanSquare,  // mse / mean(ref^2), in percent
    L2,          // sqrt(sum (pred - ref)^2 / sum ref^2), in percent
};

struct FieldMetrics {
    double absolute_mse = 0.0;
    std::optional<double> relative_percent;  // absent when the reference is identically zero
    std::optional<double> r_squared;         // absent when the reference is constant
};

FieldMetrics field_metrics(std::span<const double> pred, std::span<const double> ref,
                           RelativeMode mode = RelativeMode::MeanSquare);

/// sqrt(sum |pred - ref|^2 / sum |ref|^2) over however many components are given.
double relative_l2(std::span<const std::span<const double>> pred, std::span<const std::span<const double>> ref);

/// Metrics of the network against every available reference field.
/// Fields without any available reference value are absent.
std::array<std::optional<FieldMetrics>, 3> evaluate_fields(const ParamVector& params, const PointSet& reference,
                                                           RelativeMode mode = RelativeMode::MeanSquare);

// ---------------------------------------------------------------------------
// Pressure coefficient
// ---------------------------------------------------------------------------

/// (p_nw - p_static) / (p_total - p_static)
double pressure_coefficient(double p_nw, double p_in_static, double p_in_total);

/// 0.5 * rho * speed^2
double dynamic_head(double density, double speed);

struct CpRow {
    double arc = 0.0;
    double cp = 0.0;
};

/// Cumulative polyline length through the points in the given order.
std::vector<double> arc_length(std::span<const double> x, std::span<const double> y);

/// Cp at every wall point, sorted by arc position.
std::vector<CpRow> cp_table(std::span<const double> arc, std::span<const double> p_wall, double p_in_static,
                            double p_in_total);

// ---------------------------------------------------------------------------
// Line profiles
// ---------------------------------------------------------------------------

struct LineSegment {
    double x0 = 0.0, y0 = 0.0;
    double x1 = 0.0, y1 = 1.0;
    std::size_t samples = 101;
};

struct LineProfile {
    std::vector<double> position;  // distance from the segment start
    std::vector<double> x, y;
    std::vector<double> magnitude;
    std::vector<double> angle_deg;  // atan2(v, u)
};

/// Speed and flow angle of given velocity samples.
void velocity_profile(std::span<const double> u, std::span<const double> v, std::vector<double>& magnitude,
                      std::vector<double>& angle_deg);

LineProfile line_profile(const ParamVector& params, const LineSegment& line);

// ---------------------------------------------------------------------------
// Field export and reports
// ---------------------------------------------------------------------------

struct Grid {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    std::size_t nx = 2, ny = 2;

    void validate() const;
};

/// Nondimensional grid nodes, x fastest.
PointSet grid_points(const Grid& grid);

/// Predictions at `points` in dimensional units. When `reference` is given it
/// must share the coordinates; its available fields are written alongside as
/// u_ref, v_ref, p_ref (empty cells where unavailable).
std::string format_field(const ParamVector& params, const PointSet& points, const Scales& scales,
                         const PointSet* reference = nullptr);
void export_field(const std::string& path, const ParamVector& params, const PointSet& points, const Scales& scales,
                  const PointSet* reference = nullptr);

struct FieldExport {
    Scales scales;
    PointSet prediction;  // dimensional
    std::optional<PointSet> reference;
};

FieldExport read_field_export(const std::string& path);

struct MetricsReport {
    std::array<std::optional<FieldMetrics>, 3> fields;
    RelativeMode mode = RelativeMode::MeanSquare;
    std::optional<double> velocity_relative_l2;
    std::vector<CpRow> cp;
    std::optional<LineProfile> profile;
    std::optional<double> profile_max_error;  // largest speed error against a reference profile
    std::string problem;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
};

/// Human summary followed by a delimited block: field,absolute_mse,relative_mse_percent,r2.
std::string format_report(const MetricsReport& report);
void write_report(const std::string& path, const MetricsReport& report);

}  // namespace flowpinn
