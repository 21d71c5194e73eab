// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "flowpinn/errors.hpp"

namespace flowpinn {

FieldMetrics field_metrics(std::span<const double> pred, std::span<const double> ref, RelativeMode mode) {
    if (pred.size() != ref.size()) throw ConfigError("prediction and reference lengths differ");
    if (pred.empty()) throw ConfigError("metrics need at least one value");
    const auto n = static_cast<double>(ref.size());
    double sse = 0.0, ref_sq = 0.0, ref_sum = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = pred[i] - ref[i];
        sse += d * d;
        ref_sq += ref[i] * ref[i];
        ref_sum += ref[i];
    }
    const double mean = ref_sum / n;
    double sst = 0.0;
    for (double r : ref) sst += (r - mean) * (r - mean);

    FieldMetrics m;
    m.absolute_mse = sse / n;
    if (ref_sq > 0.0) {
        m.relative_percent = mode == RelativeMode::MeanSquare ? 100.0 * m.absolute_mse / (ref_sq / n)
                                                              : 100.0 * std::sqrt(sse / ref_sq);
    }
    if (sst > 0.0) m.r_squared = 1.0 - sse / sst;
    return m;
}

double relative_l2(std::span<const std::span<const double>> pred, std::span<const std::span<const double>> ref) {
    if (pred.size() != ref.size() || pred.empty()) throw ConfigError("component counts differ");
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < pred.size(); ++c) {
        if (pred[c].size() != ref[c].size()) throw ConfigError("prediction and reference lengths differ");
        for (std::size_t i = 0; i < ref[c].size(); ++i) {
            const double d = pred[c][i] - ref[c][i];
            num += d * d;
            den += ref[c][i] * ref[c][i];
        }
    }
    if (!(den > 0.0)) throw ConfigError("reference is identically zero");
    return std::sqrt(num / den);
}

std::array<std::optional<FieldMetrics>, 3> evaluate_fields(const ParamVector& params, const PointSet& reference,
                                                           RelativeMode mode) {
    std::array<std::optional<FieldMetrics>, 3> out;
    if (reference.empty()) return out;
    const Eigen::MatrixXd pred = predict(params, reference.x, reference.y);
    for (Field f : kAllFields) {
        const int k = static_cast<int>(f);
        std::vector<double> p, r;
        for (std::size_t i = 0; i < reference.size(); ++i) {
            if (!reference.has(f, i)) continue;
            p.push_back(pred(k, static_cast<Eigen::Index>(i)));
            r.push_back(reference.value(f, i));
        }
        if (!r.empty()) out[k] = field_metrics(p, r, mode);
    }
    return out;
}

double pressure_coefficient(double p_nw, double p_in_static, double p_in_total) {
    const double head = p_in_total - p_in_static;
    if (!(head > 0.0)) throw ConfigError("inlet total pressure must exceed inlet static pressure");
    return (p_nw - p_in_static) / head;
}

double dynamic_head(double density, double speed) { return 0.5 * density * speed * speed; }

std::vector<double> arc_length(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("coordinate lengths differ");
    std::vector<double> s(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) s[i] = s[i - 1] + std::hypot(x[i] - x[i - 1], y[i] - y[i - 1]);
    return s;
}

std::vector<CpRow> cp_table(std::span<const double> arc, std::span<const double> p_wall, double p_in_static,
                            double p_in_total) {
    if (arc.size() != p_wall.size()) throw ConfigError("arc and pressure lengths differ");
    std::vector<CpRow> rows(arc.size());
    for (std::size_t i = 0; i < arc.size(); ++i) {
        rows[i] = {arc[i], pressure_coefficient(p_wall[i], p_in_static, p_in_total)};
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CpRow& a, const CpRow& b) { return a.arc < b.arc; });
    return rows;
}

void velocity_profile(std::span<const double> u, std::span<const double> v, std::vector<double>& magnitude,
                      std::vector<double>& angle_deg) {
    if (u.size() != v.size()) throw ConfigError("velocity component lengths differ");
    magnitude.resize(u.size());
    angle_deg.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        magnitude[i] = std::hypot(u[i], v[i]);
        angle_deg[i] = std::atan2(v[i], u[i]) * 180.0 / std::numbers::pi;
    }
}

LineProfile line_profile(const ParamVector& params, const LineSegment& line) {
    if (line.samples < 2) throw ConfigError("a line profile needs at least two samples");
    LineProfile out;
    const double length = std::hypot(line.x1 - line.x0, line.y1 - line.y0);
    for (std::size_t i = 0; i < line.samples; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(line.samples - 1);
        out.x.push_back(line.x0 + t * (line.x1 - line.x0));
        out.y.push_back(line.y0 + t * (line.y1 - line.y0));
        out.position.push_back(t * length);
    }
    const Eigen::MatrixXd pred = predict(params, out.x, out.y);
    std::vector<double> u(line.samples), v(line.samples);
    for (std::size_t i = 0; i < line.samples; ++i) {
        u[i] = pred(0, static_cast<Eigen::Index>(i));
        v[i] = pred(1, static_cast<Eigen::Index>(i));
    }
    velocity_profile(u, v, out.magnitude, out.angle_deg);
    return out;
}

void Grid::validate() const {
    if (nx < 2 || ny < 2) throw ConfigError("export grid must be at least 2x2");
    if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("export grid extent is degenerate");
}

PointSet grid_points(const Grid& grid) {
    grid.validate();
    PointSet points;
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double y = grid.y_min + (grid.y_max - grid.y_min) * static_cast<double>(j) / static_cast<double>(grid.ny - 1);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x =
                grid.x_min + (grid.x_max - grid.x_min) * static_cast<double>(i) / static_cast<double>(grid.nx - 1);
            points.add(x, y);
        }
    }
    return points;
}

std::string format_field(const ParamVector& params, const PointSet& points, const Scales& scales,
                         const PointSet* reference) {
    scales.validate();
    if (reference && reference->size() != points.size()) {
        throw DataError("reference has " + std::to_string(reference->size()) + " points, grid has " +
                        std::to_string(points.size()));
    }
    const Eigen::MatrixXd pred = predict(params, points.x, points.y);
    PointSet out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        out.add(points.x[i], points.y[i], pred(0, c), pred(1, c), pred(2, c));
    }
    out = redimensionalize(out, scales);
    std::optional<PointSet> ref;
    if (reference) ref = redimensionalize(*reference, scales);

    std::ostringstream s;
    s << "# scale_length=" << format_double(scales.length) << " scale_velocity=" << format_double(scales.velocity)
      << " scale_pressure=" << format_double(scales.pressure) << '\n';
    s << "x,y,u,v,p";
    if (ref) s << ",u_ref,v_ref,p_ref";
    s << '\n';
    for (std::size_t i = 0; i < out.size(); ++i) {
        s << format_double(out.x[i]) << ',' << format_double(out.y[i]);
        for (int k = 0; k < 3; ++k) s << ',' << format_double(out.label[k][i]);
        if (ref) {
            for (int k = 0; k < 3; ++k) {
                s << ',';
                if (ref->mask[k][i]) s << format_double(ref->label[k][i]);
            }
        }
        s << '\n';
    }
    return s.str();
}

void export_field(const std::string& path, const ParamVector& params, const PointSet& points, const Scales& scales,
                  const PointSet* reference) {
    const std::string text = format_field(params, points, scales, reference);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write field export to " + path);
    out << text;
    if (!out) throw DataError("failed writing field export to " + path);
}

FieldExport read_field_export(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open field export '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    FieldExport out;
    std::istringstream lines(text);
    std::string first;
    std::getline(lines, first);
    std::istringstream header(first.substr(first.find_first_not_of("# ")));
    std::string token;
    while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const double value = std::stod(token.substr(eq + 1));
        if (key == "scale_length") out.scales.length = value;
        if (key == "scale_velocity") out.scales.velocity = value;
        if (key == "scale_pressure") out.scales.pressure = value;
    }
    out.scales.validate();
    out.prediction = parse_points(text, {}, path);
    std::string second;
    std::getline(lines, second);
    if (second.find("u_ref") != std::string::npos) {
        out.reference = parse_points(text, {{"u", "u_ref"}, {"v", "v_ref"}, {"p", "p_ref"}}, path);
    }
    return out;
}

std::string format_report(const MetricsReport& report) {
    std::ostringstream s;
    const char* rel = report.mode == RelativeMode::MeanSquare ? "relative MSE" : "relative L2";
    s << "problem: " << (report.problem.empty() ? "-" : report.problem) << "\n";
    s << "seed: " << report.seed << "\nepoch: " << report.epoch << "\n";
    bool any = false;
    for (Field f : kAllFields) {
        const auto& m = report.fields[static_cast<int>(f)];
        if (!m) continue;
        any = true;
        s << field_name(f) << ": absolute MSE " << m->absolute_mse;
        if (m->relative_percent) s << ", " << rel << ' ' << *m->relative_percent << '%';
        if (m->r_squared) s << ", R2 " << *m->r_squared;
        s << '\n';
    }
    if (!any) s << "no reference fields: metrics absent\n";
    if (report.velocity_relative_l2) s << "velocity relative L2: " << 100.0 * *report.velocity_relative_l2 << "%\n";
    if (report.profile && !report.profile->magnitude.empty()) {
        const auto& m = report.profile->magnitude;
        s << "line profile: " << m.size() << " samples, speed " << *std::min_element(m.begin(), m.end()) << " to "
          << *std::max_element(m.begin(), m.end()) << '\n';
    }
    if (report.profile_max_error) s << "line profile max speed error: " << *report.profile_max_error << '\n';

    s << "\n[fields]\nfield,absolute_mse,relative_mse_percent,r2\n";
    for (Field f : kAllFields) {
        const auto& m = report.fields[static_cast<int>(f)];
        if (!m) continue;
        s << field_name(f) << ',' << format_double(m->absolute_mse) << ','
          << (m->relative_percent ? format_double(*m->relative_percent) : "") << ','
          << (m->r_squared ? format_double(*m->r_squared) : "") << '\n';
    }
    if (!report.cp.empty()) {
        s << "\n[cp]\narc,cp\n";
        for (const auto& row : report.cp) s << format_double(row.arc) << ',' << format_double(row.cp) << '\n';
    }
    if (report.profile) {
        s << "\n[profile]\nposition,x,y,magnitude,angle_deg\n";
        const auto& p = *report.profile;
        for (std::size_t i = 0; i < p.position.size(); ++i) {
            s << format_double(p.position[i]) << ',' << format_double(p.x[i]) << ',' << format_double(p.y[i]) << ','
              << format_double(p.magnitude[i]) << ',' << format_double(p.angle_deg[i]) << '\n';
        }
    }
    return s.str();
}

void write_report(const std::string& path, const MetricsReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report to " + path);
    out << format_report(report);
    if (!out) throw DataError("failed writing report to " + path);
}

}  // namespace flowpinn
