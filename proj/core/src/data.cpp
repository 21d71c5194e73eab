// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "flowpinn/errors.hpp"

namespace flowpinn {

// ---------------------------------------------------------------------------
// Scales
// ---------------------------------------------------------------------------

void Scales::validate() const {
    for (double s : {length, velocity, pressure}) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("nondimensionalization scales must be positive");
    }
}

Scales Scales::from_inlet(double chord, double inlet_speed, double density) {
    Scales s{chord, inlet_speed, density * inlet_speed * inlet_speed};
    s.validate();
    return s;
}

namespace {

PointSet rescale(const PointSet& points, const Scales& scales, bool to_nondimensional) {
    scales.validate();
    auto apply = [&](double v, double s) { return to_nondimensional ? v / s : v * s; };
    PointSet out = points;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.x[i] = apply(out.x[i], scales.length);
        out.y[i] = apply(out.y[i], scales.length);
        out.label[0][i] = apply(out.label[0][i], scales.velocity);
        out.label[1][i] = apply(out.label[1][i], scales.velocity);
        out.label[2][i] = apply(out.label[2][i], scales.pressure);
    }
    for (double& nu : out.nu_eff) nu = apply(nu, scales.velocity * scales.length);
    return out;
}

}  // namespace

PointSet nondimensionalize(const PointSet& points, const Scales& scales) { return rescale(points, scales, true); }

PointSet redimensionalize(const PointSet& points, const Scales& scales) { return rescale(points, scales, false); }

// ---------------------------------------------------------------------------
// Point files
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line, bool comma) {
    std::vector<std::string> cells;
    if (comma) {
        std::string cell;
        std::istringstream in(line);
        while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
        if (!line.empty() && line.back() == ',') cells.emplace_back();
    } else {
        std::istringstream in(line);
        std::string cell;
        while (in >> cell) cells.push_back(cell);
    }
    return cells;
}

std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw std::invalid_argument(cell);
    return value;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

PointSet parse_points(const std::string& text, const ColumnMap& columns, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::string header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty() && trim(line)[0] != '#') {
            header = line;
            break;
        }
    }
    if (header.empty()) throw DataError(origin + ": missing header row");
    const bool comma = header.find(',') != std::string::npos;
    const auto names = split_row(header, comma);

    auto column_of = [&](const std::string& canonical) -> int {
        const auto it = columns.find(canonical);
        const std::string& wanted = it == columns.end() ? canonical : it->second;
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (names[k] == wanted) return static_cast<int>(k);
        }
        return -1;
    };
    const int cx = column_of("x");
    const int cy = column_of("y");
    if (cx < 0 || cy < 0) throw DataError(origin + ": header lacks the required x and y columns");
    const std::array<int, 3> cf = {column_of("u"), column_of("v"), column_of("p")};
    const std::array<int, 3> cm = {column_of("mask_u"), column_of("mask_v"), column_of("mask_p")};
    const int cnu = column_of("nu_eff");

    PointSet points;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = split_row(line, comma);
        if (cells.size() != names.size()) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
                            " cells, found " + std::to_string(cells.size()));
        }
        auto cell = [&](int c, const char* what) -> std::optional<double> {
            try {
                const auto v = parse_number(cells[c]);
                if (v && std::isnan(*v)) return std::nullopt;
                return v;
            } catch (const std::invalid_argument&) {
                if (cells[c] == "nan" || cells[c] == "NaN" || cells[c] == "NAN") return std::nullopt;
                throw DataError(origin + ":" + std::to_string(line_no) + ": non-numeric " + what + " cell '" +
                                cells[c] + "'");
            }
        };
        const auto x = cell(cx, "x");
        const auto y = cell(cy, "y");
        if (!x || !y) throw DataError(origin + ":" + std::to_string(line_no) + ": missing coordinate");
        std::array<std::optional<double>, 3> f;
        std::array<double, 3> stored = {0.0, 0.0, 0.0};
        for (int k = 0; k < 3; ++k) {
            if (cf[k] < 0) continue;
            f[k] = cell(cf[k], field_name(static_cast<Field>(k)));
            if (f[k]) stored[k] = *f[k];
            if (cm[k] >= 0) {
                const auto m = cell(cm[k], "mask");
                if (!m || *m == 0.0) f[k].reset();
            }
        }
        std::optional<double> nu;
        if (cnu >= 0) {
            nu = cell(cnu, "nu_eff");
            if (!nu) throw DataError(origin + ":" + std::to_string(line_no) + ": missing nu_eff value");
        }
        points.add(*x, *y, f[0], f[1], f[2], nu);
        // Masked-out entries keep their stored value so written files round-trip exactly.
        for (int k = 0; k < 3; ++k) points.label[k].back() = stored[k];
    }
    points.validate(origin);
    return points;
}

PointSet load_points(const std::string& path, const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open point file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_points(buffer.str(), columns, path);
}

std::string format_points(const PointSet& points) {
    std::ostringstream out;
    out << "x,y,u,v,p";
    if (points.has_nu_eff()) out << ",nu_eff";
    out << ",mask_u,mask_v,mask_p\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        out << format_double(points.x[i]) << ',' << format_double(points.y[i]);
        for (int k = 0; k < 3; ++k) out << ',' << format_double(points.label[k][i]);
        if (points.has_nu_eff()) out << ',' << format_double(points.nu_eff[i]);
        for (int k = 0; k < 3; ++k) out << ',' << (points.mask[k][i] ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

void write_points(const std::string& path, const PointSet& points) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write point file '" + path + "'");
    out << format_points(points);
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Sampling and noise
// ---------------------------------------------------------------------------

PointSet sample_without_replacement(const PointSet& pool, std::size_t n, std::uint64_t seed) {
    if (n > pool.size()) {
        throw DataError("cannot sample " + std::to_string(n) + " points from a pool of " +
                        std::to_string(pool.size()));
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first n entries are a uniform n-subset in random order.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    order.resize(n);
    return pool.subset(order);
}

PointSet sample_rectangle(double x_min, double x_max, double y_min, double y_max, std::size_t n,
                          std::uint64_t seed) {
    if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("degenerate sampling rectangle");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(x_min, x_max);
    std::uniform_real_distribution<double> uy(y_min, y_max);
    PointSet points;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        points.add(x, y);
    }
    return points;
}

PointSet inject_noise(const PointSet& points, double level, std::uint64_t seed, const NoiseReference& reference) {
    if (!(level >= 0.0) || !std::isfinite(level)) throw ConfigError("noise level must be non-negative");
    PointSet out = points;
    if (level == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::array<double, 3> sigma = {level * reference.velocity, level * reference.velocity,
                                         level * reference.pressure};
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            if (out.mask[k][i]) out.label[k][i] += sigma[k] * normal(rng);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manufactured solution
// ---------------------------------------------------------------------------

double kovasznay_lambda(double reynolds) {
    if (!(reynolds > 0.0)) throw ConfigError("Reynolds number must be positive");
    const double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
    return 0.5 * reynolds - std::sqrt(0.25 * reynolds * reynolds + four_pi_sq);
}

std::array<std::array<double, 3>, 5> kovasznay_jet(double x, double y, double reynolds) {
    const double lam = kovasznay_lambda(reynolds);
    const double k = 2.0 * std::numbers::pi;
    const double e = std::exp(lam * x);
    const double e2 = std::exp(2.0 * lam * x);
    const double c = std::cos(k * y);
    const double s = std::sin(k * y);
    return {{
        {1.0 - e * c, lam / k * e * s, 0.5 * (1.0 - e2)},
        {-lam * e * c, lam * lam / k * e * s, -lam * e2},
        {k * e * s, lam * e * c, 0.0},
        {-lam * lam * e * c, lam * lam * lam / k * e * s, -2.0 * lam * lam * e2},
        {k * k * e * c, -lam * k * e * s, 0.0},
    }};
}

void label_with_kovasznay(PointSet& points, double reynolds) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto f = kovasznay(points.x[i], points.y[i], reynolds);
        for (int k = 0; k < 3; ++k) {
            points.label[k][i] = f[k];
            points.mask[k][i] = 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

const char* mode_name(ProblemMode mode) { return mode == ProblemMode::Forward ? "forward" : "inverse"; }

ProblemMode parse_mode(const std::string& text) {
    if (text == "forward") return ProblemMode::Forward;
    if (text == "inverse") return ProblemMode::Inverse;
    throw ConfigError("mode must be 'forward' or 'inverse', got '" + text + "'");
}

void DatasetBundle::validate() const {
    residual.validate("residual set");
    labeled.validate("labeled set");
    inlet.validate("inlet set");
    outlet.validate("outlet set");
    wall.validate("wall set");
    periodic.validate();
    scales.validate();
}

PeriodicPairs pair_periodic(PointSet lower, PointSet upper, double pitch) {
    if (lower.size() != upper.size()) {
        throw DataError("periodic boundaries have " + std::to_string(lower.size()) + " lower and " +
                        std::to_string(upper.size()) + " upper points");
    }
    auto by_x = [](const PointSet& s) {
        std::vector<std::size_t> idx(s.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
        return idx;
    };
    const auto lo = by_x(lower);
    const auto up = by_x(upper);
    PeriodicPairs pairs{std::move(lower), std::move(upper), {}, pitch};
    for (std::size_t k = 0; k < lo.size(); ++k) pairs.pairs.emplace_back(lo[k], up[k]);
    pairs.validate();
    return pairs;
}

namespace {

PointSet edge(double x0, double y0, double x1, double y1, std::size_t n) {
    PointSet points;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        points.add(x0 + t * (x1 - x0), y0 + t * (y1 - y0));
    }
    return points;
}

void keep_fields(PointSet& points, bool u, bool v, bool p) {
    if (!u) points.hide(Field::U);
    if (!v) points.hide(Field::V);
    if (!p) points.hide(Field::P);
}

DatasetBundle manufactured_bundle(const BundleConfig& config) {
    const ManufacturedDomain& d = *config.manufactured;
    const double re = d.reynolds;
    kovasznay_lambda(re);
    if (d.edge_points == 0) throw ConfigError("edge_points must be positive");
    const double pitch = d.y_max - d.y_min;
    if (std::abs(pitch - std::round(pitch)) > 1e-12 || std::round(pitch) < 1.0) {
        throw ConfigError("manufactured domain height must be a whole number of periods (1) for periodic pairing");
    }
    std::mt19937_64 seeder(config.seed);
    const std::uint64_t seed_residual = seeder();
    const std::uint64_t seed_labeled = seeder();

    DatasetBundle b;
    b.scales = config.scales;
    b.residual = sample_rectangle(d.x_min, d.x_max, d.y_min, d.y_max, d.residual_points, seed_residual);

    PointSet wall = edge(d.wall_x_min, d.wall_y, d.wall_x_max, d.wall_y, d.edge_points);
    label_with_kovasznay(wall, re);
    keep_fields(wall, true, true, false);

    if (config.mode == ProblemMode::Forward) {
        b.labeled = sample_rectangle(d.x_min, d.x_max, d.y_min, d.y_max, d.labeled_points, seed_labeled);
        label_with_kovasznay(b.labeled, re);

        b.inlet = edge(d.x_min, d.y_min, d.x_min, d.y_max, d.edge_points);
        label_with_kovasznay(b.inlet, re);
        keep_fields(b.inlet, true, true, false);

        b.outlet = edge(d.x_max, d.y_min, d.x_max, d.y_max, d.edge_points);
        label_with_kovasznay(b.outlet, re);
        keep_fields(b.outlet, false, false, true);

        b.wall = std::move(wall);

        PointSet lower = edge(d.x_min, d.y_min, d.x_max, d.y_min, d.edge_points);
        PointSet upper = edge(d.x_min, d.y_max, d.x_max, d.y_max, d.edge_points);
        b.periodic = pair_periodic(std::move(lower), std::move(upper), pitch);
    } else {
        PointSet velocity = sample_rectangle(d.x_min, d.x_max, d.y_min, d.y_max, d.velocity_points, seed_labeled);
        label_with_kovasznay(velocity, re);
        keep_fields(velocity, true, true, false);

        PointSet pressure = edge(d.x_min, d.y_min, d.x_min, d.y_max, d.edge_points);
        pressure.append(edge(d.x_max, d.y_min, d.x_max, d.y_max, d.edge_points));
        label_with_kovasznay(pressure, re);
        keep_fields(pressure, false, false, true);

        b.labeled = std::move(velocity);
        b.labeled.append(pressure);
        if (config.inverse_wall_no_slip) b.wall = std::move(wall);
    }

    b.provenance["source"] = "kovasznay";
    b.provenance["reynolds"] = format_double(re);
    b.provenance["domain"] = format_double(d.x_min) + " " + format_double(d.x_max) + " " + format_double(d.y_min) +
                             " " + format_double(d.y_max);
    b.provenance["seed_residual"] = std::to_string(seed_residual);
    b.provenance["seed_labeled"] = std::to_string(seed_labeled);
    return b;
}

DatasetBundle file_bundle(const BundleConfig& config) {
    const FileSources& f = config.files;
    if (f.mesh.empty()) throw ConfigError("a mesh point file is required");
    auto load = [&](const std::string& path) {
        PointSet s = load_points(path, f.columns);
        return f.nondimensional ? s : nondimensionalize(s, config.scales);
    };
    std::mt19937_64 seeder(config.seed);
    const std::uint64_t seed_residual = seeder();
    const std::uint64_t seed_labeled = seeder();

    DatasetBundle b;
    b.scales = config.scales;
    const PointSet mesh = load(f.mesh);
    b.residual = sample_without_replacement(mesh, f.residual_points, seed_residual);
    b.provenance["mesh"] = f.mesh;
    b.provenance["mesh_digest"] = file_digest(f.mesh);

    auto load_named = [&](const std::string& key, const std::string& path) {
        if (path.empty()) return PointSet{};
        b.provenance[key] = path;
        b.provenance[key + "_digest"] = file_digest(path);
        return load(path);
    };

    if (config.mode == ProblemMode::Forward) {
        b.labeled = sample_without_replacement(mesh, f.labeled_points, seed_labeled);
        b.inlet = load_named("inlet", f.inlet);
        b.outlet = load_named("outlet", f.outlet);
        b.wall = load_named("wall", f.wall);
        keep_fields(b.wall, false, false, false);
        PointSet lower = load_named("periodic_lower", f.periodic_lower);
        PointSet upper = load_named("periodic_upper", f.periodic_upper);
        if (b.inlet.empty() || b.outlet.empty() || b.wall.empty() || lower.empty()) {
            throw ConfigError("forward mode needs inlet, outlet, wall and periodic boundary files");
        }
        const double pitch = f.nondimensional ? f.pitch : f.pitch / config.scales.length;
        b.periodic = pair_periodic(std::move(lower), std::move(upper), pitch);
    } else {
        PointSet velocity = sample_without_replacement(mesh, f.velocity_points, seed_labeled);
        keep_fields(velocity, true, true, false);
        PointSet wall = load_named("wall", f.wall);
        if (wall.empty()) throw ConfigError("inverse mode needs the wall file for pressure labels");
        PointSet pressure = wall;
        keep_fields(pressure, false, false, true);
        if (pressure.count(Field::P) != pressure.size()) {
            throw DataError("wall file must carry a pressure value at every point in inverse mode");
        }
        b.labeled = std::move(velocity);
        b.labeled.append(pressure);
        if (config.inverse_wall_no_slip) {
            b.wall = std::move(wall);
            keep_fields(b.wall, false, false, false);
        }
    }
    b.provenance["source"] = "files";
    b.provenance["seed_residual"] = std::to_string(seed_residual);
    b.provenance["seed_labeled"] = std::to_string(seed_labeled);
    return b;
}

}  // namespace

DatasetBundle build_bundle(const BundleConfig& config) {
    config.scales.validate();
    DatasetBundle b = config.manufactured ? manufactured_bundle(config) : file_bundle(config);
    if (config.mode == ProblemMode::Forward &&
        (b.inlet.empty() || b.outlet.empty() || b.wall.empty() || b.periodic.empty())) {
        throw ConfigError("forward mode requires non-empty inlet, outlet, wall and periodic sets");
    }
    b.provenance["mode"] = mode_name(config.mode);
    b.provenance["seed"] = std::to_string(config.seed);
    b.provenance["count_residual"] = std::to_string(b.residual.size());
    b.provenance["count_labeled"] = std::to_string(b.labeled.size());
    b.provenance["count_inlet"] = std::to_string(b.inlet.size());
    b.provenance["count_outlet"] = std::to_string(b.outlet.size());
    b.provenance["count_wall"] = std::to_string(b.wall.size());
    b.provenance["count_periodic_pairs"] = std::to_string(b.periodic.size());
    b.provenance["scale_length"] = format_double(b.scales.length);
    b.provenance["scale_velocity"] = format_double(b.scales.velocity);
    b.provenance["scale_pressure"] = format_double(b.scales.pressure);
    b.validate();
    return b;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for hashing");
    std::uint64_t h = 14695981039346656037ULL;
    char buf[4096];
    while (in) {
        in.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace flowpinn
