// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "flowpinn/errors.hpp"

namespace flowpinn {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> words(const std::string& value) {
    std::string spaced = value;
    std::replace(spaced.begin(), spaced.end(), ',', ' ');
    std::istringstream in(spaced);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& expected) {
    throw ConfigError("config key '" + key + "': cannot use '" + value + "' (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty()) bad(key, text, "a number");
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) bad(key, text, "a non-negative integer");
    return v;
}

bool to_bool(const std::string& key, const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    bad(key, text, "true or false");
}

std::vector<double> numbers(const std::string& key, const std::string& value, std::size_t count) {
    const auto w = words(value);
    if (w.size() != count) bad(key, value, std::to_string(count) + " numbers");
    std::vector<double> out;
    for (const auto& s : w) out.push_back(to_double(key, s));
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i]);
    return out;
}

}  // namespace

std::size_t RunConfig::total_epochs() const { return epochs ? *epochs : epochs_through_cycle(cycles, schedule); }

void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    auto sz = [&] { return static_cast<std::size_t>(to_unsigned(key, value)); };
    auto num = [&] { return to_double(key, value); };
    auto flag = [&] { return to_bool(key, value); };

    if (key == "problem") {
        if (value != "kovasznay" && value != "files") bad(key, value, "kovasznay or files");
        c.problem = value;
    } else if (key == "mode") {
        try {
            c.mode = parse_mode(value);
        } catch (const Error&) {
            bad(key, value, "forward or inverse");
        }
    } else if (key == "reynolds") {
        c.domain.reynolds = num();
    } else if (key == "domain") {
        const auto v = numbers(key, value, 4);
        c.domain.x_min = v[0], c.domain.x_max = v[1], c.domain.y_min = v[2], c.domain.y_max = v[3];
    } else if (key == "wall_y") {
        c.domain.wall_y = num();
    } else if (key == "wall_x") {
        const auto v = numbers(key, value, 2);
        c.domain.wall_x_min = v[0], c.domain.wall_x_max = v[1];
    } else if (key == "residual_points") {
        c.domain.residual_points = c.files.residual_points = sz();
    } else if (key == "labeled_points") {
        c.domain.labeled_points = c.files.labeled_points = sz();
    } else if (key == "edge_points") {
        c.domain.edge_points = sz();
    } else if (key == "velocity_points") {
        c.domain.velocity_points = c.files.velocity_points = sz();
    } else if (key == "mesh") {
        c.files.mesh = value;
    } else if (key == "inlet") {
        c.files.inlet = value;
    } else if (key == "outlet") {
        c.files.outlet = value;
    } else if (key == "wall") {
        c.files.wall = value;
    } else if (key == "periodic_lower") {
        c.files.periodic_lower = value;
    } else if (key == "periodic_upper") {
        c.files.periodic_upper = value;
    } else if (key == "pitch") {
        c.files.pitch = num();
    } else if (key == "nondimensional") {
        c.files.nondimensional = flag();
    } else if (key.rfind("column.", 0) == 0) {
        c.files.columns[key.substr(7)] = value;
    } else if (key == "scale_length") {
        c.scales.length = num();
    } else if (key == "scale_velocity") {
        c.scales.velocity = num();
    } else if (key == "scale_pressure") {
        c.scales.pressure = num();
    } else if (key == "density") {
        c.density = num();
    } else if (key == "viscosity") {
        c.viscosity = num();
    } else if (key == "viscous_sign") {
        if (value == "standard") {
            c.sign = ViscousSign::Standard;
        } else if (value == "as-printed") {
            c.sign = ViscousSign::AsPrinted;
        } else {
            bad(key, value, "standard or as-printed");
        }
    } else if (key == "pressure_periodic") {
        c.pressure_periodic = flag();
    } else if (key == "inverse_wall_no_slip") {
        c.inverse_wall_no_slip = flag();
    } else if (key == "unknown") {
        const auto w = words(value);
        if (w.size() < 2 || w.size() > 3 || (w.size() == 3 && w[2] != "positive")) {
            bad(key, value, "'name initial [positive]'");
        }
        c.unknowns.push_back({w[0], to_double(key, w[1]), w.size() == 3});
    } else if (key == "seed") {
        c.seed = to_unsigned(key, value);
    } else if (key == "data_seed") {
        c.data_seed = to_unsigned(key, value);
    } else if (key == "layers") {
        LayerSizes sizes;
        for (const auto& w : words(value)) sizes.push_back(static_cast<int>(to_unsigned(key, w)));
        c.layers = sizes;
    } else if (key == "epochs") {
        c.epochs = sz();
    } else if (key == "cycles") {
        c.cycles = sz();
        c.epochs.reset();
    } else if (key == "warmup") {
        c.schedule.warmup = sz();
    } else if (key == "lr_min") {
        c.schedule.lr_min = num();
    } else if (key == "lr_max") {
        c.schedule.lr_max = num();
    } else if (key == "base_cycle") {
        c.schedule.base_cycle = sz();
    } else if (key == "weight_period") {
        c.weight_period = sz();
    } else if (key == "weight_ema") {
        c.weight_ema = num();
    } else if (key == "weight_mode") {
        if (value == "ratio-of-means") {
            c.weight_mode = BalanceMode::RatioOfMeans;
        } else if (value == "mean-of-ratios") {
            c.weight_mode = BalanceMode::MeanOfRatios;
        } else {
            bad(key, value, "ratio-of-means or mean-of-ratios");
        }
    } else if (key == "adaptive") {
        c.adaptive = flag();
    } else if (key == "ablate_dnn") {
        c.ablate_dnn = flag();
    } else if (key == "residual_batch") {
        c.residual_batch = sz();
    } else if (key == "noise_level") {
        c.noise_level = num();
        if (c.noise_level < 0.0) bad(key, value, "a non-negative fraction");
    } else if (key == "noise_seed") {
        c.noise_seed = to_unsigned(key, value);
    } else if (key == "noise_velocity") {
        c.noise_reference.velocity = num();
    } else if (key == "noise_pressure") {
        c.noise_reference.pressure = num();
    } else if (key == "relative_mode") {
        if (value == "mean-square") {
            c.relative_mode = RelativeMode::MeanSquare;
        } else if (value == "l2") {
            c.relative_mode = RelativeMode::L2;
        } else {
            bad(key, value, "mean-square or l2");
        }
    } else if (key == "grid") {
        const auto w = words(value);
        if (w.size() != 2) bad(key, value, "'nx ny'");
        c.grid_nx = static_cast<std::size_t>(to_unsigned(key, w[0]));
        c.grid_ny = static_cast<std::size_t>(to_unsigned(key, w[1]));
    } else if (key == "reference") {
        c.reference = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void parse_run_config(RunConfig& config, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig config;
    parse_run_config(config, buffer.str(), path);
    return config;
}

std::string format_run_config(const RunConfig& c) {
    std::ostringstream s;
    auto put = [&](const std::string& key, const std::string& value) { s << key << " = " << value << '\n'; };
    auto real = [&](const std::string& key, double v) { put(key, format_double(v)); };
    auto boolean = [&](const std::string& key, bool v) { put(key, v ? "true" : "false"); };
    put("problem", c.problem);
    put("mode", mode_name(c.mode));
    real("reynolds", c.domain.reynolds);
    put("domain", join({c.domain.x_min, c.domain.x_max, c.domain.y_min, c.domain.y_max}));
    real("wall_y", c.domain.wall_y);
    put("wall_x", join({c.domain.wall_x_min, c.domain.wall_x_max}));
    if (c.problem == "files") {
        put("residual_points", std::to_string(c.files.residual_points));
        put("labeled_points", std::to_string(c.files.labeled_points));
        put("velocity_points", std::to_string(c.files.velocity_points));
    } else {
        put("residual_points", std::to_string(c.domain.residual_points));
        put("labeled_points", std::to_string(c.domain.labeled_points));
        put("velocity_points", std::to_string(c.domain.velocity_points));
    }
    put("edge_points", std::to_string(c.domain.edge_points));
    const std::pair<const char*, const std::string*> paths[] = {
        {"mesh", &c.files.mesh},     {"inlet", &c.files.inlet},
        {"outlet", &c.files.outlet}, {"wall", &c.files.wall},
        {"periodic_lower", &c.files.periodic_lower}, {"periodic_upper", &c.files.periodic_upper}};
    for (const auto& [key, path] : paths) {
        if (!path->empty()) put(key, *path);
    }
    real("pitch", c.files.pitch);
    boolean("nondimensional", c.files.nondimensional);
    for (const auto& [canonical, header] : c.files.columns) put("column." + canonical, header);
    real("scale_length", c.scales.length);
    real("scale_velocity", c.scales.velocity);
    real("scale_pressure", c.scales.pressure);
    if (c.density) real("density", *c.density);
    if (c.viscosity) real("viscosity", *c.viscosity);
    put("viscous_sign", c.sign == ViscousSign::Standard ? "standard" : "as-printed");
    boolean("pressure_periodic", c.pressure_periodic);
    boolean("inverse_wall_no_slip", c.inverse_wall_no_slip);
    for (const auto& u : c.unknowns) put("unknown", u.name + " " + format_double(u.initial) + (u.positive ? " positive" : ""));
    put("seed", std::to_string(c.seed));
    put("data_seed", std::to_string(c.data_seed));
    std::string layers;
    for (std::size_t i = 0; i < c.layers.size(); ++i) layers += (i ? "," : "") + std::to_string(c.layers[i]);
    put("layers", layers);
    if (c.epochs) {
        put("epochs", std::to_string(*c.epochs));
    } else {
        put("cycles", std::to_string(c.cycles));
    }
    put("warmup", std::to_string(c.schedule.warmup));
    real("lr_min", c.schedule.lr_min);
    real("lr_max", c.schedule.lr_max);
    put("base_cycle", std::to_string(c.schedule.base_cycle));
    put("weight_period", std::to_string(c.weight_period));
    real("weight_ema", c.weight_ema);
    put("weight_mode", c.weight_mode == BalanceMode::RatioOfMeans ? "ratio-of-means" : "mean-of-ratios");
    boolean("adaptive", c.adaptive);
    boolean("ablate_dnn", c.ablate_dnn);
    put("residual_batch", std::to_string(c.residual_batch));
    real("noise_level", c.noise_level);
    put("noise_seed", std::to_string(c.noise_seed));
    real("noise_velocity", c.noise_reference.velocity);
    real("noise_pressure", c.noise_reference.pressure);
    put("relative_mode", c.relative_mode == RelativeMode::MeanSquare ? "mean-square" : "l2");
    put("grid", std::to_string(c.grid_nx) + " " + std::to_string(c.grid_ny));
    if (!c.reference.empty()) put("reference", c.reference);
    return s.str();
}

BundleConfig bundle_config(const RunConfig& c) {
    BundleConfig b;
    b.mode = c.mode;
    if (c.problem == "kovasznay") b.manufactured = c.domain;
    b.files = c.files;
    b.scales = c.scales;
    b.seed = c.data_seed;
    b.inverse_wall_no_slip = c.inverse_wall_no_slip;
    return b;
}

ProblemOptions problem_options(const RunConfig& c) {
    ProblemOptions o;
    o.unknowns = c.unknowns;
    o.sign = c.sign;
    o.ablate_dnn = c.ablate_dnn;
    o.pressure_periodic = c.pressure_periodic;
    if (c.problem == "kovasznay") {
        o.constants.density = c.density.value_or(1.0);
        o.constants.viscosity = c.viscosity.value_or(1.0 / c.domain.reynolds);
    } else {
        if (!c.density || !c.viscosity) throw ConfigError("file problems need density and viscosity");
        // Physical constants mapped onto the scaled equations.
        const double density = *c.density, nu = *c.viscosity;
        const auto& s = c.scales;
        o.constants.density = c.files.nondimensional ? density : density * s.velocity * s.velocity / s.pressure;
        o.constants.viscosity = c.files.nondimensional ? nu : nu / (s.velocity * s.length);
    }
    return o;
}

TrainConfig train_config(const RunConfig& c) {
    TrainConfig t;
    t.epochs = c.total_epochs();
    t.seed = c.seed;
    t.layers = c.layers;
    t.ablate_dnn = c.ablate_dnn;
    t.adaptive = c.adaptive;
    t.initial_weights.alpha = c.weight_ema;
    t.initial_weights.period = c.weight_period;
    t.balance = c.weight_mode;
    t.schedule = c.schedule;
    t.residual_batch = c.residual_batch;
    return t;
}

RunSetup prepare_run(const RunConfig& config) {
    RunSetup setup;
    DatasetBundle bundle = build_bundle(bundle_config(config));
    if (config.noise_level > 0.0) {
        bundle.labeled = inject_noise(bundle.labeled, config.noise_level, config.noise_seed, config.noise_reference);
        bundle.provenance["noise_level"] = format_double(config.noise_level);
        bundle.provenance["noise_seed"] = std::to_string(config.noise_seed);
    }
    setup.bundle = std::make_shared<DatasetBundle>(std::move(bundle));
    setup.problem = make_problem(config.mode, setup.bundle, problem_options(config));
    setup.train = train_config(config);
    setup.train.validate();
    require_valid(setup.problem);
    return setup;
}

PointSet reference_field(const RunConfig& config) {
    if (config.problem == "kovasznay") {
        const auto& d = config.domain;
        PointSet grid = grid_points({d.x_min, d.x_max, d.y_min, d.y_max, config.grid_nx, config.grid_ny});
        label_with_kovasznay(grid, d.reynolds);
        return grid;
    }
    if (config.reference.empty()) return {};
    PointSet ref = load_points(config.reference, config.files.columns);
    return config.files.nondimensional ? ref : nondimensionalize(ref, config.scales);
}

}  // namespace flowpinn
