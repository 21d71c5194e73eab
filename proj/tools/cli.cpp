// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "flowpinn/checkpoint.hpp"
#include "flowpinn/errors.hpp"

namespace flowpinn::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

nlohmann::json loss_json(const LossBreakdown& l) {
    return {{"residual", l.residual}, {"labeled", l.labeled},   {"inlet", l.inlet},
            {"outlet", l.outlet},     {"wall", l.wall},         {"periodic", l.periodic},
            {"w1", l.w_residual},     {"w2", l.w_labeled},      {"w3", l.w_boundary},
            {"total", l.total}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

/// Config flags shared by every command: each maps onto one config key.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App& app) {
        app.add_option("--config", file, "problem definition file (key = value lines)");
        const std::pair<const char*, const char*> keys[] = {
            {"mode", "forward or inverse"},
            {"problem", "kovasznay or files"},
            {"seed", "training seed"},
            {"data_seed", "sampling seed"},
            {"epochs", "total epochs"},
            {"cycles", "train through this many restart cycles"},
            {"layers", "comma separated layer widths"},
            {"reynolds", "Reynolds number of the manufactured flow"},
            {"noise_level", "label noise as a fraction of the reference magnitude"},
            {"weight_mode", "ratio-of-means or mean-of-ratios"},
            {"relative_mode", "mean-square or l2"},
            {"reference", "reference point file for evaluation"},
        };
        for (const auto& [key, help] : keys) {
            std::string flag = std::string("--") + key;
            for (char& ch : flag) ch = ch == '_' ? '-' : ch;
            options[key] = app.add_option(flag, values[key], help);
        }
        app.add_option("--set", sets, "any config key as key=value (repeatable)");
    }

    /// defaults, then the file, then flags
    RunConfig resolve() const {
        RunConfig config = file.empty() ? RunConfig{} : load_run_config(file);
        for (const auto& [key, option] : options) {
            if (option->count() > 0) apply_setting(config, key, values.at(key));
        }
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
        return config;
    }

    bool given(const std::string& key) const { return options.at(key)->count() > 0; }
};

std::function<void(const std::string&)> progress_sink(std::ostream& err) {
    return [&err](const std::string& line) { err << line << '\n'; };
}

LineSegment downstream_line(const RunConfig& c) {
    const auto& d = c.domain;
    const double x = d.wall_x_max + 0.1 * (d.wall_x_max - d.wall_x_min);
    return {x, d.y_min, x, d.y_max, 101};
}

}  // namespace

fs::path output_dir(const std::string& requested) {
    if (!requested.empty()) return requested;
    if (const char* env = std::getenv("FLOWPINN_OUTPUT_DIR"); env && *env) return env;
    return "flowpinn-run";
}

TrainedRun train_and_save(const RunConfig& config, const fs::path& dir, const std::string& command,
                          std::ostream& progress) {
    const std::string started = utc_now();
    TrainedRun run;
    run.setup = prepare_run(config);
    run.setup.train.progress = progress_sink(progress);
    run.result = train(run.setup.problem, run.setup.train);
    const std::string finished = utc_now();

    fs::create_directories(dir);
    const fs::path checkpoint = dir / "checkpoint.bin";
    const fs::path history = dir / "history.csv";
    const fs::path snapshot = dir / "config.txt";
    const fs::path manifest = dir / "manifest.json";

    Checkpoint ck;
    ck.params = run.result.params;
    ck.optimizer = run.result.optimizer;
    ck.seed = config.seed;
    ck.epoch = run.setup.train.epochs;
    ck.scales = run.setup.bundle->scales;
    ck.problem = config.problem + " " + mode_name(config.mode);
    save_checkpoint(checkpoint.string(), ck);
    write_history(history.string(), run.result.history);
    write_text(snapshot, format_run_config(config));

    run.artifacts = {{"checkpoint", checkpoint.string()}, {"history", history.string()},
                     {"config", snapshot.string()}, {"manifest", manifest.string()}};
    nlohmann::json m;
    m["command"] = command;
    m["config"] = format_run_config(config);
    m["seeds"] = {{"seed", config.seed}, {"data_seed", config.data_seed}, {"noise_seed", config.noise_seed}};
    m["provenance"] = run.setup.bundle->provenance;
    m["epochs"] = run.setup.train.epochs;
    m["started"] = started;
    m["finished"] = finished;
    m["final_loss"] = loss_json(run.result.final_loss);
    m["artifacts"] = run.artifacts;
    write_text(manifest, m.dump(2) + "\n");
    return run;
}

MetricsReport evaluate_run(const ParamVector& params, const RunConfig& config, const PointSet& reference) {
    MetricsReport report;
    report.mode = config.relative_mode;
    report.problem = config.problem + " " + mode_name(config.mode);
    report.seed = config.seed;
    report.fields = evaluate_fields(params, reference, config.relative_mode);
    if (!reference.empty() && reference.count(Field::U) == reference.size() &&
        reference.count(Field::V) == reference.size()) {
        const Eigen::MatrixXd pred = predict(params, reference.x, reference.y);
        std::vector<double> pu(reference.size()), pv(reference.size());
        for (std::size_t i = 0; i < reference.size(); ++i) {
            pu[i] = pred(0, static_cast<Eigen::Index>(i));
            pv[i] = pred(1, static_cast<Eigen::Index>(i));
        }
        const std::span<const double> p[] = {pu, pv};
        const std::span<const double> r[] = {reference.labels(Field::U), reference.labels(Field::V)};
        report.velocity_relative_l2 = relative_l2(p, r);
    }
    if (config.problem == "kovasznay") {
        LineProfile profile = line_profile(params, downstream_line(config));
        double worst = 0.0;
        for (std::size_t i = 0; i < profile.x.size(); ++i) {
            const auto exact = kovasznay(profile.x[i], profile.y[i], config.domain.reynolds);
            worst = std::max(worst, std::abs(profile.magnitude[i] - std::hypot(exact[0], exact[1])));
        }
        report.profile = std::move(profile);
        report.profile_max_error = worst;
    }
    return report;
}

namespace {

int cmd_train(const ConfigFlags& flags, const std::string& out_dir, bool ablate, const std::string& command,
              std::ostream& out, std::ostream& err) {
    RunConfig config = flags.resolve();
    if (ablate) config.ablate_dnn = true;
    const fs::path dir = output_dir(out_dir);
    const TrainedRun run = train_and_save(config, dir, command, err);
    out << "final total loss " << run.result.final_loss.total << '\n';
    out << "artifacts written to " << dir.string() << '\n';
    return kOk;
}

int cmd_evaluate(const ConfigFlags& flags, const std::string& checkpoint_path, bool no_reference,
                 const std::string& out_dir, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const RunConfig config = flags.resolve();
    if (flags.given("layers") && config.layers != ck.params.layer_sizes()) {
        throw ConfigError("checkpoint layer sizes differ from the requested layers");
    }
    PointSet reference;
    if (!no_reference) {
        reference = reference_field(config);
        if (!reference.empty() && reference.has_nu_eff()) reference.nu_eff.clear();
    }
    const fs::path dir = output_dir(out_dir);
    MetricsReport report = evaluate_run(ck.params, config, reference);
    report.epoch = ck.epoch;
    report.seed = ck.seed;

    const auto& d = config.domain;
    const PointSet points =
        reference.empty() ? grid_points({d.x_min, d.x_max, d.y_min, d.y_max, config.grid_nx, config.grid_ny}) : reference;
    fs::create_directories(dir);
    export_field((dir / "field.csv").string(), ck.params, points, ck.scales, reference.empty() ? nullptr : &reference);
    write_report((dir / "report.txt").string(), report);
    out << format_report(report);
    return kOk;
}

int cmd_export(const std::string& checkpoint_path, const std::vector<double>& domain,
               const std::vector<std::size_t>& grid, const std::string& path, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const Grid g{domain[0], domain[1], domain[2], domain[3], grid[0], grid[1]};
    export_field(path, ck.params, grid_points(g), ck.scales);
    out << "wrote " << g.nx * g.ny << " rows to " << path << '\n';
    return kOk;
}

int cmd_noise_sweep(const ConfigFlags& flags, const std::vector<double>& levels,
                    const std::vector<std::uint64_t>& seeds, const std::string& out_dir, std::ostream& out,
                    std::ostream& err) {
    const RunConfig base = flags.resolve();
    if (base.mode != ProblemMode::Inverse) throw ConfigError("noise-sweep needs an inverse-mode config");
    for (double level : levels) {
        if (!(level >= 0.0)) throw ConfigError("noise levels must be non-negative");
    }
    const fs::path dir = output_dir(out_dir);
    std::ostringstream table;
    table << "level,seed,status,relative_u,relative_v,relative_p,velocity_relative_l2,final_total\n";
    for (double level : levels) {
        for (std::uint64_t seed : seeds) {
            RunConfig c = base;
            c.noise_level = level;
            c.noise_seed = seed;
            c.seed = seed;
            const fs::path run_dir = dir / ("level_" + format_double(level) + "_seed_" + std::to_string(seed));
            table << format_double(level) << ',' << seed << ',';
            try {
                const TrainedRun run = train_and_save(c, run_dir, "noise-sweep", err);
                const MetricsReport r = evaluate_run(run.result.params, c, reference_field(c));
                write_report((run_dir / "report.txt").string(), r);
                table << "ok";
                for (const auto& f : r.fields) {
                    table << ',' << (f && f->relative_percent ? format_double(*f->relative_percent) : "");
                }
                table << ',' << (r.velocity_relative_l2 ? format_double(*r.velocity_relative_l2) : "") << ','
                      << format_double(run.result.final_loss.total) << '\n';
            } catch (const DivergenceError& e) {
                err << "run level " << level << " seed " << seed << ": " << e.what() << '\n';
                table << "diverged,,,,,\n";
            }
        }
    }
    fs::create_directories(dir);
    write_text(dir / "sweep.csv", table.str());
    out << table.str();
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"flowpinn: physics-informed networks for steady 2-D incompressible flow"};
    app.require_subcommand(1);

    ConfigFlags train_flags, ablate_flags, eval_flags, sweep_flags;
    std::string train_out, ablate_out, eval_out, sweep_out, export_out, checkpoint_path, export_checkpoint;
    bool ablate = false, no_reference = false;
    std::vector<double> levels{0.01, 0.05, 0.10}, domain{0.0, 2.0, -0.5, 1.5};
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::size_t> grid{101, 101};

    CLI::App* train = app.add_subcommand("train", "train a network and write checkpoint, history and manifest");
    train_flags.attach(*train);
    train->add_flag("--ablate-dnn", ablate, "drop the governing-equation loss (plain data-fitting baseline)");
    train->add_option("--out", train_out, "output directory");

    CLI::App* abl = app.add_subcommand("ablate", "same as train --ablate-dnn");
    ablate_flags.attach(*abl);
    abl->add_option("--out", ablate_out, "output directory");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint against reference fields");
    eval_flags.attach(*evaluate);
    evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    evaluate->add_flag("--no-reference", no_reference, "export predictions only");
    evaluate->add_option("--out", eval_out, "output directory");

    CLI::App* exp = app.add_subcommand("export", "write predictions on a rectangular grid");
    exp->add_option("--checkpoint", export_checkpoint, "checkpoint file")->required();
    exp->add_option("--domain", domain, "x_min x_max y_min y_max (scaled units)")->expected(4);
    exp->add_option("--grid", grid, "nx ny")->expected(2);
    exp->add_option("--out", export_out, "output file")->required();

    CLI::App* sweep = app.add_subcommand("noise-sweep", "train and evaluate at several label-noise levels");
    sweep_flags.attach(*sweep);
    sweep->add_option("--levels", levels, "noise levels")->delimiter(',');
    sweep->add_option("--seeds", seeds, "seeds")->delimiter(',');
    sweep->add_option("--out", sweep_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*train) return cmd_train(train_flags, train_out, ablate, "train", out, err);
        if (*abl) return cmd_train(ablate_flags, ablate_out, true, "ablate", out, err);
        if (*evaluate) return cmd_evaluate(eval_flags, checkpoint_path, no_reference, eval_out, out);
        if (*exp) return cmd_export(export_checkpoint, domain, grid, export_out, out);
        if (*sweep) return cmd_noise_sweep(sweep_flags, levels, seeds, sweep_out, out, err);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const DivergenceError& e) {
        err << "training diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

}  // namespace flowpinn::cli
