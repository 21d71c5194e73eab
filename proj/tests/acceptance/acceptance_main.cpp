// SPDX-License-Identifier: Apache-2.0
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Arguments select a subset by number.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowpinn/autodiff.hpp"
#include "flowpinn/data.hpp"
#include "flowpinn/jet_network.hpp"
#include "flowpinn/metrics.hpp"
#include "flowpinn/physics.hpp"
#include "flowpinn/run_config.hpp"
#include "flowpinn/training.hpp"

#ifndef FLOWPINN_UNIT_TEST_BINARY
#define FLOWPINN_UNIT_TEST_BINARY ""
#endif

using namespace flowpinn;

namespace {

// ---------------------------------------------------------------------------
// Pinned tolerances and budgets
// ---------------------------------------------------------------------------

constexpr double kScheduleRelTol = 1e-12;
constexpr double kWeightRelTol = 1e-12;
constexpr double kFirstOrderRelTol = 1e-6;
constexpr double kSecondOrderRelTol = 1e-4;
constexpr double kResidualAbsTol = 1e-8;
constexpr double kForwardLossTol = 1e-3;
constexpr double kForwardVelocityTol = 0.05;
constexpr double kInverseLossTol = 1e-2;
constexpr double kInversePressureTol = 0.05;
constexpr double kAblationFactor = 5.0;
constexpr double kNoiseSpreadTol = 0.05;

constexpr double kForwardMinutes = 30.0;
constexpr double kInverseMinutes = 45.0;

// Desk-scale network and epoch budget for the training criteria.
const char* const kTrainLayers = "2,20,20,20,3";
constexpr std::size_t kForwardCycles = 6;
constexpr std::size_t kInverseCycles = 7;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

std::string pct(double v) { return fmt(100.0 * v) + "%"; }

// ---------------------------------------------------------------------------
// 1. Schedule
// ---------------------------------------------------------------------------

/// Closed form, counted from the epoch index alone.
double closed_form_lr(std::size_t epoch, double lo, double hi, bool& at_start, bool& at_end) {
    at_start = at_end = false;
    if (epoch < 10) return lo + (hi - lo) * static_cast<double>(epoch) / 10.0;
    std::size_t e = epoch - 10;
    for (std::size_t i = 1;; ++i) {
        const std::size_t T = 100 * (std::size_t{1} << i);
        if (e <= T) {
            at_start = e == 0;
            at_end = e == T;
            return lo + 0.5 * (hi - lo) * (1.0 + std::cos(std::numbers::pi * static_cast<double>(e) / T));
        }
        e -= T + 1;
    }
}

Verdict criterion_schedule() {
    const auto t0 = Clock::now();
    ScheduleConfig cfg;
    cfg.lr_min = 1e-7;
    cfg.lr_max = 1e-3;
    ScheduleState s;
    s.config = cfg;
    double worst = 0.0;
    std::size_t starts = 0, ends = 0;
    bool exact_ends = true;
    for (std::size_t e = 0; e <= 10000; ++e) {
        bool at_start = false, at_end = false;
        const double ref = closed_form_lr(e, cfg.lr_min, cfg.lr_max, at_start, at_end);
        const double lr = schedule_lr(s);
        worst = std::max(worst, std::abs(lr - ref) / ref);
        if (at_start) {
            ++starts;
            exact_ends = exact_ends && std::abs(lr - cfg.lr_max) <= kScheduleRelTol * cfg.lr_max;
        }
        if (at_end) {
            ++ends;
            exact_ends = exact_ends && std::abs(lr - cfg.lr_min) <= kScheduleRelTol * cfg.lr_min;
        }
        advance(s);
    }
    const double t = seconds_since(t0);
    return {worst <= kScheduleRelTol && exact_ends && starts > 0 && ends > 0 && t < 1.0,
            "max rel err " + fmt(worst) + ", " + std::to_string(starts) + " cycle starts, " + std::to_string(ends) +
                " cycle ends, " + fmt(t) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Adaptive weights
// ---------------------------------------------------------------------------

Verdict criterion_weights() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> N;
    const std::size_t n = 5000;
    double worst = 0.0;
    bool w1_fixed = true;
    for (double k : {0.1, 1.0, 10.0, 1000.0}) {
        std::vector<double> ge(n), gf(n), gb(n);
        for (std::size_t i = 0; i < n; ++i) {
            ge[i] = N(rng);
            gf[i] = N(rng);
            gb[i] = N(rng);
        }
        // Rescale grad_Lf so the ratio of mean magnitudes is k, summed in long double.
        long double se = 0.0L, sf = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            se += std::fabs(static_cast<long double>(ge[i]));
            sf += std::fabs(static_cast<long double>(gf[i]));
        }
        const long double scale = se / (sf * static_cast<long double>(k));
        for (auto& g : gf) g = static_cast<double>(g * scale);
        long double sf2 = 0.0L;
        for (double g : gf) sf2 += std::fabs(static_cast<long double>(g));
        const double target = static_cast<double>(se / sf2);

        WeightState prev;
        prev.alpha = 1.0;
        prev.w2 = 123.0;
        const WeightState next = adaptive_weights(ge, gf, gb, prev);
        worst = std::max(worst, std::abs(next.w2 - target) / target);
        worst = std::max(worst, std::abs(balance_ratio(ge, gf) - target) / target);
        w1_fixed = w1_fixed && next.w1 == 1.0;
        prev.alpha = 0.9;
        w1_fixed = w1_fixed && adaptive_weights(ge, gf, gb, prev).w1 == 1.0;
    }
    const double t = seconds_since(t0);
    return {worst <= kWeightRelTol && w1_fixed && t < 1.0,
            "max rel err of w2 " + fmt(worst) + ", w1 " + (w1_fixed ? "always 1" : "changed") + ", " + fmt(t) + " s"};
}

// ---------------------------------------------------------------------------
// 3. Input derivatives of the default deep network
// ---------------------------------------------------------------------------

struct Family {
    std::string name;
    bool second;
    std::vector<double> ad, fd;
};

/// |a - b| relative to the family's RMS magnitude where |b| is below it, so
/// derivatives that happen to pass through zero do not blow up the ratio.
double family_error(const Family& f) {
    double rms = 0.0;
    for (double v : f.fd) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(f.fd.size()));
    double worst = 0.0;
    for (std::size_t i = 0; i < f.fd.size(); ++i) {
        worst = std::max(worst, std::abs(f.ad[i] - f.fd[i]) / std::max(std::abs(f.fd[i]), rms));
    }
    return worst;
}

Verdict criterion_autodiff() {
    const auto t0 = Clock::now();
    const ParamVector params = init_glorot(default_layer_sizes(), 31);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(0.0, 2.0), uy(-0.5, 1.5);
    std::vector<double> xs(50), ys(50);
    for (std::size_t i = 0; i < 50; ++i) {
        xs[i] = ux(rng);
        ys[i] = uy(rng);
    }

    ad::Graph g;
    const BoundParams bound = bind(g, params, ParamBinding::Constant);
    ad::Expr x = g.variable(xs[0]), y = g.variable(ys[0]);
    const FlowExpr flow = forward(bound, x, y);
    const std::array<ad::Expr, 3> out{flow.u, flow.v, flow.p};
    std::array<std::array<ad::Expr, 5>, 3> d;
    for (int k = 0; k < 3; ++k) {
        const ad::Expr dx = diff(out[k], x), dy = diff(out[k], y);
        d[k] = {dx, dy, diff(dx, x), diff(dy, y), diff(dx, y)};
    }

    const char* names[] = {"dx", "dy", "dxx", "dyy", "dxy"};
    std::vector<Family> graph_fam, jet_fam;
    for (int k = 0; k < 3; ++k) {
        for (int j = 0; j < 5; ++j) {
            graph_fam.push_back({std::string("uvp").substr(k, 1) + names[j], j >= 2, {}, {}});
            if (j < 4) jet_fam.push_back({std::string("uvp").substr(k, 1) + names[j], j >= 2, {}, {}});
        }
    }

    const double h1 = 1e-5, h2 = 1e-4;
    const JetPass jets(params, xs, ys, JetOrder::Second);
    const Jets& J = jets.outputs();
    for (std::size_t i = 0; i < 50; ++i) {
        g.set_value(x, xs[i]);
        g.set_value(y, ys[i]);
        g.evaluate();
        const double x0 = xs[i], y0 = ys[i];
        const auto f = [&](double a, double b) { return predict(params, a, b); };
        const auto c = f(x0, y0);
        const auto xp = f(x0 + h1, y0), xm = f(x0 - h1, y0), yp = f(x0, y0 + h1), ym = f(x0, y0 - h1);
        const auto Xp = f(x0 + h2, y0), Xm = f(x0 - h2, y0), Yp = f(x0, y0 + h2), Ym = f(x0, y0 - h2);
        const auto pp = f(x0 + h2, y0 + h2), pm = f(x0 + h2, y0 - h2), mp = f(x0 - h2, y0 + h2),
                   mm = f(x0 - h2, y0 - h2);
        for (int k = 0; k < 3; ++k) {
            const double fd[5] = {
                (xp[k] - xm[k]) / (2 * h1),
                (yp[k] - ym[k]) / (2 * h1),
                (Xp[k] - 2 * c[k] + Xm[k]) / (h2 * h2),
                (Yp[k] - 2 * c[k] + Ym[k]) / (h2 * h2),
                (pp[k] - pm[k] - mp[k] + mm[k]) / (4 * h2 * h2),
            };
            const auto col = static_cast<Eigen::Index>(i);
            const double jet[4] = {J.dx(k, col), J.dy(k, col), J.dxx(k, col), J.dyy(k, col)};
            for (int j = 0; j < 5; ++j) {
                graph_fam[k * 5 + j].ad.push_back(d[k][j].value());
                graph_fam[k * 5 + j].fd.push_back(fd[j]);
                if (j < 4) {
                    jet_fam[k * 4 + j].ad.push_back(jet[j]);
                    jet_fam[k * 4 + j].fd.push_back(fd[j]);
                }
            }
        }
    }

    double first = 0.0, second = 0.0;
    for (const auto* fams : {&graph_fam, &jet_fam}) {
        for (const Family& fam : *fams) {
            (fam.second ? second : first) = std::max(fam.second ? second : first, family_error(fam));
        }
    }
    const double t = seconds_since(t0);
    return {first <= kFirstOrderRelTol && second <= kSecondOrderRelTol && t < 60.0,
            "graph and jet routes, 50 points: first-order rel err " + fmt(first) + ", second-order " + fmt(second) +
                ", " + fmt(t) + " s"};
}

// ---------------------------------------------------------------------------
// 4. Residual of the analytic solution
// ---------------------------------------------------------------------------

Verdict criterion_residual_oracle() {
    const auto t0 = Clock::now();
    const double re = 40.0;
    const FluidConstants fluid{1.0, 1.0 / re};
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> ux(0.0, 2.0), uy(-0.5, 1.5);
    double graph_worst = 0.0;
    Jets jets;
    for (Eigen::MatrixXd* m : {&jets.value, &jets.dx, &jets.dy, &jets.dxx, &jets.dyy}) m->resize(3, 100);
    for (int i = 0; i < 100; ++i) {
        const double x0 = ux(rng), y0 = uy(rng);
        ad::Graph g;
        ad::Expr x = g.variable(x0), y = g.variable(y0);
        const auto f = kovasznay(x, y, re);
        const ResidualTriple r = ns_residual({f[0], f[1], f[2]}, x, y, g.constant(fluid.viscosity), fluid);
        for (const ad::Expr& e : {r.mass, r.xmom, r.ymom}) graph_worst = std::max(graph_worst, std::abs(e.value()));

        const auto j = kovasznay_jet(x0, y0, re);
        for (int k = 0; k < 3; ++k) {
            jets.value(k, i) = j[0][k];
            jets.dx(k, i) = j[1][k];
            jets.dy(k, i) = j[2][k];
            jets.dxx(k, i) = j[3][k];
            jets.dyy(k, i) = j[4][k];
        }
    }
    const ResidualArrays batch = ns_residual(jets, Eigen::ArrayXd::Constant(100, fluid.viscosity), fluid);
    const double jet_worst =
        std::max({batch.mass.abs().maxCoeff(), batch.xmom.abs().maxCoeff(), batch.ymom.abs().maxCoeff()});
    const double t = seconds_since(t0);
    return {graph_worst < kResidualAbsTol && jet_worst < kResidualAbsTol && t < 10.0,
            "max |residual| graph " + fmt(graph_worst) + ", jet " + fmt(jet_worst) + ", " + fmt(t) + " s"};
}

// ---------------------------------------------------------------------------
// Training runs shared by criteria 5 to 8 and 10
// ---------------------------------------------------------------------------

struct RunOutcome {
    TrainResult result;
    std::string history;
    double velocity_l2 = 0.0;
    double pressure_l2 = 0.0;
    double minutes = 0.0;
    std::string failure;
};

RunConfig training_config(ProblemMode mode, std::size_t cycles) {
    RunConfig c;
    apply_setting(c, "problem", "kovasznay");
    apply_setting(c, "mode", mode == ProblemMode::Forward ? "forward" : "inverse");
    apply_setting(c, "layers", kTrainLayers);
    apply_setting(c, "cycles", std::to_string(cycles));
    return c;
}

RunOutcome run_training(const RunConfig& c, const std::string& label) {
    RunOutcome out;
    const auto t0 = Clock::now();
    try {
        RunSetup setup = prepare_run(c);
        setup.train.progress_every = 1000;
        setup.train.progress = [&](const std::string& line) { std::cerr << "[" << label << "] " << line << "\n"; };
        out.result = train(setup.problem, setup.train);
    } catch (const std::exception& e) {
        out.failure = e.what();
        out.minutes = seconds_since(t0) / 60.0;
        return out;
    }
    out.minutes = seconds_since(t0) / 60.0;
    out.history = format_history(out.result.history);

    const PointSet ref = reference_field(c);
    const Eigen::MatrixXd pred = predict(out.result.params, ref.x, ref.y);
    std::vector<double> pu(ref.size()), pv(ref.size()), pp(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        pu[i] = pred(0, col);
        pv[i] = pred(1, col);
        pp[i] = pred(2, col);
    }
    const std::span<const double> vel_pred[] = {pu, pv};
    const std::span<const double> vel_ref[] = {ref.label[0], ref.label[1]};
    out.velocity_l2 = relative_l2(vel_pred, vel_ref);
    const std::span<const double> p_pred[] = {pp};
    const std::span<const double> p_ref[] = {ref.label[2]};
    out.pressure_l2 = relative_l2(p_pred, p_ref);
    std::cerr << "[" << label << "] done: total " << out.result.final_loss.total << ", velocity rel L2 "
              << out.velocity_l2 << ", pressure rel L2 " << out.pressure_l2 << ", " << out.minutes << " min\n";
    return out;
}

std::string describe(const RunOutcome& r) {
    if (!r.failure.empty()) return "run failed: " + r.failure;
    return "total loss " + fmt(r.result.final_loss.total) + ", velocity rel L2 " + pct(r.velocity_l2) +
           ", pressure rel L2 " + pct(r.pressure_l2) + ", " + fmt(r.minutes) + " min";
}

struct Runs {
    std::optional<RunOutcome> forward, inverse;

    const RunOutcome& get_forward() {
        if (!forward) forward = run_training(training_config(ProblemMode::Forward, kForwardCycles), "forward");
        return *forward;
    }
    const RunOutcome& get_inverse() {
        if (!inverse) inverse = run_training(training_config(ProblemMode::Inverse, kInverseCycles), "inverse");
        return *inverse;
    }
};

// ---------------------------------------------------------------------------
// 5 to 8, 10
// ---------------------------------------------------------------------------

Verdict criterion_forward(Runs& runs) {
    const RunOutcome& r = runs.get_forward();
    const bool ok = r.failure.empty() && r.result.final_loss.total < kForwardLossTol &&
                    r.velocity_l2 < kForwardVelocityTol && r.minutes <= kForwardMinutes;
    return {ok, describe(r)};
}

Verdict criterion_inverse(Runs& runs) {
    const RunOutcome& r = runs.get_inverse();
    const bool ok = r.failure.empty() && r.result.final_loss.total < kInverseLossTol &&
                    r.pressure_l2 < kInversePressureTol && r.minutes <= kInverseMinutes;
    return {ok, describe(r)};
}

Verdict criterion_ablation(Runs& runs) {
    const RunOutcome& pinn = runs.get_inverse();
    RunConfig c = training_config(ProblemMode::Inverse, kInverseCycles);
    c.ablate_dnn = true;
    const RunOutcome dnn = run_training(c, "ablation");
    if (!pinn.failure.empty() || !dnn.failure.empty()) return {false, "PINN: " + describe(pinn) + "; DNN: " + describe(dnn)};
    const double factor = dnn.pressure_l2 / pinn.pressure_l2;
    return {factor >= kAblationFactor && dnn.minutes <= kInverseMinutes,
            "pressure rel L2 DNN " + pct(dnn.pressure_l2) + " vs PINN " + pct(pinn.pressure_l2) + ", factor " +
                fmt(factor) + ", DNN run " + fmt(dnn.minutes) + " min"};
}

Verdict criterion_noise() {
    std::vector<double> errs;
    double minutes = 0.0;
    std::string detail;
    for (double level : {0.01, 0.05, 0.10}) {
        RunConfig c = training_config(ProblemMode::Inverse, kInverseCycles);
        c.noise_level = level;
        const RunOutcome r = run_training(c, "noise " + fmt(level));
        if (!r.failure.empty()) return {false, "level " + fmt(level) + ": " + r.failure};
        errs.push_back(r.velocity_l2);
        minutes += r.minutes;
        detail += (detail.empty() ? "" : ", ") + pct(level) + " -> " + pct(r.velocity_l2);
    }
    const double spread = *std::max_element(errs.begin(), errs.end()) - *std::min_element(errs.begin(), errs.end());
    return {spread < kNoiseSpreadTol && minutes <= 3.0 * kInverseMinutes,
            "velocity rel L2 " + detail + "; spread " + fmt(100.0 * spread) + " pp, " + fmt(minutes) + " min"};
}

Verdict criterion_reproducible(Runs& runs) {
    const RunOutcome& a = runs.get_forward();
    const RunOutcome b = run_training(training_config(ProblemMode::Forward, kForwardCycles), "forward repeat");
    if (!a.failure.empty() || !b.failure.empty()) return {false, "run failed"};
    const bool same = a.history == b.history && a.result.params.flatten() == b.result.params.flatten();
    return {same, std::string(same ? "histories and parameters bit-identical" : "histories differ") + " over " +
                      std::to_string(a.result.history.size()) + " epochs"};
}

// ---------------------------------------------------------------------------
// 9. Example rows for physics, losses and metrics, run from the unit suite
// ---------------------------------------------------------------------------

Verdict criterion_unit_rows() {
    const auto t0 = Clock::now();
    const std::string binary = FLOWPINN_UNIT_TEST_BINARY;
    if (binary.empty()) return {false, "unit test binary not configured"};
    const std::string filter =
        "Physics.*:PhysicsProperties.*:Mse.*:ResidualLoss.*:LabeledLoss.*:BoundaryLoss.*:TotalLoss.*:LossRoutes.*:"
        "FieldMetrics.*:PressureCoefficient.*:LineProfile.*:Export.*:Report.*";
    const std::string cmd = "\"" + binary + "\" --gtest_brief=1 --gtest_filter='" + filter + "' > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const double t = seconds_since(t0);
    return {status == 0 && t < 60.0, std::string(status == 0 ? "all rows pass" : "failures in unit rows") + ", " +
                                         fmt(t) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    const auto want = [&](int n) { return wanted.empty() || wanted.count(n) > 0; };

    Runs runs;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"scheduler exactness", criterion_schedule},
        {"adaptive-weight identities", criterion_weights},
        {"autodiff vs finite differences", criterion_autodiff},
        {"Kovasznay residual oracle", criterion_residual_oracle},
        {"forward convergence", [&] { return criterion_forward(runs); }},
        {"inverse pressure reconstruction", [&] { return criterion_inverse(runs); }},
        {"PINN vs DNN ablation", [&] { return criterion_ablation(runs); }},
        {"noise robustness", criterion_noise},
        {"loss-term unit rows", criterion_unit_rows},
        {"reproducibility", [&] { return criterion_reproducible(runs); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i + 1);
        if (!want(n)) continue;
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << criteria[i].first << "): " << v.detail
                  << std::endl;
    }
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
