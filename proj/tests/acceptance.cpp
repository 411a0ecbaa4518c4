// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "kcdc/analysis.hpp"
#include "kcdc/cdc.hpp"
#include "kcdc/integrators.hpp"
#include "kcdc/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace kcdc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body)
{
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_budget = secs < budget_s;
    const bool ok = o.pass && in_budget;
    failures += ok ? 0 : 1;
    std::printf("%s %2d %s: %s [%.2f s, budget %.0f s%s]\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                budget_s, in_budget ? "" : ", exceeded");
    std::fflush(stdout);
}

std::string format(const char* fmt, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

StateVector vec3(double a, double b, double c)
{
    StateVector u(3);
    u << a, b, c;
    return u;
}

const StateVector kLv1U0 = vec3(1.0, 1.9, 0.5);
const StateVector kLv2U0 = vec3(0.3, 0.3, 0.4);

StateVector random_state(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(0.1, 2.0);
    return vec3(d(rng), d(rng), d(rng));
}

struct Drift {
    double h1 = 0.0, h2 = 0.0;
};

Drift max_drift(const ModelBundle& mb, const Trajectory& traj)
{
    Drift d;
    for (double x : invariant_trace(traj, *mb.h1))
        d.h1 = std::max(d.h1, std::abs(x));
    for (double x : invariant_trace(traj, *mb.h2))
        d.h2 = std::max(d.h2, std::abs(x));
    return d;
}

Outcome structure_identities()
{
    std::mt19937_64 rng(1001);
    double worst[2] = {0.0, 0.0};
    const ModelBundle models[] = {build_lv1({}), build_lv2()};
    for (int m = 0; m < 2; ++m)
        for (int s = 0; s < 1000; ++s)
            worst[m] = std::max(worst[m], structure_residuals(models[m], random_state(rng)).max());
    return {worst[0] <= 1e-10 && worst[1] <= 1e-10,
            format("max residual lv1 %.2e, lv2 %.2e (tol 1e-10)", worst[0], worst[1])};
}

Outcome kahan_order()
{
    const ModelBundle mb = build_lv1({});
    const double dts[] = {0.02, 0.01, 0.005};
    double err[3];
    for (int i = 0; i < 3; ++i) {
        const int steps = static_cast<int>(std::lround(10.0 / dts[i]));
        const auto traj = integrate_fixed(mb.system, kLv1U0, dts[i], steps);
        const auto ref = reference_solve(mb.system, kLv1U0, uniform_grid(dts[i], steps), 1e-13);
        err[i] = l2_solution_error(traj, ref, dts[i]);
    }
    const double p1 = convergence_order(err[0], err[1]), p2 = convergence_order(err[1], err[2]);
    const auto in = [](double p) { return p >= 1.8 && p <= 2.2; };
    return {in(p1) && in(p2), format("L2(u) %.3e %.3e %.3e, orders %.3f %.3f (band [1.8, 2.2])", err[0], err[1],
                                     err[2], p1, p2)};
}

Outcome linear_invariant()
{
    const ModelBundle mb = build_lv2();
    const auto traj = integrate_fixed(mb.system, kLv2U0, 0.01, 10000);
    const double d = max_drift(mb, traj).h1;
    return {d <= 1e-12, format("max |H1 - H1(0)| = %.2e (tol 1e-12)", d)};
}

Outcome bounded_oscillation()
{
    const ModelBundle mb = build_lv1({});
    const Drift base = max_drift(mb, integrate_fixed(mb.system, kLv1U0, 0.01, 10000));

    CdcConfig cfg;
    cfg.dt = 0.01;
    cfg.corrections = 1;
    cfg.nodes = 5;
    const Drift cdc = max_drift(mb, cdc_integrate(mb.system, kLv1U0, cfg));

    // Fine plain Kahan: positive throughout and no drift growth from the
    // first half of the run to the second.
    const auto fine = integrate_fixed(mb.system, kLv1U0, 0.001, 100000);
    bool positive = true;
    for (const auto& u : fine.states)
        positive = positive && u.minCoeff() > 0.0;
    const auto tr = invariant_trace(fine, *mb.h2);
    const auto half = tr.begin() + static_cast<std::ptrdiff_t>(tr.size() / 2);
    const auto absmax = [](auto b, auto e) {
        double m = 0.0;
        for (; b != e; ++b)
            m = std::max(m, std::abs(*b));
        return m;
    };
    const double first = absmax(tr.begin(), half), second = absmax(half, tr.end());
    const bool bounded = positive && second <= 2.0 * first;

    const double g1 = base.h1 / cdc.h1, g2 = base.h2 / cdc.h2;
    return {g1 >= 100.0 && g2 >= 100.0 && bounded,
            format("Kahan dt 0.01 max dH1 %.2e dH2 %.2e; CDC max dH1 %.2e dH2 %.2e; gain %.0fx %.0fx (need 100x); "
                   "Kahan dt 0.001 max dH2 %.2e / %.2e over halves, positive %s",
                   base.h1, base.h2, cdc.h1, cdc.h2, g1, g2, first, second, positive ? "yes" : "no")};
}

const StudyCell kTableCells[] = {{1, 5, 0.01}, {2, 7, 0.05}, {3, 9, 0.15}, {4, 11, 0.25}};
const double kTableOrders[] = {4.48, 6.78, 8.53, 11.03};

Outcome table_orders()
{
    const ModelBundle mb = build_lv1({});
    StudyOptions opts;
    const auto rep = convergence_study(mb, kLv1U0, kTableCells, opts);
    opts.stop_metric = ErrorMetric::H1;
    const auto alt = convergence_study(mb, kLv1U0, kTableCells, opts);

    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < rep.cells.size(); ++i) {
        const double p = rep.cells[i].mean_order(ErrorMetric::H1);
        ok = ok && std::abs(p - kTableOrders[i]) <= 0.8;
        detail += format("(%d,%d) %.2f vs %.2f; ", rep.cells[i].corrections, rep.cells[i].nodes, p, kTableOrders[i]);
    }
    detail += "with L2(H1) as stop metric:";
    for (const auto& c : alt.cells)
        detail += format(" %.2f", c.mean_order(ErrorMetric::H1));
    return {ok, detail + " (tol 0.8)"};
}

Outcome order_rule()
{
    const ModelBundle mb = build_lv1({});
    const StudyCell cells[] = {{1, 5, 0.04}, {1, 7, 0.04}, {2, 5, 0.2}, {2, 7, 0.2}};
    StudyOptions opts;
    opts.reference_tol = 1e-14;
    const auto rep = convergence_study(mb, kLv1U0, cells, opts);
    bool ok = true;
    std::string detail;
    for (const auto& c : rep.cells) {
        const double p = c.mean_order(ErrorMetric::Solution);
        const double need = std::min(2 * c.corrections + 2, c.nodes - 1) - 0.5;
        ok = ok && p >= need;
        detail += format("(%d,%d) %.2f >= %.1f; ", c.corrections, c.nodes, p, need);
    }
    return {ok, detail + "mean L2(u) order before saturation"};
}

Outcome speedup()
{
    const ModelBundle mb = build_lv1({});
    CdcConfig cfg;
    cfg.dt = 0.01;
    cfg.corrections = 1;
    SpeedupOptions opts;
    opts.repeats = 3;
    const auto r = speedup_bench(mb, kLv1U0, cfg, 1e-10, opts);
    return {r.ratio() > 1.0,
            format("ratio %.1f; CDC dt %.4g L2(H1) %.2e %.3f s; Kahan dt %.3g L2(H1) %.2e %.3f s", r.ratio(), r.cdc_dt,
                   r.cdc_error, r.cdc_wall_s, r.kahan_dt, r.kahan_error, r.kahan_wall_s)};
}

Outcome oracle_equivalence()
{
    std::mt19937_64 rng(1008);
    std::uniform_real_distribution<double> dt(-0.1, 0.1);
    const ModelBundle models[] = {build_lv1({}), build_lv2()};
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto& mb = models[k % 2];
        const StateVector u = random_state(rng);
        double h = dt(rng);
        if (h == 0.0)
            h = 0.05;
        worst = std::max(worst, (kahan_step(mb.system, u, h) - kahan_step_rk_form(mb.system, u, h)).lpNorm<Eigen::Infinity>());
    }
    return {worst <= 1e-12, format("max |linear - RK form| = %.2e over 100 pairs (tol 1e-12)", worst)};
}

Outcome interpolation()
{
    std::mt19937_64 rng(1009);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    double worst_val = 0.0, worst_der = 0.0;
    for (int n = 2; n <= 11; ++n)
        for (int trial = 0; trial < 10; ++trial) {
            const double a = trial == 0 ? 0.0 : d(rng);
            const NodeGrid grid(a, a + 0.25, n);
            std::vector<double> coef(static_cast<std::size_t>(n));
            for (auto& c : coef)
                c = d(rng);
            const auto p = [&](double t, bool deriv) {
                const double s = t - a;
                double v = 0.0;
                for (int k = n - 1; k >= (deriv ? 1 : 0); --k)
                    v = v * s + (deriv ? k : 1) * coef[static_cast<std::size_t>(k)];
                return v;
            };
            NodeSolution ns{grid, {}};
            for (double t : grid.nodes())
                ns.values.push_back(StateVector::Constant(1, p(t, false)));
            for (int k = 0; k <= 20; ++k) {
                const double t = a + 0.25 * k / 20.0 + (k % 2 ? 1e-3 : 0.0);
                if (t > a + 0.25)
                    continue;
                worst_val = std::max(worst_val, std::abs(interp_eval(ns, t)[0] - p(t, false)));
                worst_der = std::max(worst_der, std::abs(interp_deriv(ns, t)[0] - p(t, true)));
            }
            for (int i = 0; i < n; ++i) {
                double row = 0.0;
                for (int j = 0; j < n; ++j)
                    row += grid.diff_matrix()(i, j) * ns.values[static_cast<std::size_t>(j)][0];
                worst_der = std::max(worst_der, std::abs(row - p(grid.nodes()[static_cast<std::size_t>(i)], true)));
            }
        }
    return {worst_val <= 1e-12 && worst_der <= 1e-12,
            format("max value error %.2e, derivative error %.2e (tol 1e-12)", worst_val, worst_der)};
}

Outcome time_reversal()
{
    std::mt19937_64 rng(1010);
    const ModelBundle models[] = {build_lv1({}), build_lv2()};
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto& sys = models[k % 2].system;
        const StateVector u = random_state(rng);
        const StateVector back = kahan_step(sys, kahan_step(sys, u, 0.01), -0.01);
        worst = std::max(worst, (back - u).lpNorm<Eigen::Infinity>());
    }
    return {worst <= 1e-12, format("max |back - start| = %.2e over 100 states (tol 1e-12)", worst)};
}

} // namespace

int main()
{
    std::printf("threads for study cells: %u\n", default_thread_count());
    criterion(1, "structure identities", 1, structure_identities);
    criterion(2, "Kahan base order", 5, kahan_order);
    criterion(3, "linear invariant exactness", 1, linear_invariant);
    criterion(4, "bounded Hamiltonian oscillation", 30, bounded_oscillation);
    criterion(5, "order matrix", 300, table_orders);
    criterion(6, "order rule", 120, order_rule);
    criterion(7, "speedup direction", 120, speedup);
    criterion(8, "oracle equivalence", 1, oracle_equivalence);
    criterion(9, "interpolation", 1, interpolation);
    criterion(10, "time reversal", 1, time_reversal);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
