#include "kcdc/analysis.hpp"

#include "kcdc/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace kcdc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_spacing(const std::vector<double>& times, double dt, const char* who)
{
    if (!(dt > 0.0))
        throw ValidationError(std::string(who) + ": dt must be positive");
    if (times.empty())
        throw ValidationError(std::string(who) + ": empty trajectory");
    const double t0 = times.front();
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double expected = t0 + static_cast<double>(i) * dt;
        if (std::abs(times[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
            std::ostringstream os;
            os << who << ": record " << i << " at t = " << times[i] << " is not on the grid of spacing " << dt;
            throw ValidationError(os.str());
        }
    }
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double pick(const ConvergenceRow& row, ErrorMetric metric)
{
    switch (metric) {
    case ErrorMetric::H1: return row.l2_h1;
    case ErrorMetric::H2: return row.l2_h2;
    case ErrorMetric::Solution: break;
    }
    return row.l2_u;
}

double pick_order(const ConvergenceRow& row, ErrorMetric metric)
{
    switch (metric) {
    case ErrorMetric::H1: return row.order_h1;
    case ErrorMetric::H2: return row.order_h2;
    case ErrorMetric::Solution: break;
    }
    return row.order_u;
}

// Order between two error levels; NaN when either has reached exact zero.
double safe_order(double coarse, double fine)
{
    if (!(coarse > 0.0) || !(fine > 0.0))
        return kNaN;
    return convergence_order(coarse, fine);
}

[[noreturn]] void rethrow_annotated(const std::string& context)
{
    try {
        throw;
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    } catch (const Error& e) {
        throw NumericalError(context + ": " + e.what());
    }
}

CellReport run_cell(const ModelBundle& model, const StateVector& u0, const StudyCell& cell, const StudyOptions& opts)
{
    const double dt0 = cell.dt0.value_or(opts.dt0);
    if (!(dt0 > 0.0) || dt0 > opts.t_end)
        throw ValidationError("convergence_study: dt0 must lie in (0, t_end]");

    CellReport report;
    report.corrections = cell.corrections;
    report.nodes = cell.nodes;
    // Halving keeps the horizon an integer multiple of every dt in the sequence.
    report.t_end = dt0 * std::floor(opts.t_end / dt0 + 1e-9);

    double dt = dt0;
    for (int k = 0; k <= opts.max_halvings; ++k, dt *= 0.5) {
        CdcConfig cfg;
        cfg.dt = dt;
        cfg.t_end = report.t_end;
        cfg.corrections = cell.corrections;
        cfg.nodes = cell.nodes;

        const auto start = std::chrono::steady_clock::now();
        const Trajectory traj = cdc_integrate(model.system, u0, cfg);
        const double wall = seconds_since(start);
        const Trajectory ref = reference_solve(model.system, u0, traj.times, opts.reference_tol);

        ConvergenceRow row;
        row.corrections = cell.corrections;
        row.nodes = cell.nodes;
        row.dt = dt;
        row.l2_u = l2_solution_error(traj, ref, dt);
        row.l2_h1 = l2_invariant_error(traj, *model.h1, dt);
        row.l2_h2 = l2_invariant_error(traj, *model.h2, dt);
        row.wall_s = wall;
        if (report.rows.empty()) {
            row.order_u = row.order_h1 = row.order_h2 = kNaN;
        } else {
            const auto& prev = report.rows.back();
            row.order_u = safe_order(prev.l2_u, row.l2_u);
            row.order_h1 = safe_order(prev.l2_h1, row.l2_h1);
            row.order_h2 = safe_order(prev.l2_h2, row.l2_h2);
        }
        report.rows.push_back(row);

        const double err = pick(row, opts.stop_metric);
        // At least two rows, so every cell yields an order.
        if (err <= opts.target && report.rows.size() >= 2) {
            report.reached_target = true;
            break;
        }
        if (report.rows.size() >= 2 && pick(report.rows[report.rows.size() - 2], opts.stop_metric) <
                                           opts.saturation_ratio * err) {
            report.saturated = true;
            break;
        }
    }
    return report;
}

// Running L2 error over a uniformly recorded run, skipping t = 0. The
// solution metric samples a ReferenceSolver alongside the run.
class StreamingError {
public:
    StreamingError(const ModelBundle& model, const StateVector& u0, ErrorMetric metric, double t_end, double tol)
        : model_(model), metric_(metric)
    {
        switch (metric) {
        case ErrorMetric::H1: h0_ = eval_invariant(*model.h1, u0); break;
        case ErrorMetric::H2: h0_ = eval_invariant(*model.h2, u0); break;
        case ErrorMetric::Solution: ref_.emplace(model.system, u0, 0.0, t_end, tol); break;
        }
    }

    void operator()(double t, const StateVector& u)
    {
        if (t == 0.0)
            return;
        switch (metric_) {
        case ErrorMetric::H1: sum_ += sq(eval_invariant(*model_.h1, u) - h0_); break;
        case ErrorMetric::H2: sum_ += sq(eval_invariant(*model_.h2, u) - h0_); break;
        case ErrorMetric::Solution: sum_ += (u - ref_->at(t)).squaredNorm(); break;
        }
    }

    double value(double dt) const { return std::sqrt(dt * sum_); }

private:
    static double sq(double x) { return x * x; }

    const ModelBundle& model_;
    ErrorMetric metric_;
    double h0_ = 0.0;
    std::optional<ReferenceSolver> ref_;
    double sum_ = 0.0;
};

template <class F>
double median_wall_time(int repeats, F&& run)
{
    std::vector<double> times;
    for (int r = 0; r < std::max(1, repeats); ++r) {
        const auto start = std::chrono::steady_clock::now();
        run();
        times.push_back(seconds_since(start));
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

} // namespace

std::vector<double> invariant_trace(const Trajectory& traj, const InvariantObservable& obs)
{
    std::vector<double> out;
    if (traj.empty())
        return out;
    out.reserve(traj.size());
    const double h0 = eval_invariant(obs, traj.states.front());
    for (const auto& u : traj.states)
        out.push_back(eval_invariant(obs, u) - h0);
    out.front() = 0.0;
    return out;
}

double l2_invariant_error(const Trajectory& traj, const InvariantObservable& obs, double dt)
{
    require_spacing(traj.times, dt, "l2_invariant_error");
    const auto drift = invariant_trace(traj, obs);
    double sum = 0.0;
    for (std::size_t i = 1; i < drift.size(); ++i)
        sum += drift[i] * drift[i];
    return std::sqrt(dt * sum);
}

double l2_solution_error(const Trajectory& traj, const Trajectory& ref, double dt)
{
    require_spacing(traj.times, dt, "l2_solution_error");
    if (ref.size() != traj.size())
        throw ValidationError("l2_solution_error: trajectories have different lengths");
    for (std::size_t i = 0; i < traj.size(); ++i)
        if (std::abs(traj.times[i] - ref.times[i]) > 1e-9 * std::max(1.0, std::abs(traj.times[i])))
            throw ValidationError("l2_solution_error: time grids differ at record " + std::to_string(i));
    double sum = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (traj.states[i].size() != ref.states[i].size())
            throw ValidationError("l2_solution_error: state dimension mismatch");
        sum += (traj.states[i] - ref.states[i]).squaredNorm();
    }
    return std::sqrt(dt * sum);
}

double convergence_order(double err_coarse, double err_fine)
{
    if (!(err_coarse > 0.0) || !(err_fine > 0.0))
        throw ValidationError("convergence_order: errors must be positive");
    return std::log2(err_coarse / err_fine);
}

std::vector<double> CellReport::orders(ErrorMetric metric) const
{
    std::vector<double> out;
    std::size_t last = rows.size();
    if (saturated && last > 0)
        --last;
    for (std::size_t i = 1; i < last; ++i) {
        const double p = pick_order(rows[i], metric);
        if (std::isfinite(p))
            out.push_back(p);
    }
    return out;
}

double CellReport::mean_order(ErrorMetric metric) const
{
    const auto o = orders(metric);
    if (o.empty())
        return kNaN;
    return std::accumulate(o.begin(), o.end(), 0.0) / static_cast<double>(o.size());
}

std::vector<ConvergenceRow> ConvergenceReport::rows() const
{
    std::vector<ConvergenceRow> out;
    for (const auto& c : cells)
        out.insert(out.end(), c.rows.begin(), c.rows.end());
    return out;
}

unsigned default_thread_count()
{
    if (const char* env = std::getenv("KAHAN_CDC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

ConvergenceReport convergence_study(const ModelBundle& model, const StateVector& u0, std::span<const StudyCell> cells,
                                    const StudyOptions& opts)
{
    if (cells.empty())
        throw ValidationError("convergence_study: empty study grid");
    if (!model.has_invariants())
        throw ValidationError("convergence_study: model '" + model.name + "' has no invariants");
    if (!(opts.target > 0.0) || !(opts.saturation_ratio > 1.0) || opts.max_halvings < 0)
        throw ValidationError("convergence_study: invalid options");

    ConvergenceReport report;
    report.cells.resize(cells.size());
    std::vector<std::exception_ptr> failures(cells.size());

    // Cells are independent; each one's dt loop is sequential.
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                try {
                    report.cells[i] = run_cell(model, u0, cells[i], opts);
                } catch (const Error&) {
                    std::ostringstream os;
                    os << "convergence_study: cell (S=" << cells[i].corrections << ", n=" << cells[i].nodes << ")";
                    rethrow_annotated(os.str());
                }
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::min<std::size_t>(opts.threads ? opts.threads : default_thread_count(), cells.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    for (const auto& f : failures)
        if (f)
            std::rethrow_exception(f);
    return report;
}

SpeedupResult speedup_bench(const ModelBundle& model, const StateVector& u0, const CdcConfig& cdc_cfg, double target,
                            const SpeedupOptions& opts)
{
    if (!(target > 0.0))
        throw ValidationError("speedup_bench: target must be positive");
    if (opts.metric != ErrorMetric::Solution && !model.has_invariants())
        throw ValidationError("speedup_bench: model '" + model.name + "' has no invariants");
    if (!(opts.t_end > 0.0))
        throw ValidationError("speedup_bench: t_end must be positive");

    const double t_end = opts.t_end;
    const auto ignore = [](double, const StateVector&) {};
    SpeedupResult result;

    // CDC: halve from the configured dt until the target is met.
    CdcConfig cfg = cdc_cfg;
    cfg.t_end = t_end;
    cfg.store_nodes = false;
    for (int k = 0;; ++k) {
        StreamingError acc(model, u0, opts.metric, t_end, opts.reference_tol);
        cdc_integrate(model.system, u0, cfg, std::ref(acc));
        const double err = acc.value(cfg.dt);
        if (err <= target) {
            result.cdc_dt = cfg.dt;
            result.cdc_error = err;
            break;
        }
        if (k == opts.max_cdc_halvings) {
            std::ostringstream os;
            os << "speedup_bench: CDC did not reach " << target << " (error " << err << " at dt = " << cfg.dt << ")";
            throw NumericalError(os.str());
        }
        cfg.dt *= 0.5;
    }
    result.cdc_wall_s = median_wall_time(opts.repeats, [&] { cdc_integrate(model.system, u0, cfg, ignore); });

    // Kahan is second order: grow the step count by the predicted factor
    // until the target is met.
    long steps = std::max(1L, std::lround(t_end / cdc_cfg.dt));
    for (;;) {
        if (steps > opts.max_kahan_steps) {
            std::ostringstream os;
            os << "speedup_bench: plain Kahan needs more than " << opts.max_kahan_steps << " steps to reach "
               << target;
            throw NumericalError(os.str());
        }
        const double dt = t_end / static_cast<double>(steps);
        StreamingError acc(model, u0, opts.metric, t_end, opts.reference_tol);
        integrate_fixed(model.system, u0, dt, steps, std::ref(acc));
        const double err = acc.value(dt);
        if (err <= target) {
            result.kahan_dt = dt;
            result.kahan_error = err;
            break;
        }
        const double factor = std::clamp(1.02 * std::sqrt(err / target), 1.05, 64.0);
        steps = static_cast<long>(std::ceil(static_cast<double>(steps) * factor));
    }
    result.kahan_wall_s =
        median_wall_time(opts.repeats, [&] { integrate_fixed(model.system, u0, result.kahan_dt, steps, ignore); });
    return result;
}

} // namespace kcdc
