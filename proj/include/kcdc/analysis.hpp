#pragma once

#include "kcdc/cdc.hpp"
#include "kcdc/models.hpp"
#include "kcdc/trajectory.hpp"

#include <optional>
#include <span>
#include <vector>

namespace kcdc {

// H(u(t_i)) - H(u(t_0)) for every record.
std::vector<double> invariant_trace(const Trajectory& traj, const InvariantObservable& obs);

// (dt sum_{i=1..J} [H(t_i) - H(0)]^2)^(1/2). The trajectory must be sampled
// at t_i = t_0 + i dt.
double l2_invariant_error(const Trajectory& traj, const InvariantObservable& obs, double dt);

// (dt sum_{i=1..J} |u_i - u_ref(t_i)|^2)^(1/2) with the Euclidean norm.
// Both trajectories must share the grid t_i = t_0 + i dt.
double l2_solution_error(const Trajectory& traj, const Trajectory& ref, double dt);

// log2(err_coarse / err_fine) for errors at step sizes dt and dt/2.
double convergence_order(double err_coarse, double err_fine);

enum class ErrorMetric { Solution, H1, H2 };

struct StudyCell {
    int corrections = 1;        // S
    int nodes = 5;              // n
    std::optional<double> dt0;  // first step size; StudyOptions::dt0 when unset

    friend bool operator==(const StudyCell&, const StudyCell&) = default;
};

struct StudyOptions {
    double t_end = 100.0;
    double dt0 = 0.01;
    double target = 1e-10;          // stop once the stop metric is at or below this
    double saturation_ratio = 1.2;  // or once it shrinks by less than this factor
    int max_halvings = 8;
    double reference_tol = 1e-13;
    ErrorMetric stop_metric = ErrorMetric::Solution;
    unsigned threads = 0;           // 0: default_thread_count()
};

struct ConvergenceRow {
    int corrections = 0;
    int nodes = 0;
    double dt = 0.0;
    double l2_u = 0.0;
    double l2_h1 = 0.0;
    double l2_h2 = 0.0;
    // log2 ratio against the previous row of the same cell; NaN on a cell's first row
    double order_u = 0.0;
    double order_h1 = 0.0;
    double order_h2 = 0.0;
    double wall_s = 0.0;
};

struct CellReport {
    int corrections = 0;
    int nodes = 0;
    double t_end = 0.0;   // horizon actually integrated (largest multiple of dt0 <= T)
    std::vector<ConvergenceRow> rows;
    bool reached_target = false;
    bool saturated = false;

    // Orders between adjacent rows, excluding the final pair when the cell
    // stopped on saturation (that pair measures the round-off floor).
    std::vector<double> orders(ErrorMetric metric) const;
    // Mean of orders(metric); NaN if there are none.
    double mean_order(ErrorMetric metric) const;
};

struct ConvergenceReport {
    std::vector<CellReport> cells;
    std::optional<double> speedup;

    std::vector<ConvergenceRow> rows() const;
};

// Thread cap for study cells: KAHAN_CDC_THREADS if set to a positive
// integer, otherwise the hardware concurrency.
unsigned default_thread_count();

// For each cell, halve dt from dt0 until the stop metric reaches the target
// (never before the second row) or stops improving, recording L2 errors (against a reference_solve
// solution), orders and wall time. Model must carry H1 and H2.
ConvergenceReport convergence_study(const ModelBundle& model, const StateVector& u0, std::span<const StudyCell> cells,
                                    const StudyOptions& opts);

struct SpeedupOptions {
    double t_end = 100.0;
    double reference_tol = 1e-13;
    ErrorMetric metric = ErrorMetric::H1;
    int repeats = 5;             // wall time is the median over this many runs
    int max_cdc_halvings = 8;
    long max_kahan_steps = 400'000'000;
};

struct SpeedupResult {
    double cdc_dt = 0.0;
    double cdc_error = 0.0;
    double cdc_wall_s = 0.0;
    double kahan_dt = 0.0;
    double kahan_error = 0.0;
    double kahan_wall_s = 0.0;

    double ratio() const noexcept { return kahan_wall_s / cdc_wall_s; }
};

// Wall-time ratio of plain Kahan to CDC, each run at a step size that meets
// `target` in the chosen metric. Throws NumericalError if either method
// cannot reach the target within the step limits.
SpeedupResult speedup_bench(const ModelBundle& model, const StateVector& u0, const CdcConfig& cdc_cfg, double target,
                            const SpeedupOptions& opts = {});

} // namespace kcdc
