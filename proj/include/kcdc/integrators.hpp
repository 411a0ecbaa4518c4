#pragma once

#include "kcdc/quadratic.hpp"
#include "kcdc/trajectory.hpp"

#include <functional>
#include <memory>
#include <span>

namespace kcdc {

struct NewtonConfig {
    double abs_tol = 1e-14; // on the max-norm of the residual
    int max_iters = 25;

    void validate() const;
};

// Reciprocal condition estimate below which a Kahan step is refused.
inline constexpr double kKahanMinRcond = 1e-14;

// One step of Kahan's method in linearly implicit form:
//   (I - dt/2 f'(u)) w = dt f(u),   u+ = u + w.
// Negative dt is allowed (backward step). Throws StepFailure when the matrix
// is singular or its condition estimate exceeds 1/kKahanMinRcond.
StateVector kahan_step(const QuadraticSystem& sys, const StateVector& u, double dt);

// The same map written as the implicit Runge-Kutta relation
//   (u+ - u)/dt = -f(u)/2 + 2 f((u + u+)/2) - f(u+)/2
// and solved by Newton. Independent cross-check of kahan_step.
StateVector kahan_step_rk_form(const QuadraticSystem& sys, const StateVector& u, double dt,
                               const NewtonConfig& cfg = {});

using TimeRhs = std::function<StateVector(double, const StateVector&)>;
using TimeRhsJacobian = std::function<Matrix(double, const StateVector&)>;

// Implicit midpoint step for a non-autonomous system:
//   e+ = e + dt rhs(t + dt/2, (e + e+)/2)
// solved by Newton starting from e+ = e. Throws NewtonFailure.
StateVector midpoint_step(const TimeRhs& rhs, const TimeRhsJacobian& rhs_jac, double t, const StateVector& e,
                          double dt, const NewtonConfig& cfg = {});

// Called once per record, starting with (t0, u0).
using StepObserver = std::function<void(double, const StateVector&)>;

// `steps` Kahan steps of size dt from u0; records at t_k = k dt.
Trajectory integrate_fixed(const QuadraticSystem& sys, const StateVector& u0, double dt, int steps);
void integrate_fixed(const QuadraticSystem& sys, const StateVector& u0, double dt, long steps,
                     const StepObserver& observe);

// Adaptive Dormand-Prince 8(5,3) integrator with PI step control and 7th
// order dense output, queried at non-decreasing times within [t0, t_end].
// The last step lands exactly on t_end. `tol` is used as both the absolute
// and the relative tolerance and must lie in [1e-14, 1e-6].
class ReferenceSolver {
public:
    ReferenceSolver(const QuadraticSystem& sys, const StateVector& u0, double t0, double t_end, double tol);
    ~ReferenceSolver();
    ReferenceSolver(ReferenceSolver&&) noexcept;
    ReferenceSolver& operator=(ReferenceSolver&&) noexcept;

    // Solution at t; t must not precede an earlier query. Throws
    // NumericalError on step size underflow.
    StateVector at(double t);

    long accepted_steps() const noexcept;
    long rejected_steps() const noexcept;

private:
    class Impl;
    std::unique_ptr<Impl> impl_;
};

// ReferenceSolver sampled at t_out. Times must be strictly increasing;
// t_out[0] is the initial time of u0.
Trajectory reference_solve(const QuadraticSystem& sys, const StateVector& u0, std::span<const double> t_out,
                           double tol);

// Convenience: uniform grid t_k = k dt, k = 0..steps.
std::vector<double> uniform_grid(double dt, int steps);

} // namespace kcdc
