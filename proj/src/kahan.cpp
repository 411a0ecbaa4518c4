#include "kcdc/integrators.hpp"

#include "kcdc/errors.hpp"

#include <cmath>
#include <sstream>

namespace kcdc {

namespace {

std::string describe(const StateVector& u)
{
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Eigen::Index i = 0; i < u.size(); ++i)
        os << (i ? ", " : "") << u[i];
    os << ")";
    return os.str();
}

} // namespace

void NewtonConfig::validate() const
{
    if (!(abs_tol > 0.0))
        throw ValidationError("newton: abs_tol must be positive");
    if (max_iters < 1)
        throw ValidationError("newton: max_iters must be at least 1");
}

namespace {

// Small systems use stack storage; the step runs tens of millions of times in
// speed comparisons and heap traffic dominated it.
constexpr int kSmallDim = 8;

template <class Mat, class Vec>
StateVector kahan_step_impl(const QuadraticSystem& sys, const StateVector& u, double dt)
{
    const int m = sys.dim();
    const Vec x = u;
    // Jacobian 2Q(u, .) + B; then f(u) = (f'(u) + B) u / 2.
    Mat jac = sys.linear();
    const Vec bu = jac * x;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int k = 0; k < m; ++k)
                acc += sys.quad(i, j, k) * x[k];
            jac(i, j) += 2.0 * acc;
        }
    const Vec rhs = (0.5 * dt) * (jac * x + bu);
    Mat lhs = (-0.5 * dt) * jac;
    lhs.diagonal().array() += 1.0;

    const Eigen::PartialPivLU<Mat> lu(lhs);
    const double rcond = lu.rcond();
    if (!(rcond >= kKahanMinRcond)) {
        std::ostringstream os;
        os << "kahan_step: linear system singular or ill-conditioned (rcond = " << rcond << ") at dt = " << dt
           << ", u = " << describe(u);
        throw StepFailure(os.str());
    }
    StateVector next = u + lu.solve(rhs);
    if (!next.allFinite())
        throw StepFailure("kahan_step: non-finite result at dt = " + std::to_string(dt) + ", u = " + describe(u));
    return next;
}

} // namespace

StateVector kahan_step(const QuadraticSystem& sys, const StateVector& u, double dt)
{
    if (!std::isfinite(dt) || dt == 0.0)
        throw ValidationError("kahan_step: dt must be finite and non-zero");
    if (u.size() != sys.dim())
        throw ValidationError("kahan_step: dimension mismatch");
    if (!u.allFinite())
        throw ValidationError("kahan_step: non-finite state");

    using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kSmallDim, kSmallDim>;
    using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kSmallDim, 1>;
    if (sys.dim() == 3)
        return kahan_step_impl<Eigen::Matrix3d, Eigen::Vector3d>(sys, u, dt);
    if (sys.dim() <= kSmallDim)
        return kahan_step_impl<SmallMat, SmallVec>(sys, u, dt);
    return kahan_step_impl<Matrix, StateVector>(sys, u, dt);
}

StateVector kahan_step_rk_form(const QuadraticSystem& sys, const StateVector& u, double dt, const NewtonConfig& cfg)
{
    cfg.validate();
    if (!std::isfinite(dt) || dt == 0.0)
        throw ValidationError("kahan_step_rk_form: dt must be finite and non-zero");

    const StateVector fu = eval_field(sys, u);
    const auto m = u.size();
    StateVector x = u;
    double res_norm = 0.0;
    for (int it = 0; it <= cfg.max_iters; ++it) {
        const StateVector mid = 0.5 * (u + x);
        const StateVector fx = eval_field(sys, x);
        const StateVector residual = x - u - dt * (-0.5 * fu + 2.0 * eval_field(sys, mid) - 0.5 * fx);
        res_norm = residual.lpNorm<Eigen::Infinity>();
        if (res_norm <= cfg.abs_tol)
            return x;
        if (it == cfg.max_iters)
            break;
        Matrix jac = Matrix::Identity(m, m) - dt * (eval_jacobian(sys, mid) - 0.5 * eval_jacobian(sys, x));
        x -= jac.partialPivLu().solve(residual);
        if (!x.allFinite())
            break;
    }
    throw NewtonFailure("kahan_step_rk_form: Newton did not converge (residual " + std::to_string(res_norm) + ")",
                        cfg.max_iters, res_norm);
}

std::vector<double> uniform_grid(double dt, int steps)
{
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k)
        t[static_cast<std::size_t>(k)] = k * dt;
    return t;
}

void integrate_fixed(const QuadraticSystem& sys, const StateVector& u0, double dt, long steps,
                     const StepObserver& observe)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ValidationError("integrate_fixed: dt must be positive");
    if (steps < 1)
        throw ValidationError("integrate_fixed: steps must be at least 1");

    StateVector u = u0;
    observe(0.0, u);
    for (long k = 0; k < steps; ++k) {
        try {
            u = kahan_step(sys, u, dt);
        } catch (const StepFailure& e) {
            throw StepFailure("integrate_fixed: step " + std::to_string(k) + " failed: " + e.what());
        }
        observe(static_cast<double>(k + 1) * dt, u);
    }
}

Trajectory integrate_fixed(const QuadraticSystem& sys, const StateVector& u0, double dt, int steps)
{
    Trajectory traj;
    traj.meta = TrajectoryMeta{"kahan", dt, 0, 0};
    if (steps > 0) {
        traj.times.reserve(static_cast<std::size_t>(steps) + 1);
        traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    }
    integrate_fixed(sys, u0, dt, static_cast<long>(steps), [&](double t, const StateVector& u) {
        traj.times.push_back(t);
        traj.states.push_back(u);
    });
    return traj;
}

} // namespace kcdc
