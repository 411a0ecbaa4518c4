#include "kcdc/integrators.hpp"

#include "kcdc/errors.hpp"

#include <cmath>
#include <sstream>

namespace kcdc {

StateVector midpoint_step(const TimeRhs& rhs, const TimeRhsJacobian& rhs_jac, double t, const StateVector& e,
                          double dt, const NewtonConfig& cfg)
{
    cfg.validate();
    if (!std::isfinite(dt) || dt == 0.0)
        throw ValidationError("midpoint_step: dt must be finite and non-zero");

    const double t_mid = t + 0.5 * dt;
    StateVector x = e;
    double res_norm = 0.0;
    int it = 0;
    for (;; ++it) {
        const StateVector mid = 0.5 * (e + x);
        const StateVector residual = x - e - dt * rhs(t_mid, mid);
        res_norm = residual.lpNorm<Eigen::Infinity>();
        if (res_norm == 0.0)
            return x;
        if (it == cfg.max_iters || !std::isfinite(res_norm))
            break;
        // d/dx of the residual: I - dt/2 J(t_mid, mid)
        Matrix jac = -0.5 * dt * rhs_jac(t_mid, mid);
        jac.diagonal().array() += 1.0;
        x -= jac.partialPivLu().solve(residual);
        // The update computed from a converged residual is still applied, so
        // the returned iterate is one quadratic step past the tolerance.
        if (res_norm <= cfg.abs_tol)
            return x;
    }
    std::ostringstream os;
    os << "midpoint_step: Newton did not converge at t = " << t << ", dt = " << dt << " after " << it
       << " iterations (residual " << res_norm << ")";
    throw NewtonFailure(os.str(), it, res_norm);
}

} // namespace kcdc
