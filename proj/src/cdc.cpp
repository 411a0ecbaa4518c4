#include "kcdc/cdc.hpp"

#include "kcdc/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kcdc {

int CdcConfig::intervals() const
{
    return static_cast<int>(std::llround(t_end / dt));
}

void CdcConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ValidationError("cdc: dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw ValidationError("cdc: t_end must be positive");
    if (corrections < 0)
        throw ValidationError("cdc: corrections must be non-negative");
    if (node_count() < 2)
        throw ValidationError("cdc: need at least 2 nodes per interval");
    const double ratio = t_end / dt;
    const double j = std::round(ratio);
    if (j < 1.0 || std::abs(j * dt - t_end) > 1e-9 * t_end) {
        std::ostringstream os;
        os.precision(17);
        os << "cdc: t_end / dt = " << ratio << " is not an integer number of intervals";
        throw ValidationError(os.str());
    }
    newton.validate();
}

NodeSolution cdc_sweep(const QuadraticSystem& sys, const NodeSolution& prev, const NewtonConfig& newton)
{
    const NodeGrid& grid = prev.grid;
    const int n = grid.size();
    const auto nodes = grid.nodes();

    const NodeSolution dprev = differentiate(prev);
    // Newton evaluates the rhs repeatedly at the same midpoint time.
    double cached_t = std::numeric_limits<double>::quiet_NaN();
    StateVector cached_u, cached_du;
    auto interpolant_at = [&](double t) {
        if (t != cached_t) {
            cached_u = interp_eval(prev, t);
            cached_du = interp_eval(dprev, t);
            cached_t = t;
        }
    };
    const TimeRhs rhs = [&](double t, const StateVector& e) -> StateVector {
        interpolant_at(t);
        return eval_field(sys, e + cached_u) - cached_du;
    };
    const TimeRhsJacobian jac = [&](double t, const StateVector& e) -> Matrix {
        interpolant_at(t);
        return eval_jacobian(sys, e + cached_u);
    };

    NodeSolution next{grid, prev.values};
    StateVector err = StateVector::Zero(prev.values.front().size());
    for (int i = 0; i + 1 < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        try {
            err = midpoint_step(rhs, jac, nodes[ui], err, nodes[ui + 1] - nodes[ui], newton);
        } catch (const NewtonFailure& e) {
            throw NewtonFailure("cdc_sweep: node " + std::to_string(i + 1) + ": " + e.what(), e.iterations(),
                                e.residual());
        }
        next.values[ui + 1] += err;
    }
    return next;
}

void cdc_integrate(const QuadraticSystem& sys, const StateVector& u0, const CdcConfig& cfg,
                   const StepObserver& observe)
{
    cfg.validate();
    if (u0.size() != sys.dim())
        throw ValidationError("cdc_integrate: dimension mismatch");

    const int n = cfg.node_count();
    const int intervals = cfg.intervals();
    // Every interval shares the same grid in interval-local time [0, dt].
    const NodeGrid grid(0.0, cfg.dt, n);
    const double h = cfg.dt / (n - 1);
    const auto local = grid.nodes();

    observe(0.0, u0);
    NodeSolution sol{grid, std::vector<StateVector>(static_cast<std::size_t>(n))};
    StateVector u = u0;
    for (int j = 0; j < intervals; ++j) {
        try {
            sol.values[0] = u;
            for (int i = 0; i + 1 < n; ++i)
                sol.values[static_cast<std::size_t>(i + 1)] = kahan_step(sys, sol.values[static_cast<std::size_t>(i)], h);
            for (int s = 0; s < cfg.corrections; ++s)
                sol = cdc_sweep(sys, sol, cfg.newton);
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << "cdc_integrate: interval " << j << " (t = " << j * cfg.dt << "): " << e.what();
            throw NumericalError(os.str());
        }

        const double t0 = j * cfg.dt;
        if (cfg.store_nodes)
            for (int i = 1; i + 1 < n; ++i)
                observe(t0 + local[static_cast<std::size_t>(i)], sol.values[static_cast<std::size_t>(i)]);
        u = sol.values.back();
        observe((j + 1) * cfg.dt, u);
    }
}

Trajectory cdc_integrate(const QuadraticSystem& sys, const StateVector& u0, const CdcConfig& cfg)
{
    Trajectory traj;
    traj.meta = TrajectoryMeta{"cdc", cfg.dt, cfg.corrections, 0};
    cdc_integrate(sys, u0, cfg, [&](double t, const StateVector& u) {
        traj.times.push_back(t);
        traj.states.push_back(u);
    });
    traj.meta.nodes = cfg.node_count();
    return traj;
}

} // namespace kcdc
