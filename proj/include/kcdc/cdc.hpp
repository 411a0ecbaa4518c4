#pragma once

#include "kcdc/integrators.hpp"
#include "kcdc/quadratic.hpp"
#include "kcdc/trajectory.hpp"

#include <optional>
#include <span>
#include <vector>

namespace kcdc {

// w_k = 1 / prod_{i != k} (t_k - t_i). Throws ValidationError on duplicate nodes.
std::vector<double> barycentric_weights(std::span<const double> nodes);

// n uniform nodes on [t_start, t_end] (endpoints included) together with
// their barycentric weights and the differentiation matrix of the Lagrange
// interpolant, D_ij = l_j'(t_i).
class NodeGrid {
public:
    NodeGrid(double t_start, double t_end, int n);

    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    int size() const noexcept { return static_cast<int>(nodes_.size()); }
    double spacing() const noexcept { return spacing_; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    const Matrix& diff_matrix() const noexcept { return diff_; }

private:
    double t_start_;
    double t_end_;
    double spacing_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    Matrix diff_;
};

// Solution values on the nodes of one interval.
struct NodeSolution {
    NodeGrid grid;
    std::vector<StateVector> values;
};

// Lagrange interpolant of ns at t (barycentric form). Node hits return the
// stored value exactly. Throws ValidationError for t outside the interval.
StateVector interp_eval(const NodeSolution& ns, double t);

// Derivative of the Lagrange interpolant at t.
StateVector interp_deriv(const NodeSolution& ns, double t);

// Node values of the interpolant's derivative (differentiation matrix times
// the values). interp_eval of the result equals interp_deriv.
NodeSolution differentiate(const NodeSolution& ns);

struct CdcConfig {
    double dt = 0.01;     // interval length
    double t_end = 100.0; // final time T, an integer multiple of dt
    int corrections = 1;  // S
    std::optional<int> nodes; // n per interval; 2S+3 when unset
    NewtonConfig newton;
    bool store_nodes = false; // also record interior nodes in the trajectory

    int node_count() const noexcept { return nodes.value_or(2 * corrections + 3); }
    int intervals() const; // J = T / dt
    void validate() const;
};

// One correction pass: solve the error equation
//   e' = f(e + U(t)) - U'(t),  e(t_start) = 0
// node to node with the implicit midpoint rule, U the interpolant of prev,
// and return prev + e on the nodes.
NodeSolution cdc_sweep(const QuadraticSystem& sys, const NodeSolution& prev, const NewtonConfig& newton);

// Deferred correction over [0, T]: on each interval a provisional Kahan
// solution on the nodes followed by S correction sweeps; the last node seeds
// the next interval. Records interval endpoints (plus interior nodes when
// cfg.store_nodes).
Trajectory cdc_integrate(const QuadraticSystem& sys, const StateVector& u0, const CdcConfig& cfg);

// Streaming form: observe(t, u) is called for t = 0 and every recorded time.
void cdc_integrate(const QuadraticSystem& sys, const StateVector& u0, const CdcConfig& cfg,
                   const StepObserver& observe);

} // namespace kcdc
