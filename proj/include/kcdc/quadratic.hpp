#pragma once

#include <Eigen/Dense>

#include <vector>

namespace kcdc {

using StateVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Autonomous ODE  du/dt = Q(u) + B u  with
//   Q(u)_i = sum_{j,k} q[i][j][k] u_j u_k.
// The tensor is symmetrized in its last two indices on construction, so the
// bilinear form Q(x, y)_i = sum_{j,k} q[i][j][k] x_j y_k is symmetric and the
// Jacobian is 2 Q(u, .) + B. Immutable once built.
class QuadraticSystem {
public:
    // `quad` holds q[i][j][k] at index (i*m + j)*m + k; `linear` is m x m.
    QuadraticSystem(int dim, std::vector<double> quad, Matrix linear);

    int dim() const noexcept { return dim_; }
    double quad(int i, int j, int k) const noexcept { return quad_[(i * dim_ + j) * dim_ + k]; }
    const Matrix& linear() const noexcept { return linear_; }

private:
    int dim_;
    std::vector<double> quad_;
    Matrix linear_;
};

// Lotka-Volterra field u_i (r_i + sum_j a_ij u_j) in quadratic form.
QuadraticSystem lvs_to_quadratic(const StateVector& rates, const Matrix& interaction);

// f(u) = Q(u) + B u. Rejects dimension mismatch and non-finite input.
StateVector eval_field(const QuadraticSystem& sys, const StateVector& u);

// Homogeneous quadratic part Q(u) only.
StateVector eval_quadratic(const QuadraticSystem& sys, const StateVector& u);

// J_ij = 2 sum_k q[i][j][k] u_k + b_ij
Matrix eval_jacobian(const QuadraticSystem& sys, const StateVector& u);

// Symmetric bilinear form with polarize(u, u) == Q(u).
StateVector polarize(const QuadraticSystem& sys, const StateVector& x, const StateVector& y);

// Trace of the Jacobian at u.
double divergence(const QuadraticSystem& sys, const StateVector& u);

} // namespace kcdc
