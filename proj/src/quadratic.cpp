#include "kcdc/quadratic.hpp"

#include "kcdc/errors.hpp"

#include <string>
#include <utility>

namespace kcdc {

namespace {

void require_dim(const QuadraticSystem& sys, const StateVector& v, const char* what)
{
    if (v.size() != sys.dim())
        throw ValidationError(std::string(what) + ": expected dimension " + std::to_string(sys.dim()) +
                              ", got " + std::to_string(v.size()));
}

} // namespace

QuadraticSystem::QuadraticSystem(int dim, std::vector<double> quad, Matrix linear)
    : dim_(dim), quad_(std::move(quad)), linear_(std::move(linear))
{
    if (dim_ <= 0)
        throw ValidationError("quadratic system: dimension must be positive");
    const auto m = static_cast<std::size_t>(dim_);
    if (quad_.size() != m * m * m)
        throw ValidationError("quadratic system: tensor must have dim^3 entries");
    if (linear_.rows() != dim_ || linear_.cols() != dim_)
        throw ValidationError("quadratic system: linear part must be dim x dim");

    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int k = j + 1; k < dim_; ++k) {
                auto& a = quad_[(i * dim_ + j) * dim_ + k];
                auto& b = quad_[(i * dim_ + k) * dim_ + j];
                const double s = 0.5 * (a + b);
                a = s;
                b = s;
            }
}

QuadraticSystem lvs_to_quadratic(const StateVector& rates, const Matrix& interaction)
{
    const auto m = rates.size();
    if (m == 0 || interaction.rows() != m || interaction.cols() != m)
        throw ValidationError("lvs_to_quadratic: rates of length " + std::to_string(m) +
                              " do not match interaction matrix " + std::to_string(interaction.rows()) + "x" +
                              std::to_string(interaction.cols()));

    const int dim = static_cast<int>(m);
    std::vector<double> quad(static_cast<std::size_t>(m * m * m), 0.0);
    // u_i sum_j a_ij u_j: only the rows q[i][i][j] and q[i][j][i] are populated.
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            quad[(i * dim + i) * dim + j] += 0.5 * interaction(i, j);
            quad[(i * dim + j) * dim + i] += 0.5 * interaction(i, j);
        }
    Matrix linear = rates.asDiagonal();
    return QuadraticSystem(dim, std::move(quad), std::move(linear));
}

StateVector polarize(const QuadraticSystem& sys, const StateVector& x, const StateVector& y)
{
    require_dim(sys, x, "polarize");
    require_dim(sys, y, "polarize");
    const int m = sys.dim();
    StateVector out(m);
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            double row = 0.0;
            for (int k = 0; k < m; ++k)
                row += sys.quad(i, j, k) * y[k];
            acc += x[j] * row;
        }
        out[i] = acc;
    }
    return out;
}

StateVector eval_quadratic(const QuadraticSystem& sys, const StateVector& u)
{
    return polarize(sys, u, u);
}

StateVector eval_field(const QuadraticSystem& sys, const StateVector& u)
{
    require_dim(sys, u, "eval_field");
    if (!u.allFinite())
        throw ValidationError("eval_field: non-finite state");
    return polarize(sys, u, u) + sys.linear() * u;
}

Matrix eval_jacobian(const QuadraticSystem& sys, const StateVector& u)
{
    require_dim(sys, u, "eval_jacobian");
    const int m = sys.dim();
    Matrix jac = sys.linear();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int k = 0; k < m; ++k)
                acc += sys.quad(i, j, k) * u[k];
            jac(i, j) += 2.0 * acc;
        }
    return jac;
}

double divergence(const QuadraticSystem& sys, const StateVector& u)
{
    return eval_jacobian(sys, u).trace();
}

} // namespace kcdc
