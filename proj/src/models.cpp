#include "kcdc/models.hpp"

#include "kcdc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kcdc {

namespace {

void require_positive(const StateVector& u, const std::string& who)
{
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (!(u[i] > 0.0)) {
            std::ostringstream os;
            os << who << ": component u" << (i + 1) << " = " << u[i] << " is not strictly positive";
            throw DomainError(os.str());
        }
}

StateVector vec3(double x, double y, double z)
{
    StateVector v(3);
    v << x, y, z;
    return v;
}

} // namespace

void validate(const Lv1Params& p)
{
    const double abc = p.a * p.b * p.c;
    if (!(std::abs(abc + 1.0) <= kLv1ConstraintTol)) {
        std::ostringstream os;
        os << "lv1 parameters: abc must equal -1, got abc = " << abc;
        throw ValidationError(os.str());
    }
    const double nu = p.mu * p.b - p.lambda * p.a * p.b;
    if (!(std::abs(p.nu - nu) <= kLv1ConstraintTol)) {
        std::ostringstream os;
        os.precision(17);
        os << "lv1 parameters: nu must equal mu*b - lambda*a*b = " << nu << ", got " << p.nu;
        throw ValidationError(os.str());
    }
}

ModelBundle build_lv1(const Lv1Params& p)
{
    validate(p);
    const double a = p.a, b = p.b, c = p.c, mu = p.mu, nu = p.nu;

    StateVector rates = vec3(p.lambda, p.mu, p.nu);
    Matrix interaction(3, 3);
    interaction << 0.0, c, 1.0,
                   1.0, 0.0, a,
                   b, 1.0, 0.0;

    InvariantObservable h1{
        "H1",
        [=](const StateVector& u) { return a * b * std::log(u[0]) - b * std::log(u[1]) + std::log(u[2]); },
        [=](const StateVector& u) { return vec3(a * b / u[0], -b / u[1], 1.0 / u[2]); },
        true};
    InvariantObservable h2{
        "H2",
        [=](const StateVector& u) {
            return a * b * u[0] + u[1] - a * u[2] + nu * std::log(u[1]) - mu * std::log(u[2]);
        },
        [=](const StateVector& u) { return vec3(a * b, 1.0 + nu / u[1], -a - mu / u[2]); },
        true};

    PoissonMatrix j1 = [=](const StateVector& u) {
        const double p12 = c * u[0] * u[1];
        const double p13 = b * c * u[0] * u[2];
        const double p23 = -u[1] * u[2];
        Matrix j(3, 3);
        j << 0.0, p12, p13,
             -p12, 0.0, p23,
             -p13, -p23, 0.0;
        return j;
    };
    PoissonMatrix j2 = [=](const StateVector& u) {
        const double p12 = c * u[0] * u[1] * (a * u[2] + mu);
        const double p13 = c * u[0] * u[2] * (u[1] + nu);
        const double p23 = u[0] * u[1] * u[2];
        Matrix j(3, 3);
        j << 0.0, p12, p13,
             -p12, 0.0, p23,
             -p13, -p23, 0.0;
        return j;
    };

    return ModelBundle{"lv1", lvs_to_quadratic(rates, interaction), std::move(h1), std::move(h2),
                       std::move(j1), std::move(j2)};
}

ModelBundle build_lv2()
{
    Matrix interaction(3, 3);
    interaction << 0.0, 1.0, -1.0,
                   -1.0, 0.0, 1.0,
                   1.0, -1.0, 0.0;

    InvariantObservable h1{
        "H1",
        [](const StateVector& u) { return u[0] + u[1] + u[2]; },
        [](const StateVector&) { return vec3(1.0, 1.0, 1.0); },
        false};
    InvariantObservable h2{
        "H2",
        [](const StateVector& u) { return u[0] * u[1] * u[2]; },
        [](const StateVector& u) { return vec3(u[1] * u[2], u[0] * u[2], u[0] * u[1]); },
        false};

    PoissonMatrix j1 = [](const StateVector&) {
        Matrix j(3, 3);
        j << 0.0, -1.0, 1.0,
             1.0, 0.0, -1.0,
             -1.0, 1.0, 0.0;
        return j;
    };
    PoissonMatrix j2 = [](const StateVector& u) {
        const double p12 = u[0] * u[1];
        const double p13 = -u[0] * u[2];
        const double p23 = u[1] * u[2];
        Matrix j(3, 3);
        j << 0.0, p12, p13,
             -p12, 0.0, p23,
             -p13, -p23, 0.0;
        return j;
    };

    return ModelBundle{"lv2", lvs_to_quadratic(StateVector::Zero(3), interaction), std::move(h1), std::move(h2),
                       std::move(j1), std::move(j2)};
}

ModelBundle build_custom(const StateVector& rates, const Matrix& interaction)
{
    return ModelBundle{"custom", lvs_to_quadratic(rates, interaction), std::nullopt, std::nullopt, {}, {}};
}

double eval_invariant(const InvariantObservable& obs, const StateVector& u)
{
    if (obs.requires_positive)
        require_positive(u, obs.label);
    return obs.value(u);
}

StateVector eval_invariant_gradient(const InvariantObservable& obs, const StateVector& u)
{
    if (obs.requires_positive)
        require_positive(u, obs.label);
    return obs.gradient(u);
}

double StructureResiduals::max() const noexcept
{
    return std::max({casimir1, casimir2, hamilton1, hamilton2});
}

StructureResiduals structure_residuals(const ModelBundle& mb, const StateVector& u)
{
    if (!mb.has_poisson_structure())
        throw ValidationError("structure_residuals: model '" + mb.name + "' has no Poisson structure");
    if (u.size() != mb.system.dim())
        throw ValidationError("structure_residuals: dimension mismatch");
    require_positive(u, "structure_residuals");

    const StateVector g1 = eval_invariant_gradient(*mb.h1, u);
    const StateVector g2 = eval_invariant_gradient(*mb.h2, u);
    const Matrix j1 = mb.j1(u);
    const Matrix j2 = mb.j2(u);
    const StateVector f = eval_field(mb.system, u);

    return StructureResiduals{(j1 * g1).norm(), (j2 * g2).norm(), (j1 * g2 - f).norm(), (j2 * g1 - f).norm()};
}

} // namespace kcdc
