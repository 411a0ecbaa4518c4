#pragma once

#include "kcdc/quadratic.hpp"

#include <functional>
#include <optional>
#include <string>

namespace kcdc {

// Coefficients of the bi-Hamiltonian Lotka-Volterra system
//   u1' = u1 (c u2 + u3 + lambda)
//   u2' = u2 (u1 + a u3 + mu)
//   u3' = u3 (b u1 + u2 + nu)
// subject to abc = -1 and nu = mu b - lambda a b.
struct Lv1Params {
    double a = -1.0;
    double b = -1.0;
    double c = -1.0;
    double lambda = 0.0;
    double mu = 1.0;
    double nu = -1.0;

    friend bool operator==(const Lv1Params&, const Lv1Params&) = default;
};

inline constexpr double kLv1ConstraintTol = 1e-12;

// Throws ValidationError naming the violated constraint.
void validate(const Lv1Params& p);

// A conserved quantity with a hand-derived gradient.
struct InvariantObservable {
    std::string label;
    std::function<double(const StateVector&)> value;
    std::function<StateVector(const StateVector&)> gradient;
    // Log terms make the observable undefined for u_i <= 0.
    bool requires_positive = false;
};

using PoissonMatrix = std::function<Matrix(const StateVector&)>;

// A quadratic system plus, for the bi-Hamiltonian models, the two integrals
// and Poisson matrices with  f = J1 grad H2 = J2 grad H1.
struct ModelBundle {
    std::string name;
    QuadraticSystem system;
    std::optional<InvariantObservable> h1;
    std::optional<InvariantObservable> h2;
    PoissonMatrix j1;
    PoissonMatrix j2;

    bool has_invariants() const noexcept { return h1.has_value() && h2.has_value(); }
    bool has_poisson_structure() const noexcept { return has_invariants() && j1 && j2; }
};

ModelBundle build_lv1(const Lv1Params& p);

// Reversible system with circulant interaction, H1 = u1 + u2 + u3, H2 = u1 u2 u3.
ModelBundle build_lv2();

// Lotka-Volterra model with no known integrals.
ModelBundle build_custom(const StateVector& rates, const Matrix& interaction);

// Throws DomainError if obs has log terms and some u_i <= 0.
double eval_invariant(const InvariantObservable& obs, const StateVector& u);
StateVector eval_invariant_gradient(const InvariantObservable& obs, const StateVector& u);

struct StructureResiduals {
    double casimir1 = 0.0;  // |J1 grad H1|
    double casimir2 = 0.0;  // |J2 grad H2|
    double hamilton1 = 0.0; // |J1 grad H2 - f|
    double hamilton2 = 0.0; // |J2 grad H1 - f|

    double max() const noexcept;
};

// Requires strictly positive u and a model with Poisson structure.
StructureResiduals structure_residuals(const ModelBundle& mb, const StateVector& u);

} // namespace kcdc
