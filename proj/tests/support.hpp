#pragma once

#include "kcdc/models.hpp"
#include "kcdc/quadratic.hpp"

#include <random>

namespace testing {

// Seeded source of random states and scalars for the property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    kcdc::StateVector state(int m, double lo, double hi)
    {
        kcdc::StateVector u(m);
        for (int i = 0; i < m; ++i)
            u[i] = uniform(lo, hi);
        return u;
    }

    kcdc::StateVector positive3() { return state(3, 0.1, 2.0); }

    kcdc::Matrix matrix(int m, double lo, double hi)
    {
        kcdc::Matrix a(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                a(i, j) = uniform(lo, hi);
        return a;
    }

private:
    std::mt19937_64 rng_;
};

inline kcdc::StateVector vec(std::initializer_list<double> xs)
{
    kcdc::StateVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return v;
}

inline kcdc::ModelBundle paper_lv1()
{
    return kcdc::build_lv1({-1.0, -1.0, -1.0, 0.0, 1.0, -1.0});
}

// Central differences of f at u, step h.
template <class F>
kcdc::Matrix fd_jacobian(F&& f, const kcdc::StateVector& u, double h = 1e-6)
{
    const auto m = u.size();
    kcdc::Matrix jac(f(u).size(), m);
    for (Eigen::Index j = 0; j < m; ++j) {
        kcdc::StateVector up = u, dn = u;
        up[j] += h;
        dn[j] -= h;
        jac.col(j) = (f(up) - f(dn)) / (2.0 * h);
    }
    return jac;
}

} // namespace testing
