#include "kcdc/cdc.hpp"

#include "kcdc/errors.hpp"

#include <cmath>
#include <sstream>

namespace kcdc {

std::vector<double> barycentric_weights(std::span<const double> nodes)
{
    const std::size_t n = nodes.size();
    if (n == 0)
        throw ValidationError("barycentric_weights: no nodes");
    std::vector<double> w(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        double prod = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k)
                continue;
            const double d = nodes[k] - nodes[i];
            if (d == 0.0)
                throw ValidationError("barycentric_weights: duplicate node " + std::to_string(nodes[k]));
            prod *= d;
        }
        w[k] = 1.0 / prod;
    }
    return w;
}

NodeGrid::NodeGrid(double t_start, double t_end, int n) : t_start_(t_start), t_end_(t_end)
{
    if (n < 2)
        throw ValidationError("node grid: need at least 2 nodes");
    if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end))
        throw ValidationError("node grid: empty or non-finite interval");

    spacing_ = (t_end - t_start) / (n - 1);
    nodes_.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n - 1; ++k)
        nodes_[static_cast<std::size_t>(k)] = t_start + k * spacing_;
    nodes_.back() = t_end;
    weights_ = barycentric_weights(nodes_);

    diff_ = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
            const double d = (weights_[uj] / weights_[ui]) / (nodes_[ui] - nodes_[uj]);
            diff_(i, j) = d;
            diag -= d;
        }
        diff_(i, i) = diag;
    }
}

namespace {

void require_inside(const NodeSolution& ns, double t, const char* who)
{
    const auto& g = ns.grid;
    if (static_cast<int>(ns.values.size()) != g.size())
        throw ValidationError(std::string(who) + ": value count does not match node count");
    const double slack = 1e-12 * (g.t_end() - g.t_start());
    if (!(t >= g.t_start() - slack && t <= g.t_end() + slack)) {
        std::ostringstream os;
        os << who << ": t = " << t << " outside [" << g.t_start() << ", " << g.t_end() << "]";
        throw ValidationError(os.str());
    }
}

int node_index(const NodeGrid& g, double t)
{
    const auto nodes = g.nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (nodes[k] == t)
            return static_cast<int>(k);
    return -1;
}

} // namespace

StateVector interp_eval(const NodeSolution& ns, double t)
{
    require_inside(ns, t, "interp_eval");
    const auto& g = ns.grid;
    if (const int k = node_index(g, t); k >= 0)
        return ns.values[static_cast<std::size_t>(k)];

    const auto nodes = g.nodes();
    const auto w = g.weights();
    StateVector num = StateVector::Zero(ns.values.front().size());
    double den = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double a = w[k] / (t - nodes[k]);
        num += a * ns.values[k];
        den += a;
    }
    return num / den;
}

NodeSolution differentiate(const NodeSolution& ns)
{
    const auto& g = ns.grid;
    if (static_cast<int>(ns.values.size()) != g.size())
        throw ValidationError("differentiate: value count does not match node count");
    const Eigen::Index m = ns.values.front().size();
    const auto& d = g.diff_matrix();
    NodeSolution out{g, std::vector<StateVector>(ns.values.size(), StateVector::Zero(m))};
    // Rows of D sum to zero, so differences from the first value give the
    // same result with far smaller terms (the entries grow like 1/spacing).
    const StateVector& base = ns.values.front();
    for (int j = 1; j < g.size(); ++j) {
        const StateVector diff = ns.values[static_cast<std::size_t>(j)] - base;
        for (int i = 0; i < g.size(); ++i)
            out.values[static_cast<std::size_t>(i)] += d(i, j) * diff;
    }
    return out;
}

StateVector interp_deriv(const NodeSolution& ns, double t)
{
    require_inside(ns, t, "interp_deriv");
    // p' has degree n-2, so interpolating its node values is exact. This
    // avoids the cancellation in (p(t) - y_k) / (t - t_k) near a node.
    return interp_eval(differentiate(ns), t);
}

} // namespace kcdc
