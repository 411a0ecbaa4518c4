#pragma once

#include "kcdc/quadratic.hpp"

#include <string>
#include <vector>

namespace kcdc {

struct TrajectoryMeta {
    std::string method;   // "kahan", "cdc", "reference", ...
    double dt = 0.0;      // output spacing (0 if irregular)
    int corrections = 0;  // S
    int nodes = 0;        // n (0 for single-step methods)
};

// Time grid plus states. Times are strictly increasing and both vectors have
// equal length.
struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    TrajectoryMeta meta;

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }
    const StateVector& back() const { return states.back(); }

    // Throws ValidationError if the invariants above do not hold.
    void validate() const;
};

} // namespace kcdc
