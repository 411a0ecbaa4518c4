#include "kcdc/trajectory.hpp"

#include "kcdc/errors.hpp"

#include <cmath>

namespace kcdc {

void Trajectory::validate() const
{
    if (times.size() != states.size())
        throw ValidationError("trajectory: times and states differ in length");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]))
            throw ValidationError("trajectory: non-finite time at index " + std::to_string(i));
        if (i > 0 && !(times[i] > times[i - 1]))
            throw ValidationError("trajectory: times not strictly increasing at index " + std::to_string(i));
    }
}

} // namespace kcdc
