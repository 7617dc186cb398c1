#pragma once

#include "obsdyn/linalg.hpp"

namespace obsdyn {

/// Matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant (orders 3, 5, 7, 9 are used when the 1-norm is small enough).
/// Throws Error(InvalidArgument) for non-square or non-finite input.
[[nodiscard]] Matrix expm(const Matrix& a);

} // namespace obsdyn
