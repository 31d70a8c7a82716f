#pragma once

#include <span>
#include <vector>

namespace tpmc {

// Real roots of a polynomial with coefficients in ascending degree order
// (degree <= 3 is what the interface intersections need, but the
// implementation is generic).  Roots are returned sorted ascending; complex
// pairs are dropped.  Throws std::invalid_argument when all coefficients
// vanish or the array is empty.
std::vector<double> aberth_roots(std::span<const double> coefficients);

}  // namespace tpmc
