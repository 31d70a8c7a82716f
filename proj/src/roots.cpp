#include "tpmc/roots.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace tpmc {

namespace {

using cplx = std::complex<double>;

cplx horner(std::span<const double> a, cplx z) {
  cplx acc{0, 0};
  for (std::size_t i = a.size(); i-- > 0;) acc = acc * z + a[i];
  return acc;
}

cplx horner_deriv(std::span<const double> a, cplx z) {
  cplx acc{0, 0};
  for (std::size_t i = a.size(); i-- > 1;) acc = acc * z + double(i) * a[i];
  return acc;
}

double horner_real(std::span<const double> a, double x) {
  double acc = 0;
  for (std::size_t i = a.size(); i-- > 0;) acc = acc * x + a[i];
  return acc;
}

double horner_real_deriv(std::span<const double> a, double x) {
  double acc = 0;
  for (std::size_t i = a.size(); i-- > 1;) acc = acc * x + double(i) * a[i];
  return acc;
}

}  // namespace

std::vector<double> aberth_roots(std::span<const double> coefficients) {
  std::size_t n = coefficients.size();
  while (n > 0 && coefficients[n - 1] == 0.0) --n;
  if (n == 0) throw std::invalid_argument("aberth_roots: zero polynomial");
  std::span<const double> a = coefficients.subspan(0, n);
  const int deg = int(n) - 1;
  if (deg == 0) return {};
  if (deg == 1) return {-a[0] / a[1]};

  // initial guesses on a circle enclosing all roots
  double radius = 0;
  for (int i = 0; i < deg; ++i) radius = std::max(radius, std::abs(a[i] / a[deg]));
  radius = 1 + radius;
  std::vector<cplx> z(deg);
  for (int k = 0; k < deg; ++k) {
    const double ang = 2 * M_PI * k / deg + 0.4;
    z[k] = radius * cplx{std::cos(ang), std::sin(ang)};
  }

  for (int iter = 0; iter < 100; ++iter) {
    double worst = 0;
    for (int k = 0; k < deg; ++k) {
      const cplx p = horner(a, z[k]);
      const cplx dp = horner_deriv(a, z[k]);
      cplx ratio = (dp == cplx{0, 0}) ? cplx{0, 0} : p / dp;
      cplx sum{0, 0};
      for (int j = 0; j < deg; ++j)
        if (j != k) sum += 1.0 / (z[k] - z[j]);
      const cplx denom = 1.0 - ratio * sum;
      const cplx w = (std::abs(denom) < 1e-300) ? ratio : ratio / denom;
      z[k] -= w;
      worst = std::max(worst, std::abs(w));
    }
    if (worst < 1e-14 * std::max(1.0, radius)) break;
  }

  std::vector<double> roots;
  for (int k = 0; k < deg; ++k) {
    if (std::abs(z[k].imag()) > 1e-8 * (1 + std::abs(z[k].real()))) continue;
    double x = z[k].real();
    // Newton polish in real arithmetic
    for (int it = 0; it < 4; ++it) {
      const double p = horner_real(a, x);
      const double dp = horner_real_deriv(a, x);
      if (dp == 0) break;
      const double step = p / dp;
      if (!std::isfinite(step)) break;
      x -= step;
      if (std::abs(step) < 1e-16 * (1 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace tpmc
