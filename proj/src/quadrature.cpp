#include "crpslab/quadrature.hpp"

#include <cmath>

namespace crpslab {
namespace {

constexpr int kMinDepth = 4;

struct Simpson {
  const std::function<double(double)>& f;
  bool converged = true;

  double refine(double a, double b, double fa, double fm, double fb, double whole, double eps,
                int depth, int level) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (level >= kMinDepth && std::abs(delta) <= 15.0 * eps) {
      return left + right + delta / 15.0;
    }
    if (depth <= 0) {
      converged = false;
      return left + right + delta / 15.0;
    }
    return refine(a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, level + 1) +
           refine(m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, level + 1);
  }
};

}  // namespace

QuadratureResult integrate_piecewise(const std::function<double(double)>& right,
                                     const std::function<double(double)>& left,
                                     std::span<const double> breakpoints, double abs_tol,
                                     int max_depth) {
  QuadratureResult result;
  if (breakpoints.size() < 2) return result;
  const double total = breakpoints.back() - breakpoints.front();
  if (!(total > 0.0)) return result;

  Simpson simpson{right};
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double a = breakpoints[k];
    const double b = breakpoints[k + 1];
    if (!(b > a)) continue;
    const double fa = right(a);
    const double fb = left(b);
    const double fm = right(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double eps = abs_tol * (b - a) / total;
    result.value += simpson.refine(a, b, fa, fm, fb, whole, eps, max_depth, 0);
  }
  result.converged = simpson.converged;
  return result;
}

}  // namespace crpslab
