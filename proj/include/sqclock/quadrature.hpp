// quadrature.hpp - adaptive Simpson integration for cloud-overlap integrals
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace sqclock {

// Thrown when adaptive refinement hits the depth cap before the tolerance.
class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(double achieved, double requested)
        : std::runtime_error("adaptive quadrature did not converge: achieved " +
                             std::to_string(achieved) + ", requested " +
                             std::to_string(requested)),
          achieved_tolerance(achieved),
          requested_tolerance(requested) {}

    double achieved_tolerance;
    double requested_tolerance;
};

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double fa,
                      double b, double fb, double& fm) {
    const double m = 0.5 * (a + b);
    fm = f(m);
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_step(const std::function<double(double)>& f, double a,
                            double fa, double b, double fb, double m, double fm,
                            double whole, double tol, int depth) {
    double fml = 0.0;
    double fmr = 0.0;
    const double left = simpson(f, a, fa, m, fm, fml);
    const double right = simpson(f, m, fm, b, fb, fmr);
    const double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol) {
        return left + right + err / 15.0;
    }
    if (depth <= 0) {
        throw QuadratureError(std::abs(err) / 15.0, tol);
    }
    const double ml = 0.5 * (a + m);
    const double mr = 0.5 * (m + b);
    return adaptive_step(f, a, fa, m, fm, ml, fml, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, fm, b, fb, mr, fmr, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-12, int max_depth = 48) {
    const double fa = f(a);
    const double fb = f(b);
    double fm = 0.0;
    const double whole = detail::simpson(f, a, fa, b, fb, fm);
    return detail::adaptive_step(f, a, fa, b, fb, 0.5 * (a + b), fm, whole, tol,
                                 max_depth);
}

}  // namespace sqclock
