#pragma once

#include <functional>
#include <vector>

namespace spdecouple {

/// Adaptive Simpson with Richardson correction.
///
/// Each accepted panel satisfies |S_fine - S_coarse| <= 15 * tol_panel, where the
/// tolerance is split in half at every bisection. Throws QuadratureFailure if a
/// panel still fails the test at max_depth.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 48);

/// Interpolating cubic spline on a uniform knot sequence.
///
/// End slopes are clamped to fourth-order one-sided differences of the data, so
/// the interpolant is O(h^4) up to the ends.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(double x0, double h, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double x0() const { return x0_; }
    double step() const { return h_; }
    double x_max() const { return x0_ + h_ * static_cast<double>(y_.size() - 1); }
    const std::vector<double>& values() const { return y_; }

private:
    std::size_t segment(double x) const;

    double x0_ = 0.0;
    double h_ = 1.0;
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives at knots
};

} // namespace spdecouple
