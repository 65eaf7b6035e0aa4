#include "spdecouple/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spdecouple/errors.hpp"

namespace spdecouple {

namespace {

struct SimpsonPanel {
    double a, b, fa, fm, fb, whole;
};

double simpson_recurse(const std::function<double(double)>& f, const SimpsonPanel& p, double tol,
                       double floor_tol, int depth) {
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    const double right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    const double fine = left + right;
    const double diff = fine - p.whole;
    // Roundoff floor: a panel cannot resolve below a few ulps of its own value.
    const double floor = std::max(floor_tol, 64.0 * std::numeric_limits<double>::epsilon() *
                                                 std::abs(fine));
    if (std::abs(diff) <= 15.0 * std::max(tol, floor)) return fine + diff / 15.0;
    if (depth <= 0 || !std::isfinite(diff)) {
        std::ostringstream os;
        os << "adaptive_simpson: tolerance " << tol << " not met on [" << p.a << ", " << p.b
           << "]";
        throw QuadratureFailure(os.str());
    }
    return simpson_recurse(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, 0.5 * floor_tol,
                           depth - 1) +
           simpson_recurse(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, 0.5 * floor_tol,
                           depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Absolute floor at a few ulps of the integrand scale over the whole range.
    const double scale = std::max({std::abs(fa), std::abs(fm), std::abs(fb)}) * std::abs(b - a);
    const double floor_tol = 16.0 * std::numeric_limits<double>::epsilon() * scale;
    return simpson_recurse(f, {a, b, fa, fm, fb, whole}, tol, floor_tol, max_depth);
}

CubicSpline::CubicSpline(double x0, double h, std::vector<double> y)
    : x0_(x0), h_(h), y_(std::move(y)) {
    const std::size_t n = y_.size();
    if (n < 5) throw PreconditionError("CubicSpline: need at least 5 knots");
    // Fourth-order one-sided end slopes.
    const double s0 = (-25.0 * y_[0] + 48.0 * y_[1] - 36.0 * y_[2] + 16.0 * y_[3] - 3.0 * y_[4]) /
                      (12.0 * h_);
    const double sn = (25.0 * y_[n - 1] - 48.0 * y_[n - 2] + 36.0 * y_[n - 3] -
                       16.0 * y_[n - 4] + 3.0 * y_[n - 5]) /
                      (12.0 * h_);
    // Clamped spline system for second derivatives m_i (Thomas algorithm).
    std::vector<double> diag(n, 4.0), rhs(n);
    std::vector<double> lower(n, 1.0), upper(n, 1.0);
    const double c = 6.0 / (h_ * h_);
    diag[0] = 2.0;
    rhs[0] = c * (y_[1] - y_[0] - h_ * s0);
    diag[n - 1] = 2.0;
    rhs[n - 1] = c * (h_ * sn - (y_[n - 1] - y_[n - 2]));
    for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = c * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]);
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m_.assign(n, 0.0);
    m_[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
}

std::size_t CubicSpline::segment(double x) const {
    const double s = (x - x0_) / h_;
    const auto last = y_.size() - 2;
    if (s <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(s), last);
}

double CubicSpline::operator()(double x) const {
    const double s = (x - x0_) / h_;
    const double k = std::round(s);
    if (std::abs(s - k) < 1e-9 && k >= 0.0 && k < static_cast<double>(y_.size())) {
        return y_[static_cast<std::size_t>(k)];
    }
    const std::size_t i = segment(x);
    const double xi = x0_ + h_ * static_cast<double>(i);
    const double b = (x - xi) / h_;
    const double a = 1.0 - b;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h_ * h_) / 6.0;
}

double CubicSpline::derivative(double x) const {
    const std::size_t i = segment(x);
    const double xi = x0_ + h_ * static_cast<double>(i);
    const double b = (x - xi) / h_;
    const double a = 1.0 - b;
    return (y_[i + 1] - y_[i]) / h_ +
           (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h_ / 6.0;
}

} // namespace spdecouple
