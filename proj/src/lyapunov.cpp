#include "spdecouple/lyapunov.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "spdecouple/errors.hpp"

namespace spdecouple {

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
// Integrands are truncated once they fall below 1e-16 of their maximum.
const double kTruncLog = std::log(1e16);
constexpr double kResidualStep = 1e-4;
constexpr std::size_t kTableIntervals = 2000;  // spacing r_max / 2000

// Delta(r, v) = phi(r + v) - phi(r) with phi(s) = (a s^4 - 2 lambda s^2) / 8,
// expanded so that large r does not cancel.
double rd_delta(const RDConstants& c, double r, double v) {
    const double r2 = r * r;
    const double quartic = v * (4.0 * r2 * r + v * (6.0 * r2 + v * (4.0 * r + v)));
    const double quadratic = v * (2.0 * r + v);
    return (c.a * quartic - 2.0 * c.lambda_ * quadratic) / 8.0;
}

// First v > v_lo with g(v) <= g_max - kTruncLog, for g decreasing beyond v_lo.
template <typename G>
double truncation_point(G&& g, double v_lo, double g_max, double step) {
    double lo = v_lo;
    double hi = v_lo + step;
    while (g(hi) > g_max - kTruncLog) {
        lo = hi;
        step *= 2.0;
        hi = v_lo + step;
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > g_max - kTruncLog) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

void check_range(double r, double r_max) {
    if (!(r >= -1e-12 && r <= r_max * (1.0 + 1e-12))) {
        throw OutOfRange("LyapunovTable: r = " + std::to_string(r) + " outside [0, " +
                         std::to_string(r_max) + "]");
    }
}

double checked_exp(double log_value) {
    const double v = std::exp(log_value);
    if (!std::isfinite(v)) {
        throw Overflow("LyapunovTable: value exp(" + std::to_string(log_value) +
                       ") is not representable");
    }
    return v;
}

} // namespace

RDConstants dissipativity_constants(double alpha, double beta, double gamma, double delta) {
    (void)delta;  // a constant shift cancels in b(x) - b(y)
    if (!(alpha > 0.0)) throw PreconditionError("dissipativity_constants: alpha must be > 0");
    RDConstants c;
    c.a = alpha / 6.0;
    c.lambda_ = std::max(0.0, beta * beta / alpha + gamma - kPi2);
    return c;
}

double cutoff_drift_constant(double R, double gamma_interp, double c_sob) {
    if (!(R > 0.0)) throw PreconditionError("cutoff_drift_constant: R must be > 0");
    if (!(gamma_interp >= 4.0 / 7.0 - 1e-15 && gamma_interp <= 1.0)) {
        throw PreconditionError("cutoff_drift_constant: gamma_interp must lie in [4/7, 1]");
    }
    if (!(c_sob > 0.0)) throw PreconditionError("cutoff_drift_constant: c_sob must be > 0");
    const double beta = gamma_interp / 4.0;
    const double p = 6.0 * gamma_interp / (4.0 - gamma_interp);  // 2 alpha / (1 - beta)
    // Lipschitz/bound interpolation followed by |d|_4 <= c |d|^{3/4} ||d||^{1/4}.
    const double lip = c_sob * std::pow(2.0 * R, 2.0 - gamma_interp);
    // Young's inequality absorbing 1/2 ||d||^2.
    const double young = 0.5 * (1.0 - beta) *
                         std::pow(lip * std::pow(1.0 + beta, 0.5 * (1.0 + beta)),
                                  2.0 / (1.0 - beta));
    if (std::abs(p - 1.0) < 1e-12) return young;
    if (p < 2.0 - 1e-12) {
        // young * r^p <= (pi^2/4) r^2 + c_R r, with c_R the max of young r^{p-1} - (pi^2/4) r.
        const double r_star = std::pow(4.0 * young * (p - 1.0) / kPi2, 1.0 / (2.0 - p));
        return young * std::pow(r_star, p - 1.0) - 0.25 * kPi2 * r_star;
    }
    if (young <= 0.25 * kPi2) return 0.0;
    throw PreconditionError("cutoff_drift_constant: gamma_interp = 1 leaves no linear bound");
}

double rd_fprime_direct(const RDConstants& c, double r, double quad_tol) {
    const double r0 = c.lambda_ > 0.0 ? std::sqrt(c.lambda_ / c.a) : 0.0;
    const double v_star = std::max(0.0, r0 - r);
    const double d_star = rd_delta(c, r, v_star);
    auto g = [&](double v) { return -(rd_delta(c, r, v) - d_star); };
    const double v_end = truncation_point(g, v_star, 0.0, 0.1);
    auto integrand = [&](double v) { return std::exp(g(v)); };
    // The integrand peaks at 1, so its integral is comparable to the support length;
    // scaling the tolerance by it keeps the relative accuracy uniform in r.
    const double tol = quad_tol * std::min(1.0, v_end);
    double s = adaptive_simpson(integrand, v_star, v_end, tol);
    if (v_star > 0.0) s += adaptive_simpson(integrand, 0.0, v_star, tol);
    return 0.5 * std::exp(-d_star) * s;
}

double rd_f_direct(const RDConstants& c, double r, double quad_tol) {
    return adaptive_simpson([&](double s) { return rd_fprime_direct(c, s, 0.01 * quad_tol); }, 0.0,
                            r, quad_tol);
}

namespace {

// log f_R'(r) = log(1/2) + peak(r) + log_integral(r), with peak(r) the maximum of
// the exponent -a v^2 + c v over v >= 0 and c = b - 2 a r.
struct CutoffLogParts {
    double peak;
    double log_integral;
};

CutoffLogParts cutoff_log_parts(double a, double b, double r, double quad_tol) {
    const double c = b - 2.0 * a * r;
    const double v_star = c > 0.0 ? c / (2.0 * a) : 0.0;
    const double g_star = c > 0.0 ? c * c / (4.0 * a) : 0.0;
    // -a v^2 + c v - g_star, written without cancellation around the peak.
    auto g = [&](double v) {
        return c > 0.0 ? -a * (v - v_star) * (v - v_star) : -a * v * v + c * v;
    };
    const double v_end = c > 0.0 ? v_star + std::sqrt(kTruncLog / a)
                                 : (c + std::sqrt(c * c + 4.0 * a * kTruncLog)) / (2.0 * a);
    auto integrand = [&](double v) { return std::exp(g(v)); };
    const double tol = quad_tol * std::min(1.0, v_end - v_star);
    double s = adaptive_simpson(integrand, v_star, v_end, tol);
    if (v_star > 0.0) {
        const double v_begin = std::max(0.0, v_star - std::sqrt(kTruncLog / a));
        s += adaptive_simpson(integrand, v_begin, v_star, tol);
    }
    return {g_star, std::log(0.5 * s)};
}

// peak(r) - peak(0) in closed form; subtracting the two peaks directly would
// lose all precision once b^2 / (4a) is large.
double cutoff_peak_shift(double a, double b, double r) {
    const double c = b - 2.0 * a * r;
    if (c > 0.0) return r * (a * r - b);
    return -(b * b) / (4.0 * a);
}

} // namespace

double cutoff_log_fprime_direct(double a, double b, double r, double quad_tol) {
    const CutoffLogParts p = cutoff_log_parts(a, b, r, quad_tol);
    return p.peak + p.log_integral;
}

LyapunovTable build_f(const RDConstants& consts, double r_max, double quad_tol) {
    if (!(r_max > 0.0)) throw PreconditionError("build_f: r_max must be > 0");
    if (!(consts.a > 0.0) || consts.lambda_ < 0.0) {
        throw PreconditionError("build_f: need a > 0 and lambda >= 0");
    }
    const std::size_t n_int = kTableIntervals;
    const double h = r_max / static_cast<double>(n_int);

    std::vector<double> fp(n_int + 1), f(n_int + 1, 0.0);
    const double inner_tol = 1e-3 * quad_tol;
    for (std::size_t i = 0; i <= n_int; ++i) {
        fp[i] = rd_fprime_direct(consts, h * static_cast<double>(i), inner_tol);
    }
    auto fprime = [&](double s) { return rd_fprime_direct(consts, s, inner_tol); };
    const double panel_tol = quad_tol * h / r_max;
    for (std::size_t i = 1; i <= n_int; ++i) {
        const double lo = h * static_cast<double>(i - 1);
        f[i] = f[i - 1] + adaptive_simpson(fprime, lo, lo + h, panel_tol);
    }

    // f(inf) = f(r_max) + int_{r_max}^{r_far} f' + leading asymptotic tail of f' ~ 1/(a s^3 - lambda s).
    const double r_far = 1e3 * r_max;
    const double log_span = std::log(r_far / r_max);
    const double mid = adaptive_simpson(
        [&](double u) {
            const double s = r_max * std::exp(u);
            return fprime(s) * s;
        },
        0.0, log_span, quad_tol);
    const double tail =
        consts.lambda_ > 0.0
            ? std::log(consts.a * r_far * r_far / (consts.a * r_far * r_far - consts.lambda_)) /
                  (2.0 * consts.lambda_)
            : 1.0 / (2.0 * consts.a * r_far * r_far);

    LyapunovTable t;
    t.kind_ = LyapunovKind::ReactionDiffusion;
    t.rd_ = consts;
    t.r_max_ = r_max;
    t.spacing_ = h;
    t.log_scale_ = 0.0;
    t.f_inf_ = f.back() + mid + tail;
    t.log_Lambda_ = std::log(std::max(t.f_inf_, fp.front()));
    std::vector<double> log_fp(fp.size());
    std::transform(fp.begin(), fp.end(), log_fp.begin(), [](double v) { return std::log(v); });
    t.f_hat_ = CubicSpline(0.0, h, std::move(f));
    t.fprime_hat_ = CubicSpline(0.0, h, std::move(fp));
    t.log_fprime_ = CubicSpline(0.0, h, std::move(log_fp));
    return t;
}

LyapunovTable build_f_R(double R, double gamma_interp, double c_sob, double r_max,
                        double quad_tol) {
    if (!(r_max > 0.0)) throw PreconditionError("build_f_R: r_max must be > 0");
    const double c_R = cutoff_drift_constant(R, gamma_interp, c_sob);
    const double a = kPi2 / 16.0;
    const double b = 0.5 * c_R;
    const std::size_t n_int = kTableIntervals;
    const double h = r_max / static_cast<double>(n_int);
    const double inner_tol = 1e-3 * quad_tol;

    const CutoffLogParts at0 = cutoff_log_parts(a, b, 0.0, inner_tol);
    const double log_scale = at0.peak + at0.log_integral;
    // log(f_R'(s) / f_R'(0)), accurate even when log_scale is huge.
    auto log_ratio = [&](double s) {
        const CutoffLogParts p = cutoff_log_parts(a, b, s, inner_tol);
        return cutoff_peak_shift(a, b, s) + (p.log_integral - at0.log_integral);
    };
    std::vector<double> log_fp(n_int + 1), fp_hat(n_int + 1), f_hat(n_int + 1, 0.0);
    for (std::size_t i = 0; i <= n_int; ++i) {
        const double lr = log_ratio(h * static_cast<double>(i));
        fp_hat[i] = std::exp(lr);
        log_fp[i] = log_scale + lr;
    }
    // Past a shift of -800 the ratio underflows whatever the integral term is.
    auto fprime_hat = [&](double s) {
        return cutoff_peak_shift(a, b, s) < -800.0 ? 0.0 : std::exp(log_ratio(s));
    };
    const double panel_tol = quad_tol * h / r_max;
    for (std::size_t i = 1; i <= n_int; ++i) {
        const double lo = h * static_cast<double>(i - 1);
        f_hat[i] = f_hat[i - 1] + adaptive_simpson(fprime_hat, lo, lo + h, panel_tol);
    }

    LyapunovTable t;
    t.kind_ = LyapunovKind::BurgersCutoff;
    t.a_cut_ = a;
    t.c_R_ = c_R;
    t.R_ = R;
    t.gamma_interp_ = gamma_interp;
    t.r_max_ = r_max;
    t.spacing_ = h;
    t.log_scale_ = log_scale;
    // f_R grows logarithmically without bound; the table bound covers [0, r_max] only.
    t.f_inf_ = std::numeric_limits<double>::infinity();
    t.log_Lambda_ = log_scale + std::log(std::max(f_hat.back(), 1.0));
    t.f_hat_ = CubicSpline(0.0, h, std::move(f_hat));
    t.fprime_hat_ = CubicSpline(0.0, h, std::move(fp_hat));
    t.log_fprime_ = CubicSpline(0.0, h, std::move(log_fp));
    return t;
}

double LyapunovTable::tabulated(std::size_t i, Which which) const {
    const double v = which == Which::f ? f_hat_.values().at(i) : fprime_hat_.values().at(i);
    if (log_scale_ == 0.0) return v;
    if (which == Which::fprime && v < 1e-250) return checked_exp(log_fprime_.values().at(i));
    return v * checked_exp(log_scale_);
}

double LyapunovTable::Lambda() const { return checked_exp(log_Lambda_); }

double LyapunovTable::eval(double r, Which which) const {
    check_range(r, r_max_);
    r = std::clamp(r, 0.0, r_max_);
    if (which == Which::f) {
        const double v = f_hat_(r);
        return log_scale_ == 0.0 ? v : v * checked_exp(log_scale_);
    }
    const double v = fprime_hat_(r);
    if (log_scale_ == 0.0) return v;
    if (v < 1e-250) return checked_exp(log_fprime_(r));
    return v * checked_exp(log_scale_);
}

double LyapunovTable::eval_log(double r, Which which) const {
    check_range(r, r_max_);
    r = std::clamp(r, 0.0, r_max_);
    if (which == Which::f) return std::log(f_hat_(r)) + log_scale_;
    if (kind_ == LyapunovKind::BurgersCutoff) return log_fprime_(r);
    return std::log(fprime_hat_(r));
}

double LyapunovTable::ode_residual(double r) const {
    const double h = kResidualStep;
    if (!(r - h >= 0.0 && r + h <= r_max_)) {
        throw OutOfRange("ode_residual: r must be interior to the table");
    }
    const double g = fprime_hat_(r);
    const double dg = (fprime_hat_(r + h) - fprime_hat_(r - h)) / (2.0 * h);
    if (kind_ == LyapunovKind::ReactionDiffusion) {
        return dg - 0.5 * g * (rd_.a * r * r * r - rd_.lambda_ * r) + 0.5;
    }
    return dg - g * (2.0 * a_cut_ * r - 0.5 * c_R_) + 0.5 * std::exp(-log_scale_);
}

LyapunovTable LyapunovTable::with_scaled_fprime(double factor) const {
    LyapunovTable t = *this;
    std::vector<double> fp = fprime_hat_.values();
    std::vector<double> lfp = log_fprime_.values();
    for (double& v : fp) v *= factor;
    for (double& v : lfp) v += std::log(factor);
    t.fprime_hat_ = CubicSpline(0.0, spacing_, std::move(fp));
    t.log_fprime_ = CubicSpline(0.0, spacing_, std::move(lfp));
    return t;
}

void LyapunovTable::write_csv(std::ostream& os) const {
    const auto put = [&os](double v, char end) {
        std::array<char, 64> buf{};
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        os.write(buf.data(), res.ptr - buf.data());
        os.put(end);
    };
    os << "r,f,fprime\n";
    for (std::size_t i = 0; i < knot_count(); ++i) {
        put(knot(i), ',');
        put(f_hat_.values()[i], ',');
        put(fprime_hat_.values()[i], '\n');
    }
}

} // namespace spdecouple
