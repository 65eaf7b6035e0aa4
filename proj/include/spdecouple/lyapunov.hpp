#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spdecouple/quadrature.hpp"

namespace spdecouple {

/// One-sided bound (A d + b(x) - b(y), d) <= lambda |d|^2 - a |d|^4.
struct RDConstants {
    double lambda_ = 0.0;
    double a = 1.0;
};

/// Constants for b(x) = -alpha x^3 + beta x^2 + gamma x + delta on (0,1).
///
/// For p(s) = b(s): p'(s) <= -2 alpha s^2 + (beta^2/alpha + gamma). Writing
/// b(x) - b(y) = (x - y) * int_0^1 p'(y + t(x - y)) dt and using
///   int_0^1 (y + t(x - y))^2 dt >= (x - y)^2 / 12
/// gives pointwise (b(x) - b(y))(x - y) <= (beta^2/alpha + gamma) d^2 - (alpha/6) d^4.
/// Integrating over (0,1), (A d, d) <= -pi^2 |d|^2 and |d|_4^4 >= |d|^4 yield
///   lambda = max(0, beta^2/alpha + gamma - pi^2),  a = alpha / 6.
RDConstants dissipativity_constants(double alpha, double beta, double gamma, double delta);

/// Sup of |u|_4 / (|u|_2^{3/4} ||u||^{1/4}) over discrete fields, found by
/// local ascent from grid-scale spikes and sech profiles at n = 1023 and rounded up.
inline constexpr double kDiscreteInterpolationConstant = 0.9372;

inline constexpr double kDefaultGammaInterp = 4.0 / 7.0;

/// Constant c_R of the cut-off drift bound
///   (A d + D F_R(x) - D F_R(y), d) <= -(pi^2/4) |d|^2 + c_R |d|.
double cutoff_drift_constant(double R, double gamma_interp, double c_sob);

enum class LyapunovKind { ReactionDiffusion, BurgersCutoff };

enum class Which { f, fprime };

/// Tabulated Lyapunov function on [0, r_max].
///
/// Values are stored relative to a scale factor exp(log_scale) so the cut-off
/// variant, whose magnitude grows like exp(c_R^2 / (16 a)), stays representable.
/// The reaction-diffusion table has log_scale = 0.
class LyapunovTable {
public:
    LyapunovKind kind() const { return kind_; }

    // Reaction-diffusion parameters.
    const RDConstants& rd_constants() const { return rd_; }

    // Cut-off parameters: a = pi^2/16, the drift constant c_R, R and the
    // interpolation exponents alpha = 3 gamma / 4, beta = gamma / 4.
    double a_cutoff() const { return a_cut_; }
    double c_R() const { return c_R_; }
    double R() const { return R_; }
    double gamma_interp() const { return gamma_interp_; }
    double interp_alpha() const { return 0.75 * gamma_interp_; }
    double interp_beta() const { return 0.25 * gamma_interp_; }

    double r_max() const { return r_max_; }
    std::size_t knot_count() const { return f_hat_.values().size(); }
    double knot(std::size_t i) const { return spacing_ * static_cast<double>(i); }
    double log_scale() const { return log_scale_; }

    /// Tabulated value at knot i (exactly what eval() returns there).
    double tabulated(std::size_t i, Which which) const;

    /// Finite limit f(infinity) (reaction-diffusion kind).
    double f_infinity() const { return f_inf_; }
    /// Bound Lambda >= sup f, sup f'. Throws Overflow if not representable.
    double Lambda() const;
    double log_Lambda() const { return log_Lambda_; }

    /// Cubic interpolation of the table. Throws OutOfRange outside [0, r_max],
    /// Overflow if the cut-off value is not representable as a double.
    double eval(double r, Which which) const;
    /// Natural log of eval(); finite whenever the value is positive.
    double eval_log(double r, Which which) const;

    /// Residual of the first-order ODE for g = f' using a central difference
    /// of the interpolated f' (step 1e-4):
    ///   RD:      g' - g (a r^3 - lambda r)/2 + 1/2
    ///   cut-off: (g' - g (2 a r - c_R/2) + 1/2) / f'(0)
    double ode_residual(double r) const;

    /// Same table with every f' value multiplied by `factor` (sensitivity checks).
    LyapunovTable with_scaled_fprime(double factor) const;

    /// CSV with header r,f,fprime at the knots, values divided by exp(log_scale).
    void write_csv(std::ostream& os) const;

private:
    friend LyapunovTable build_f(const RDConstants&, double, double);
    friend LyapunovTable build_f_R(double, double, double, double, double);

    LyapunovKind kind_ = LyapunovKind::ReactionDiffusion;
    RDConstants rd_{};
    double a_cut_ = 0.0;
    double c_R_ = 0.0;
    double R_ = 0.0;
    double gamma_interp_ = 0.0;
    double r_max_ = 0.0;
    double spacing_ = 0.0;
    double log_scale_ = 0.0;
    double f_inf_ = 0.0;
    double log_Lambda_ = 0.0;
    CubicSpline f_hat_;
    CubicSpline fprime_hat_;
    CubicSpline log_fprime_;
};

/// f(r) = 1/2 int_0^r e^{phi(s)} int_s^inf e^{-phi(sigma)} dsigma ds,
/// phi(s) = (a s^4 - 2 lambda s^2) / 8, tabulated with spacing <= r_max/2000.
LyapunovTable build_f(const RDConstants& consts, double r_max, double quad_tol = 1e-10);

/// f_R(r) = 1/2 int_0^r e^{a s^2 - b s} int_s^inf e^{-a xi^2 + b xi} dxi ds,
/// a = pi^2/16, b = c_R/2, evaluated in the log domain.
LyapunovTable build_f_R(double R, double gamma_interp = kDefaultGammaInterp,
                        double c_sob = kDiscreteInterpolationConstant, double r_max = 4.0,
                        double quad_tol = 1e-10);

/// Direct (untabulated) evaluation of f'(r) for the reaction-diffusion kind.
double rd_fprime_direct(const RDConstants& consts, double r, double quad_tol = 1e-13);
/// Direct evaluation of f(r) for the reaction-diffusion kind.
double rd_f_direct(const RDConstants& consts, double r, double quad_tol = 1e-12);
/// log f_R'(r) evaluated directly by log-domain quadrature.
double cutoff_log_fprime_direct(double a, double b, double r, double quad_tol = 1e-13);

} // namespace spdecouple
