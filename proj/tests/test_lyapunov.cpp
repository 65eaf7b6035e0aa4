#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "spdecouple/errors.hpp"
#include "spdecouple/lyapunov.hpp"
#include "spdecouple/quadrature.hpp"

using namespace spdecouple;

namespace {

constexpr double kPi = std::numbers::pi;

// lambda = 0: f'(r) = 1/2 e^{a r^4/8} int_r^inf e^{-a s^4/8} ds
//                  = 1/8 (8/a)^{1/4} e^{a r^4/8} Gamma(1/4, a r^4/8).
double fprime_gamma(double a, double r) {
    const double x = a * r * r * r * r / 8.0;
    return 0.125 * std::pow(8.0 / a, 0.25) * std::exp(x) * boost::math::tgamma(0.25, x);
}

// log f_R'(r) = log(1/2) + a r^2 - b r + b^2/(4a) + log(sqrt(pi/a)/2) + log erfc(sqrt(a)(r - b/(2a))).
double log_fprime_erfc(double a, double b, double r) {
    return std::log(0.5) + a * r * r - b * r + b * b / (4 * a) + std::log(0.5 * std::sqrt(kPi / a)) +
           std::log(std::erfc(std::sqrt(a) * (r - b / (2 * a))));
}

} // namespace

TEST(Quadrature, AdaptiveSimpsonGaussian) {
    const double v = adaptive_simpson([](double x) { return std::exp(-x * x); }, 0.0, 6.0, 1e-12);
    EXPECT_NEAR(v, 0.5 * std::sqrt(kPi) * std::erf(6.0), 1e-11);
}

TEST(Quadrature, CubicSplineReproducesCubic) {
    std::vector<double> y;
    for (int i = 0; i <= 40; ++i) {
        const double x = 0.05 * i;
        y.push_back(x * x * x - 2 * x + 1);
    }
    const CubicSpline s(0.0, 0.05, y);
    for (double x : {0.013, 0.77, 1.49, 1.999}) {
        EXPECT_NEAR(s(x), x * x * x - 2 * x + 1, 1e-10);
        EXPECT_NEAR(s.derivative(x), 3 * x * x - 2, 1e-8);
    }
}

TEST(Dissipativity, Constants) {
    const RDConstants c = dissipativity_constants(1.0, 0.0, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(c.a, 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(c.lambda_, 0.0);
    const RDConstants d = dissipativity_constants(2.0, 4.0, 5.0, 1.0);
    EXPECT_DOUBLE_EQ(d.lambda_, 8.0 + 5.0 - kPi * kPi);
    EXPECT_THROW(dissipativity_constants(0.0, 0, 0, 0), PreconditionError);
}

TEST(Dissipativity, PointwiseCubicBound) {
    // (b(x) - b(y))(x - y) <= (beta^2/alpha + gamma) d^2 - alpha/6 d^4
    const double alpha = 1.5, beta = -0.7, gamma = 0.4;
    auto b = [&](double x) { return -alpha * x * x * x + beta * x * x + gamma * x; };
    for (double x = -3.0; x <= 3.0; x += 0.173) {
        for (double y = -3.0; y <= 3.0; y += 0.191) {
            const double d = x - y;
            EXPECT_LE((b(x) - b(y)) * d, (beta * beta / alpha + gamma) * d * d - alpha / 6 * d * d * d * d + 1e-12);
        }
    }
}

TEST(BuildF, FprimeAtZeroMatchesGammaFunction) {
    // a = 8: f'(0) = Gamma(5/4)/2.
    const LyapunovTable t8 = build_f(RDConstants{0.0, 8.0}, 6.0);
    EXPECT_NEAR(t8.eval(0.0, Which::fprime), std::tgamma(1.25) / 2.0, 1e-9);
    // a = 1/6: f'(0) = (48)^{1/4} Gamma(5/4) / 2.
    const LyapunovTable t = build_f(RDConstants{0.0, 1.0 / 6.0}, 12.0);
    EXPECT_NEAR(t.eval(0.0, Which::fprime), std::pow(48.0, 0.25) * std::tgamma(1.25) / 2.0, 1e-9);
}

TEST(BuildF, FprimeMatchesIncompleteGamma) {
    const double a = 1.0 / 6.0;
    const LyapunovTable t = build_f(RDConstants{0.0, a}, 12.0);
    for (double r : {0.3, 1.0, 2.5, 4.0, 7.0}) {
        EXPECT_NEAR(t.eval(r, Which::fprime), fprime_gamma(a, r), 1e-8 * fprime_gamma(a, r)) << "r = " << r;
    }
}

TEST(BuildF, FValuesMatchDirectQuadrature) {
    const RDConstants c{0.0, 1.0 / 6.0};
    const LyapunovTable t = build_f(c, 12.0);
    for (double r : {0.5, 1.0, 2.0, 5.0}) {
        // f(r) = int_0^r f'(s) ds with the incomplete-gamma f'.
        const double ref = adaptive_simpson([&](double s) { return fprime_gamma(c.a, s); }, 0.0, r, 1e-12);
        EXPECT_NEAR(t.eval(r, Which::f), ref, 1e-8) << "r = " << r;
        EXPECT_NEAR(rd_f_direct(c, r), ref, 1e-9);
    }
}

TEST(BuildF, PositiveLambdaDirectAgreement) {
    const RDConstants c = dissipativity_constants(1.0, 2.0, 8.0, 0.0);
    ASSERT_GT(c.lambda_, 0.0);
    const LyapunovTable t = build_f(c, 14.0);
    for (double r : {0.2, 1.0, 3.0, 6.0}) {
        const double ref = rd_fprime_direct(c, r);
        EXPECT_NEAR(t.eval(r, Which::fprime), ref, 1e-7 * ref);
    }
    for (std::size_t i = 0; i < t.knot_count(); i += 50) {
        const double r = t.knot(i);
        EXPECT_LT((c.a * r * r * r - c.lambda_ * r) * t.tabulated(i, Which::fprime), 1.0);
    }
}

TEST(BuildF, ShapeAndLimit) {
    const LyapunovTable t = build_f(RDConstants{0.0, 1.0 / 6.0}, 12.0);
    EXPECT_EQ(t.eval(0.0, Which::f), 0.0);
    double prev = t.tabulated(0, Which::fprime);
    for (std::size_t i = 1; i < t.knot_count(); ++i) {
        const double fp = t.tabulated(i, Which::fprime);
        ASSERT_GT(fp, 0.0);
        ASSERT_LT(fp, prev);
        prev = fp;
    }
    EXPECT_GE(t.f_infinity(), t.eval(12.0, Which::f));
    EXPECT_GE(t.Lambda(), t.f_infinity());
    EXPECT_GE(t.Lambda(), t.eval(0.0, Which::fprime));
    EXPECT_THROW(t.eval(12.5, Which::f), OutOfRange);
}

TEST(BuildF, OdeResidual) {
    const LyapunovTable t = build_f(RDConstants{0.0, 1.0 / 6.0}, 12.0);
    double worst = 0.0;
    for (double r = 0.01; r <= 10.0; r += 0.01) worst = std::max(worst, std::abs(t.ode_residual(r)));
    EXPECT_LE(worst, 1e-5);
}

TEST(BuildF, CsvHeaderAndRows) {
    const LyapunovTable t = build_f(RDConstants{0.0, 1.0 / 6.0}, 4.0);
    std::ostringstream os;
    t.write_csv(os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "r,f,fprime");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, t.knot_count());
}

TEST(Cutoff, DriftConstantGrowsWithR) {
    double prev = 0.0;
    for (double R : {0.5, 1.0, 2.0, 3.0, 10.0}) {
        const double c = cutoff_drift_constant(R, kDefaultGammaInterp, kDiscreteInterpolationConstant);
        EXPECT_GT(c, prev);
        prev = c;
    }
    EXPECT_THROW(cutoff_drift_constant(1.0, 0.5, 1.0), PreconditionError);
}

TEST(Cutoff, LogFprimeMatchesErfcForm) {
    for (double R : {1.0, 3.0}) {
        const LyapunovTable t = build_f_R(R);
        const double a = t.a_cutoff();
        const double b = t.c_R() / 2.0;
        EXPECT_DOUBLE_EQ(a, kPi * kPi / 16.0);
        for (double r : {0.0, 0.4, 1.0, 2.5}) {
            const double ref = log_fprime_erfc(a, b, r);
            EXPECT_NEAR(cutoff_log_fprime_direct(a, b, r), ref, 1e-9 * std::max(1.0, std::abs(ref)));
            EXPECT_NEAR(t.eval_log(r, Which::fprime), ref, 1e-7 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST(Cutoff, NormalizedResidualAndOverflow) {
    const LyapunovTable t = build_f_R(3.0);
    EXPECT_GT(t.log_scale(), 700.0);
    EXPECT_THROW(t.eval(1.0, Which::f), Overflow);
    EXPECT_TRUE(std::isfinite(t.eval_log(1.0, Which::f)));
    // Relative to the size of the terms g' ~ b g, g = f'/f'(0); spline end effects at
    // c_R ~ 170 put the absolute residual near r = 0 at a few 1e-4.
    const double b = t.c_R() / 2.0;
    double worst = 0.0;
    for (double r = 0.01; r <= 3.9; r += 0.01) {
        const double g = std::exp(t.eval_log(r, Which::fprime) - t.log_scale());
        worst = std::max(worst, std::abs(t.ode_residual(r)) / std::max(1.0, b * g));
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(Cutoff, SmallRTableIsRepresentable) {
    const LyapunovTable t = build_f_R(1.0, kDefaultGammaInterp, kDiscreteInterpolationConstant, 2.0);
    const double f1 = t.eval(1.0, Which::f);
    EXPECT_GT(f1, 0.0);
    EXPECT_NEAR(std::log(f1), t.eval_log(1.0, Which::f), 1e-10);
    // f_R is increasing in its argument.
    EXPECT_LT(t.eval(0.4, Which::f), t.eval(0.8, Which::f));
}
