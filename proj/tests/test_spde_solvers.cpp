#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "spdecouple/errors.hpp"
#include "spdecouple/spde_solvers.hpp"

using namespace spdecouple;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd implicit_matrix(const Grid& g, double dt) {
    const auto n = static_cast<Eigen::Index>(g.n_interior);
    const double k = dt / (g.dx * g.dx);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = 1.0 + 2.0 * k;
        if (i > 0) m(i, i - 1) = -k;
        if (i + 1 < n) m(i, i + 1) = -k;
    }
    return m;
}

Eigen::VectorXd to_eigen(const Field& u) { return Eigen::Map<const Eigen::VectorXd>(u.values.data(), u.size()); }

} // namespace

TEST(Drift, Zero) {
    const Grid g = make_grid(5);
    const Field u(g, {1, 2, 3, 4, 5});
    EXPECT_EQ(drift_eval(ZeroDrift{}, u).values, std::vector<double>(5, 0.0));
}

TEST(Drift, ReactionDiffusionCubic) {
    const Grid g = make_grid(4);
    const Field u(g, {2, 2, 2, 2});
    for (double v : drift_eval(ReactionDiffusion{1, 0, 0, 0}, u).values) EXPECT_DOUBLE_EQ(v, -8.0);
    const Field w(g, {1, -1, 0.5, 0});
    const Field b = drift_eval(ReactionDiffusion{2, 1, -3, 0.5}, w);
    for (std::size_t i = 0; i < 4; ++i) {
        const double x = w[i];
        EXPECT_NEAR(b[i], -2 * x * x * x + x * x - 3 * x + 0.5, 1e-15);
    }
}

TEST(Drift, BurgersConstantOnlyTouchesBoundaryNeighbours) {
    const Grid g = make_grid(7);
    const double c = 1.5;
    const Field u(g, std::vector<double>(7, c));
    const Field b = drift_eval(BurgersDrift{}, u);
    EXPECT_NEAR(b[0], c * c / (2 * g.dx), 1e-12);
    EXPECT_NEAR(b[6], -c * c / (2 * g.dx), 1e-12);
    for (std::size_t i = 1; i < 6; ++i) EXPECT_EQ(b[i], 0.0);
}

TEST(Drift, CutoffBelowThresholdMatchesBurgers) {
    const Grid g = make_grid(9);
    const Field u = sample_function(g, [](double x) { return 0.3 * std::sin(kPi * x) + 0.1 * x; });
    const Field a = drift_eval(BurgersDrift{}, u);
    const Field b = drift_eval(CutoffBurgers{5.0}, u);
    EXPECT_EQ(a.values, b.values);
}

TEST(Drift, ValidateRejectsBadParameters) {
    EXPECT_THROW(validate(ReactionDiffusion{0.0, 0, 0, 0}), PreconditionError);
    EXPECT_THROW(validate(CutoffBurgers{0.0}), PreconditionError);
    EXPECT_NO_THROW(validate(BurgersDrift{}));
}

TEST(CutoffSquare, Examples) {
    const Grid g = make_grid(15);
    EXPECT_EQ(cutoff_square(Field(g), 1.0).values, std::vector<double>(15, 0.0));
    const Field ones(g, std::vector<double>(15, 1.0));
    const Field below = cutoff_square(ones, 2.0);
    for (double v : below.values) EXPECT_DOUBLE_EQ(v, 1.0);
    const Field fours(g, std::vector<double>(15, 4.0));
    const double l4 = norm(fours, NormKind::L4);
    const Field above = cutoff_square(fours, 2.0);
    for (double v : above.values) EXPECT_NEAR(v, 4.0 * 16.0 / (l4 * l4), 1e-12);
    EXPECT_NEAR(norm(above, NormKind::L2), 4.0, 1e-12);
    EXPECT_THROW(cutoff_square(ones, -1.0), PreconditionError);
}

TEST(Stepper, ZeroStaysZero) {
    const Grid g = make_grid(8);
    const SolverConfig cfg{1e-3, 1e3, Scheme::SemiImplicitEuler};
    const Field u = step_semi_implicit(Field(g), ZeroDrift{}, cfg, Field(g));
    EXPECT_EQ(u.values, std::vector<double>(8, 0.0));
}

TEST(Stepper, SineModeIsEigenvector) {
    const Grid g = make_grid(31);
    const double dt = 1e-3;
    const SolverConfig cfg{dt, 1e3, Scheme::SemiImplicitEuler};
    const Field u = sample_function(g, [](double x) { return std::sin(kPi * x); });
    const Field v = step_semi_implicit(u, ZeroDrift{}, cfg, Field(g));
    const double factor = 1.0 / (1.0 + dt * discrete_first_eigenvalue(g));
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(v[i], factor * u[i], 1e-14);
}

TEST(Stepper, MatchesDenseSolve) {
    const Grid g = make_grid(20);
    const double dt = 2e-3;
    const SolverConfig cfg{dt, 1e3, Scheme::SemiImplicitEuler};
    // u = 0 with constant forcing delta: rhs = dt delta 1.
    const Field u = step_semi_implicit(Field(g), ReactionDiffusion{1, 0, 0, 0.7}, cfg, Field(g));
    const Eigen::VectorXd expect = implicit_matrix(g, dt).lu().solve(Eigen::VectorXd::Constant(20, dt * 0.7));
    EXPECT_LT((to_eigen(u) - expect).cwiseAbs().maxCoeff(), 1e-14);

    // General state with Burgers drift and noise.
    NoiseStream s(2, 0);
    Field x(g), dW(g);
    s.next_normals(x.span());
    s.next_normals(dW.span());
    const Field y = step_semi_implicit(x, BurgersDrift{}, cfg, dW);
    const Eigen::VectorXd rhs = to_eigen(x) + dt * to_eigen(drift_eval(BurgersDrift{}, x)) + to_eigen(dW);
    const Eigen::VectorXd ref = implicit_matrix(g, dt).lu().solve(rhs);
    EXPECT_LT((to_eigen(y) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stepper, BlowUpIsThrownNotClipped) {
    const Grid g = make_grid(8);
    const SolverConfig cfg{1e-3, 1.0, Scheme::SemiImplicitEuler};
    const Field big(g, std::vector<double>(8, 10.0));
    EXPECT_THROW(step_semi_implicit(big, ZeroDrift{}, cfg, Field(g)), BlowUp);
}

TEST(DeterministicBurgers, ZeroAndEndpoint) {
    const Grid g = make_grid(31);
    const SolverConfig cfg{1e-3, 1e3, Scheme::SemiImplicitEuler};
    EXPECT_EQ(solve_deterministic_burgers(Field(g), 0.5, cfg).values, std::vector<double>(31, 0.0));
    const Field x0 = sample_function(g, [](double x) { return std::sin(kPi * x); });
    EXPECT_EQ(solve_deterministic_burgers(x0, 0.0, cfg).values, x0.values);
}

TEST(DeterministicBurgers, L4DecayBound) {
    const Grid g = make_grid(255);
    const SolverConfig cfg{1e-4, 1e3, Scheme::SemiImplicitEuler};
    const Field x0 = sample_function(g, [](double x) { return std::sin(kPi * x); });
    const double n0 = std::pow(norm(x0, NormKind::L4), 4);
    for (double t : {0.1, 0.5, 1.0}) {
        const double nt = std::pow(norm(solve_deterministic_burgers(x0, t, cfg), NormKind::L4), 4);
        EXPECT_LE(nt, std::exp(-kPi * kPi * t / 4.0) * n0 * 1.05) << "t = " << t;
    }
}

TEST(BurgersPairing, VanishesAtSecondOrder) {
    std::vector<double> p;
    for (std::size_t n : {63u, 127u, 255u}) {
        const Grid g = make_grid(n);
        const Field u = sample_function(g, [](double x) { return std::sin(kPi * x) + 0.7 * std::sin(2 * kPi * x) + 0.3 * x * (1 - x); });
        const Field b = drift_eval(BurgersDrift{}, u);
        Field u3(g);
        for (std::size_t i = 0; i < n; ++i) u3[i] = u[i] * u[i] * u[i];
        p.push_back(std::abs(inner(b, u3)));
    }
    EXPECT_GE(std::log2(p[0] / p[1]), 1.8);
    EXPECT_GE(std::log2(p[1] / p[2]), 1.8);
}

TEST(SineBasis, OrthonormalAndRoundTrip) {
    const Grid g = make_grid(12);
    const SineBasis b(g);
    for (std::size_t j = 1; j <= 12; ++j) {
        for (std::size_t k = 1; k <= 12; ++k) {
            EXPECT_NEAR(inner(b.mode(j), b.mode(k)), j == k ? 1.0 : 0.0, 1e-13);
        }
    }
    NoiseStream s(1, 1);
    Field u(g);
    s.next_normals(u.span());
    const Field back = b.synthesize(b.coefficients(u));
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(back[i], u[i], 1e-13);
    EXPECT_NEAR(b.eigenvalue(3, EigenKind::Continuous), 9 * kPi * kPi, 1e-12);
}

TEST(OUSampler, ZeroTimeIsIdentity) {
    const Grid g = make_grid(10);
    const OUSpectralSampler ou(g, 10, EigenKind::Discrete);
    const Field x0 = sample_function(g, [](double x) { return x * (1 - x); });
    NoiseStream s(4, 0);
    const Field y = ou.sample(x0, 0.0, s);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(y[i], x0[i], 1e-14);
    EXPECT_EQ(ou.transition_variance(3, 0.0), 0.0);
}

TEST(OUSampler, TransitionVarianceClosedForm) {
    const OUSpectralSampler ou(make_grid(16), 16, EigenKind::Continuous);
    const double lam = kPi * kPi * 4.0;
    EXPECT_NEAR(ou.transition_variance(2, 0.1), (1 - std::exp(-2 * lam * 0.1)) / (2 * lam), 1e-15);
    EXPECT_LT(ou.transition_variance(2, 0.01), ou.transition_variance(2, 0.02));
    EXPECT_NEAR(ou.stationary_variance(2), 1 / (2 * lam), 1e-15);
}

TEST(OUSampler, ModeOneMeanAndStationaryVariance) {
    const Grid g = make_grid(8);
    const OUSpectralSampler ou(g, 8, EigenKind::Discrete);
    const SineBasis& b = ou.basis();
    const Field x0 = b.mode(1);
    const double t = 0.05;
    const std::size_t M = 100000;
    double s1 = 0.0;
    double s3 = 0.0, s33 = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        NoiseStream s(9, i);
        const Field y = ou.sample(x0, t, s);
        s1 += inner(y, b.mode(1));
        const Field z = ou.sample(Field(g), 50.0, s);
        const double c = inner(z, b.mode(3));
        s3 += c;
        s33 += c * c;
    }
    const double m = static_cast<double>(M);
    const double se1 = std::sqrt(ou.transition_variance(1, t) / m);
    EXPECT_NEAR(s1 / m, std::exp(-ou.eigenvalue(1) * t), 3 * se1);
    const double v3 = ou.stationary_variance(3);
    EXPECT_NEAR(s33 / m - (s3 / m) * (s3 / m), v3, 3 * v3 * std::sqrt(2.0 / m));
}
