#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "spdecouple/errors.hpp"
#include "spdecouple/grid_noise.hpp"

using namespace spdecouple;

TEST(Grid, SpacingAndNodes) {
    const Grid g = make_grid(9);
    EXPECT_DOUBLE_EQ(g.dx, 0.1);
    Field u(g);
    EXPECT_DOUBLE_EQ(u.node(0), 0.1);
    EXPECT_DOUBLE_EQ(u.node(8), 0.9);
    EXPECT_THROW(make_grid(1), PreconditionError);
}

TEST(Norms, ConstantField) {
    const Grid g = make_grid(3);
    const Field u(g, {2.0, 2.0, 2.0});
    // dx = 1/4, three interior nodes.
    EXPECT_NEAR(norm(u, NormKind::L2), std::sqrt(0.25 * 12.0), 1e-15);
    EXPECT_NEAR(norm(u, NormKind::L4), std::pow(0.25 * 48.0, 0.25), 1e-15);
    // Jumps 2, 0, 0, -2 at the boundary ghosts.
    EXPECT_NEAR(norm(u, NormKind::H10), std::sqrt(8.0 / 0.25), 1e-13);
}

TEST(Norms, DiscreteSineModeHasUnitL2Norm) {
    const Grid g = make_grid(31);
    for (int k : {1, 5, 17}) {
        const Field e = sample_function(g, [k](double x) { return std::sqrt(2.0) * std::sin(k * std::numbers::pi * x); });
        EXPECT_NEAR(norm(e, NormKind::L2), 1.0, 1e-13);
        // |e_k|_{H10}^2 equals the discrete eigenvalue.
        const double lam = 4.0 / (g.dx * g.dx) * std::pow(std::sin(k * std::numbers::pi * g.dx / 2.0), 2);
        EXPECT_NEAR(std::pow(norm(e, NormKind::H10), 2), lam, 1e-9 * lam);
    }
}

TEST(Norms, PoincareInequality) {
    const Grid g = make_grid(40);
    const double lam1 = discrete_first_eigenvalue(g);
    NoiseStream s(3, 0);
    for (int trial = 0; trial < 50; ++trial) {
        Field u(g);
        s.next_normals(u.span());
        const double l2 = norm(u, NormKind::L2);
        const double h1 = norm(u, NormKind::H10);
        EXPECT_GE(h1 * h1, lam1 * l2 * l2 * (1.0 - 1e-12));
    }
}

TEST(Norms, InnerIsWeightedSum) {
    const Grid g = make_grid(4);
    const Field u(g, {1, 2, 3, 4});
    const Field v(g, {1, -1, 1, -1});
    EXPECT_NEAR(inner(u, v), 0.2 * (1 - 2 + 3 - 4), 1e-15);
}

TEST(DiscreteEigenvalue, ApproachesPiSquared) {
    EXPECT_NEAR(discrete_first_eigenvalue(make_grid(1023)), std::numbers::pi * std::numbers::pi, 1e-4);
    const Grid g = make_grid(15);
    EXPECT_NEAR(discrete_first_eigenvalue(g), 1024.0 * std::pow(std::sin(std::numbers::pi / 32.0), 2), 1e-12);
}

TEST(NoiseStream, CounterBasedAndReproducible) {
    NoiseStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::vector<double> va(16), vb(16), vc(16), vd(16);
    a.next_normals(va);
    b.next_normals(vb);
    c.next_normals(vc);
    d.next_normals(vd);
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
    EXPECT_EQ(a.counter(), 1u);
    a.next_normals(va);
    EXPECT_NE(va, vb);
}

TEST(NoiseStream, UniformsDoNotShiftNormals) {
    NoiseStream a(1, 0), b(1, 0);
    std::vector<double> va(8), vb(8);
    a.next_normals(va);
    b.next_normals(vb);
    for (int i = 0; i < 5; ++i) {
        const double u = a.next_uniform();
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
    a.next_normals(va);
    b.next_normals(vb);
    EXPECT_EQ(va, vb);
}

TEST(NoiseStream, NormalMoments) {
    NoiseStream s(11, 3);
    std::vector<double> v(200000);
    s.next_normals(v);
    double m = 0.0, m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        m += x;
        m2 += x * x;
        m4 += x * x * x * x;
    }
    const double n = static_cast<double>(v.size());
    m /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_NEAR(m, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(WhiteIncrement, EntryVarianceIsDtOverDx) {
    const Grid g = make_grid(9);
    const double dt = 1e-3;
    NoiseStream s(5, 1);
    double sum2 = 0.0;
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) {
        const Field w = sample_white_increment(g, dt, s);
        for (double x : w.values) sum2 += x * x;
    }
    const double n = reps * 9.0;
    EXPECT_NEAR(sum2 / n, dt / g.dx, 4.0 * std::sqrt(2.0 / n) * dt / g.dx);
}
