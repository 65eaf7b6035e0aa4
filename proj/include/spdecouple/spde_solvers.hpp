#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "spdecouple/grid_noise.hpp"

namespace spdecouple {

struct ZeroDrift {};

/// b(x) = -alpha x^3 + beta x^2 + gamma x + delta, alpha > 0.
struct ReactionDiffusion {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
};

/// b(x) = D_xi(x^2).
struct BurgersDrift {};

/// b(x) = D_xi(F_R(x)), the L^4-ball truncation of the Burgers square.
struct CutoffBurgers {
    double R = 1.0;
};

using DriftSpec = std::variant<ZeroDrift, ReactionDiffusion, BurgersDrift, CutoffBurgers>;

/// Throws PreconditionError when alpha <= 0 or R <= 0.
void validate(const DriftSpec& spec);

enum class Scheme { SemiImplicitEuler };

struct SolverConfig {
    double dt = 1e-4;
    double blowup_guard = 1e3;  // cap on |X|_4
    Scheme scheme = Scheme::SemiImplicitEuler;
};

void validate(const SolverConfig& cfg);

/// Pointwise polynomial, or central-difference divergence form with zero ghost values.
Field drift_eval(const DriftSpec& spec, const Field& u);
void drift_eval(const DriftSpec& spec, const Field& u, Field& out);

/// F_R(u) = u^2 if |u|_4 <= R, else R^2 u^2 / |u|_4^2 (discrete L^4 norm).
Field cutoff_square(const Field& u, double R);

/// Linear-implicit Euler for dX = (A_h X + b(X)) dt + dW:
///   (I - dt A_h) u+ = u + dt b(u) + dW.
///
/// The tridiagonal factorization is computed once per (grid, dt). A stepper
/// owns scratch storage, so use one instance per worker thread.
class SemiImplicitStepper {
public:
    SemiImplicitStepper(const Grid& grid, const SolverConfig& cfg);

    const Grid& grid() const { return grid_; }
    const SolverConfig& config() const { return cfg_; }

    /// In-place step. Throws BlowUp if |u+|_4 exceeds the guard.
    void step(Field& u, const DriftSpec& spec, const Field& dW);

    /// rhs := u + dt b(u)
    void explicit_part(const Field& u, const DriftSpec& spec, Field& rhs);

    /// Overwrites rhs with (I - dt A_h)^{-1} rhs.
    void solve(Field& rhs) const;

    /// Throws BlowUp if |u|_4 > blowup_guard (or u is not finite).
    void check_guard(const Field& u) const;

private:
    Grid grid_;
    SolverConfig cfg_;
    double off_ = 0.0;                 // off-diagonal entry, -dt/dx^2
    std::vector<double> c_prime_;      // Thomas forward-sweep coefficients
    std::vector<double> inv_denom_;
    Field scratch_;
};

/// Convenience one-shot step (builds a stepper each call).
Field step_semi_implicit(const Field& u, const DriftSpec& spec, const SolverConfig& cfg,
                         const Field& dW);

/// Noiseless Burgers flow X^0(t_end; x0). The final step is shortened so the
/// integration lands exactly on t_end.
Field solve_deterministic_burgers(const Field& x0, double t_end, const SolverConfig& cfg);

enum class EigenKind { Continuous, Discrete };

/// Discrete sine basis e_k(x_i) = sqrt(2) sin(k pi x_i), orthonormal in the discrete L^2 product.
class SineBasis {
public:
    explicit SineBasis(const Grid& g);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return n_; }

    double eigenvalue(std::size_t k, EigenKind kind) const;  // k is 1-based
    Field mode(std::size_t k) const;

    std::vector<double> coefficients(const Field& u) const;
    Field synthesize(const std::vector<double>& coeffs) const;

private:
    Grid grid_;
    std::size_t n_;
    std::vector<double> table_;  // table_[(k-1)*n + i] = e_k(x_i)
};

/// Exact transition sampler of the linear equation dX = A X dt + dW, mode by mode.
///
/// Mode k moves as c_k e^{-lambda_k t} + N(0, (1 - e^{-2 lambda_k t}) / (2 lambda_k)).
/// Modes above K decay deterministically (no noise is injected there).
class OUSpectralSampler {
public:
    OUSpectralSampler(const Grid& g, std::size_t K, EigenKind kind);

    std::size_t mode_count() const { return K_; }
    double eigenvalue(std::size_t k) const { return basis_.eigenvalue(k, kind_); }
    double transition_variance(std::size_t k, double t) const;
    double stationary_variance(std::size_t k) const;
    const SineBasis& basis() const { return basis_; }

    Field sample(const Field& x0, double t, NoiseStream& stream) const;

private:
    SineBasis basis_;
    std::size_t K_;
    EigenKind kind_;
};

Field sample_ou_exact(const Field& x0, double t, std::size_t K, NoiseStream& stream,
                      EigenKind kind = EigenKind::Discrete);

} // namespace spdecouple
