#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spdecouple/lyapunov.hpp"
#include "spdecouple/reflection_coupling.hpp"
#include "spdecouple/stats.hpp"

namespace spdecouple {

struct SurvivalPoint {
    double t = 0.0;
    BinomialCI p;  // P(tau >= t)
};

/// Empirical P(tau >= t) on `times`. Censored samples count as surviving up to
/// their horizon; times past a censoring horizon are not reported.
std::vector<SurvivalPoint> survival_curve(std::span<const CouplingOutcome> outcomes,
                                          std::span<const double> times, double level = 0.95);

/// t_j = j t_max / points, j = 0..points.
std::vector<double> uniform_times(double t_max, std::size_t points);

struct TauStats {
    std::size_t samples = 0;
    std::size_t censored = 0;
    std::size_t blowups = 0;
    MeanCI mean;  // over uncensored samples
    std::vector<SurvivalPoint> survival;

    double lambda = 0.0;          // Lambda of the table
    double distance = 0.0;        // |x1 - x2|_2
    double f_bound = 0.0;         // f(|x1 - x2|), the mean bound
    double exp_moment = 0.0;      // mean of e^{tau/(2 Lambda^2)} over uncensored samples
    double exp_moment_lower = 0.0;  // same with censored samples at their horizon (a lower bound)
    double exp_bound_proof = 0.0;   // e^{f(|x1 - x2|)/(2 Lambda^2)}
    double exp_bound_display = 0.0; // e^{1/Lambda}
    double tail_rate = 0.0;       // fitted decay of log P(tau >= t) in t (NaN if not fittable)
    double tail_goodness = 0.0;
};

/// Throws InsufficientData with fewer than 30 uncensored samples.
TauStats estimate_tau_stats(std::span<const CouplingOutcome> outcomes, const LyapunovTable& table,
                            double distance, std::span<const double> times);

/// Survival envelope e^{f/(2 Lambda^2)} e^{-t/(2 Lambda^2)}.
double tail_envelope(double f_value, double lambda, double t);

struct TailViolation {
    double t = 0.0;
    double p_lo = 0.0;
    double envelope = 0.0;
};

/// Times where even the lower CI end of P(tau >= t) exceeds the envelope.
std::vector<TailViolation> tail_check(const TauStats& stats);

/// Bounded cylindrical test function with its sup norm.
struct TestFunction {
    std::string name;
    std::function<double(const Field&)> phi;
    double sup_norm = 1.0;
};

/// (1 + tanh(<x, e_1>))/2 and exp(-|x|_2^2); both take values in [0, 1].
std::vector<TestFunction> builtin_test_functions(const Grid& g);

/// phi(X1(t)) - phi(X2(t)) per trajectory and observation time; zero once merged.
struct TvObservations {
    std::vector<double> times;
    std::vector<std::vector<double>> diff;  // diff[j][i]: time j, trajectory i
};

struct TvRow {
    std::string function;
    double t = 0.0;
    double mean_diff = 0.0;
    double diff_se = 0.0;
    double bound = 0.0;     // ||phi||_0 P(tau >= t)
    double bound_hi = 0.0;  // with the upper CI end of P(tau >= t)
    bool violation = false; // |mean| - z se > bound_hi
};

std::vector<TvRow> tv_check(const std::vector<TvObservations>& per_function,
                            const std::vector<TestFunction>& functions,
                            std::span<const CouplingOutcome> outcomes, double level = 0.95);

struct GeneratorResult {
    std::string name;
    double estimate = 0.0;    // (E f(|D(dt)|) - f(|d0|)) / dt
    double std_error = 0.0;
    double prediction = 0.0;  // 2 f''(|d|) + f'(|d|)/|d| <A d + b(x1) - b(x2), d>
    double residual = 0.0;
    double z = 0.0;           // residual / std_error
};

/// Scalar function of r with its first two derivatives.
struct RadialFunction {
    std::function<double(double)> f, fp, fpp;
};

RadialFunction square_function();
/// f, f' from the table; f'' from the defining ODE f'' = f'(a r^3 - lambda r)/2 - 1/2.
RadialFunction lyapunov_function(const LyapunovTable& table);

/// One-step Monte Carlo estimate of the coupled generator applied to f(|x1 - x2|),
/// using the pure reflection step, against the closed-form prediction.
GeneratorResult generator_check(const std::string& name, const Field& x1, const Field& x2,
                                const DriftSpec& spec, const SolverConfig& cfg,
                                const RadialFunction& f, std::size_t M, std::uint64_t seed,
                                std::size_t threads);

} // namespace spdecouple
