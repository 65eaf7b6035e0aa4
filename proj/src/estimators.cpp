#include "spdecouple/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spdecouple/errors.hpp"
#include "spdecouple/parallel.hpp"

namespace spdecouple {

std::vector<double> uniform_times(double t_max, std::size_t points) {
    if (points == 0) throw PreconditionError("uniform_times: need at least one interval");
    std::vector<double> t(points + 1);
    for (std::size_t j = 0; j <= points; ++j) {
        t[j] = t_max * static_cast<double>(j) / static_cast<double>(points);
    }
    return t;
}

std::vector<SurvivalPoint> survival_curve(std::span<const CouplingOutcome> outcomes,
                                          std::span<const double> times, double level) {
    if (outcomes.empty()) throw InsufficientData("survival_curve: no outcomes");
    double horizon = std::numeric_limits<double>::infinity();
    for (const auto& o : outcomes) {
        if (o.censored) horizon = std::min(horizon, o.tau);
    }
    std::vector<SurvivalPoint> curve;
    for (double t : times) {
        if (t > horizon * (1.0 + 1e-12)) break;
        std::size_t alive = 0;
        for (const auto& o : outcomes) alive += (o.censored || o.tau >= t) ? 1 : 0;
        curve.push_back({t, clopper_pearson(alive, outcomes.size(), level)});
    }
    return curve;
}

double tail_envelope(double f_value, double lambda, double t) {
    return std::exp((f_value - t) / (2.0 * lambda * lambda));
}

TauStats estimate_tau_stats(std::span<const CouplingOutcome> outcomes, const LyapunovTable& table,
                            double distance, std::span<const double> times) {
    TauStats s;
    s.samples = outcomes.size();
    std::vector<double> taus;
    for (const auto& o : outcomes) {
        s.censored += o.censored ? 1 : 0;
        s.blowups += o.blowup ? 1 : 0;
        if (!o.censored) taus.push_back(o.tau);
    }
    if (taus.size() < 30) {
        throw InsufficientData("estimate_tau_stats: " + std::to_string(taus.size()) +
                               " uncensored samples, need 30");
    }
    s.mean = mean_ci(taus);
    s.survival = survival_curve(outcomes, times);

    s.lambda = table.Lambda();
    s.distance = distance;
    s.f_bound = table.eval(distance, Which::f);
    const double scale = 1.0 / (2.0 * s.lambda * s.lambda);
    double em = 0.0;
    for (double t : taus) em += std::exp(t * scale);
    s.exp_moment = em / static_cast<double>(taus.size());
    double lower = em;
    for (const auto& o : outcomes) {
        if (o.censored) lower += std::exp(o.tau * scale);
    }
    s.exp_moment_lower = lower / static_cast<double>(outcomes.size());
    s.exp_bound_proof = std::exp(s.f_bound * scale);
    s.exp_bound_display = std::exp(1.0 / s.lambda);

    std::vector<double> ts, ps;
    for (const auto& sp : s.survival) {
        ts.push_back(sp.t);
        ps.push_back(sp.p.p_hat);
    }
    s.tail_rate = std::numeric_limits<double>::quiet_NaN();
    s.tail_goodness = std::numeric_limits<double>::quiet_NaN();
    try {
        const DecayFit fit = fit_decay(ts, ps);
        s.tail_rate = fit.rate;
        s.tail_goodness = fit.goodness;
    } catch (const DegenerateFit&) {
    }
    return s;
}

std::vector<TailViolation> tail_check(const TauStats& stats) {
    std::vector<TailViolation> v;
    for (const auto& sp : stats.survival) {
        const double env = tail_envelope(stats.f_bound, stats.lambda, sp.t);
        if (sp.p.lo > env) v.push_back({sp.t, sp.p.lo, env});
    }
    return v;
}

std::vector<TestFunction> builtin_test_functions(const Grid& g) {
    const Field e1 = SineBasis(g).mode(1);
    return {
        {"tanh_mode1", [e1](const Field& x) { return 0.5 * (1.0 + std::tanh(inner(x, e1))); }, 1.0},
        {"exp_l2sq",
         [](const Field& x) {
             const double r = norm(x, NormKind::L2);
             return std::exp(-r * r);
         },
         1.0},
    };
}

std::vector<TvRow> tv_check(const std::vector<TvObservations>& per_function,
                            const std::vector<TestFunction>& functions,
                            std::span<const CouplingOutcome> outcomes, double level) {
    if (per_function.size() != functions.size()) throw PreconditionError("tv_check: size mismatch");
    const double z = normal_two_sided_z(level);
    std::vector<TvRow> rows;
    for (std::size_t f = 0; f < functions.size(); ++f) {
        const auto& obs = per_function[f];
        const auto surv = survival_curve(outcomes, obs.times, level);
        for (std::size_t j = 0; j < surv.size(); ++j) {
            const MeanCI m = mean_ci(obs.diff.at(j), level);
            TvRow r;
            r.function = functions[f].name;
            r.t = obs.times[j];
            r.mean_diff = m.mean;
            r.diff_se = m.std_error;
            r.bound = functions[f].sup_norm * surv[j].p.p_hat;
            r.bound_hi = functions[f].sup_norm * surv[j].p.hi;
            r.violation = std::abs(m.mean) - z * m.std_error > r.bound_hi;
            rows.push_back(r);
        }
    }
    return rows;
}

RadialFunction square_function() {
    return {[](double r) { return r * r; }, [](double r) { return 2.0 * r; },
            [](double) { return 2.0; }};
}

RadialFunction lyapunov_function(const LyapunovTable& table) {
    if (table.kind() != LyapunovKind::ReactionDiffusion) {
        throw PreconditionError("lyapunov_function: reaction-diffusion table required");
    }
    const RDConstants c = table.rd_constants();
    return {[&table](double r) { return table.eval(r, Which::f); },
            [&table](double r) { return table.eval(r, Which::fprime); },
            [&table, c](double r) {
                return 0.5 * table.eval(r, Which::fprime) * (c.a * r * r * r - c.lambda_ * r) - 0.5;
            }};
}

GeneratorResult generator_check(const std::string& name, const Field& x1, const Field& x2,
                                const DriftSpec& spec, const SolverConfig& cfg,
                                const RadialFunction& f, std::size_t M, std::uint64_t seed,
                                std::size_t threads) {
    if (M < 2) throw PreconditionError("generator_check: M must be >= 2");
    validate(spec);
    GeneratorResult res;
    res.name = name;
    const Field d = x1 - x2;
    const double r0 = norm(d, NormKind::L2);
    if (r0 == 0.0) return res;

    const Field b_diff = drift_eval(spec, x1) - drift_eval(spec, x2);
    const double h1 = norm(d, NormKind::H10);
    const double pairing = -h1 * h1 + inner(b_diff, d);
    res.prediction = 2.0 * f.fpp(r0) + f.fp(r0) / r0 * pairing;

    const CouplingOptions opts{0.0, MeetingRule::SnapOnly};
    const double f0 = f.f(r0);
    const std::size_t chunk = 1000;
    const std::size_t n_chunks = (M + chunk - 1) / chunk;
    const auto sums = parallel_map(n_chunks, resolve_threads(threads), [&](std::size_t c) {
        CoupledStepper stepper(x1.grid, cfg);
        Field dW1(x1.grid), dW2(x1.grid);
        double s = 0.0, ss = 0.0;
        const std::size_t end = std::min(M, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
            StreamPair streams = StreamPair::for_trajectory(seed, i);
            sample_white_increment(dW1, cfg.dt, streams.first);
            sample_white_increment(dW2, cfg.dt, streams.second);
            CoupledPair pair = CoupledPair::start(x1, x2, 0.0);
            stepper.step(pair, spec, dW1, dW2, 0.5, opts);
            const double v = (f.f(norm(pair.x1 - pair.x2, NormKind::L2)) - f0) / cfg.dt;
            s += v;
            ss += v * v;
        }
        return std::pair<double, double>{s, ss};
    });
    double s = 0.0, ss = 0.0;
    for (const auto& [a, b] : sums) {
        s += a;
        ss += b;
    }
    const double m = static_cast<double>(M);
    res.estimate = s / m;
    const double var = std::max(0.0, (ss - m * res.estimate * res.estimate) / (m - 1.0));
    res.std_error = std::sqrt(var / m);
    res.residual = res.estimate - res.prediction;
    res.z = res.std_error > 0.0 ? res.residual / res.std_error : 0.0;
    return res;
}

} // namespace spdecouple
