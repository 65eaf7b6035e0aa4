#include "spdecouple/burgers_staged.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spdecouple/errors.hpp"
#include "spdecouple/lyapunov.hpp"
#include "spdecouple/parallel.hpp"

namespace spdecouple {

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double l4(const Field& u) { return norm(u, NormKind::L4); }

double l4_pow4(const Field& u) {
    const double v = l4(u);
    return v * v * v * v;
}

} // namespace

double wait_time(double rho0, double rho1) {
    if (!(rho1 > 0.0) || !(rho0 >= rho1)) {
        throw PreconditionError("wait_time: need 0 < rho1 <= rho0");
    }
    return (16.0 / kPi2) * std::log(2.0 * rho0 / rho1);
}

StagedParams StagedParams::with_defaults() const {
    StagedParams p = *this;
    if (p.T0 == 0.0) p.T0 = wait_time(p.rho0, p.rho1);
    if (p.T == 0.0) p.T = p.T0 + 1.0;
    return p;
}

void StagedParams::validate() const {
    if (!(rho0 > 0.0 && rho1 > 0.0)) throw PreconditionError("StagedParams: rho0, rho1 must be > 0");
    if (!(R > std::max(rho0, rho1))) throw PreconditionError("StagedParams: need R > max(rho0, rho1)");
    if (!(rho1 <= 1.0)) throw PreconditionError("StagedParams: need rho1 <= 1");
    if (!(T0 > 0.0 && T > T0)) throw PreconditionError("StagedParams: need T > T0 > 0");
    if (!(nu > 0.0)) throw PreconditionError("StagedParams: nu must be > 0");
    if (!(eps_meet > 0.0)) throw PreconditionError("StagedParams: eps_meet must be > 0");
    if (!(dt > 0.0) || !(blowup_guard > 0.0)) {
        throw PreconditionError("StagedParams: dt and blowup_guard must be > 0");
    }
}

StagedEngine::StagedEngine(const Grid& grid, const StagedParams& params)
    : params_(params.with_defaults()),
      stepper_(grid, SolverConfig{params.dt, params.blowup_guard, Scheme::SemiImplicitEuler}),
      dW1_(grid),
      dW2_(grid),
      mixed_(grid) {
    params_.validate();
    wait_steps_ = step_count(params_.T0, params_.dt);
    block_steps_ = step_count(params_.T, params_.dt);
}

void StagedEngine::sync_step(CoupledPair& pair, StreamPair& streams) {
    const double dt = params_.dt;
    sample_white_increment(dW1_, dt, streams.first);
    sample_white_increment(dW2_, dt, streams.second);
    for (std::size_t i = 0; i < mixed_.size(); ++i) {
        mixed_[i] = (dW1_[i] + dW2_[i]) * kInvSqrt2;
    }
    // No eps snap here: synchronous motion contracts the difference without
    // ever meeting, so a snap would count that contraction as coupling.
    stepper_.step_synchronous(pair, BurgersDrift{}, mixed_);
}

void StagedEngine::wait_step(CoupledPair& pair, StreamPair& streams) {
    if (params_.wait_coupling == WaitCoupling::Synchronous || pair.merged()) {
        sync_step(pair, streams);
        return;
    }
    sample_white_increment(dW1_, params_.dt, streams.first);
    sample_white_increment(dW2_, params_.dt, streams.second);
    stepper_.step_independent(pair, BurgersDrift{}, dW1_, dW2_);
}

BlockOutcome StagedEngine::block(CoupledPair& pair, StreamPair& streams) {
    BlockOutcome out;
    reflection_max_l4_ = 0.0;
    std::size_t k = 0;
    try {
        if (pair.merged()) {
            for (; k < block_steps_; ++k) sync_step(pair, streams);
        } else {
            const bool start_in_ball = l4(pair.x1) <= params_.rho0 && l4(pair.x2) <= params_.rho0;
            for (; k < wait_steps_; ++k) wait_step(pair, streams);
            out.entered_ball = start_in_ball && !pair.merged() && l4(pair.x1) <= params_.rho1 &&
                               l4(pair.x2) <= params_.rho1;
            if (out.entered_ball) {
                const DriftSpec cut = CutoffBurgers{params_.R};
                const CouplingOptions opts{params_.eps_meet, params_.rule};
                for (; k < block_steps_ && !pair.merged(); ++k) {
                    reflection_max_l4_ =
                        std::max({reflection_max_l4_, l4(pair.x1), l4(pair.x2)});
                    sample_white_increment(dW1_, params_.dt, streams.first);
                    sample_white_increment(dW2_, params_.dt, streams.second);
                    stepper_.step(pair, cut, dW1_, dW2_, streams.first.next_uniform(), opts);
                    if (!pair.merged() && (l4(pair.x1) > params_.R || l4(pair.x2) > params_.R)) {
                        out.truncation_exit = true;
                        ++k;
                        break;
                    }
                }
                for (; k < block_steps_; ++k) sync_step(pair, streams);
            } else {
                for (; k < block_steps_; ++k) wait_step(pair, streams);
            }
        }
    } catch (const BlowUp&) {
        out.blowup = true;
    }
    out.coupled_at_end = !out.blowup && pair.merged();
    out.end_state = pair;
    return out;
}

BlockOutcome staged_block(CoupledPair& pair, const StagedParams& params, StreamPair& streams) {
    StagedEngine engine(pair.x1.grid, params);
    return engine.block(pair, streams);
}

StagedTrace run_staged(const Field& x1, const Field& x2, const StagedParams& params,
                       std::size_t k_max, StreamPair& streams) {
    if (k_max < 1) throw PreconditionError("run_staged: k_max must be >= 1");
    StagedEngine engine(x1.grid, params);
    StagedTrace trace;
    trace.blocks.reserve(k_max);
    CoupledPair pair = CoupledPair::start(x1, x2, engine.params().eps_meet);
    for (std::size_t k = 0; k < k_max; ++k) {
        trace.blocks.push_back(engine.block(pair, streams));
        if (trace.blocks.back().blowup) {
            trace.blowup = true;
            break;
        }
    }
    return trace;
}

double kantorovich_term(const StagedTrace& trace, double nu, std::size_t k) {
    if (k == 0 || trace.blocks.empty()) throw PreconditionError("kantorovich: k must be >= 1");
    const bool reached = k <= trace.blocks.size();
    const BlockOutcome& b = reached ? trace.blocks[k - 1] : trace.blocks.back();
    if (reached && b.coupled_at_end) return 0.0;
    return 1.0 + nu * (l4_pow4(b.end_state.x1) + l4_pow4(b.end_state.x2));
}

double kantorovich(std::span<const StagedTrace> traces, double nu, std::size_t k) {
    if (traces.empty()) throw InsufficientData("kantorovich: no traces");
    double s = 0.0;
    for (const auto& tr : traces) s += kantorovich_term(tr, nu, k);
    return s / static_cast<double>(traces.size());
}

Field ball_boundary_profile(const Grid& g, double rho) {
    Field u = sample_function(g, [](double x) { return std::sin(std::numbers::pi * x); });
    u *= rho / l4(u);
    return u;
}

double CalibrationReport::f_R_at_2rho1() const {
    return log_f_R_at_2rho1 > std::log(std::numeric_limits<double>::max())
               ? std::numeric_limits<double>::infinity()
               : std::exp(log_f_R_at_2rho1);
}

StagedParams CalibrationReport::staged_params(const CalibrationOptions& opts) const {
    StagedParams p;
    p.rho0 = rho0;
    p.rho1 = rho1;
    p.R = R;
    p.T0 = T0;
    p.T = T0 + 1.0;
    p.nu = nu > 0.0 && std::isfinite(nu) ? nu : 1.0;
    p.dt = opts.dt;
    p.blowup_guard = opts.blowup_guard;
    p.wait_coupling = opts.wait_coupling;
    return p;
}

namespace {

struct MomentPath {
    std::vector<double> pow4;      // |X(t_j)|_4^4
    std::vector<double> sup_pow4;  // sup_{s <= t_j} |X(s)|_4^4
    bool blowup = false;
};

MomentPath moment_path(const Field& x0, std::size_t steps, std::size_t stride,
                       const SolverConfig& cfg, NoiseStream stream) {
    SemiImplicitStepper stepper(x0.grid, cfg);
    MomentPath p;
    Field u = x0;
    Field dW(x0.grid);
    double sup = l4_pow4(u);
    try {
        for (std::size_t k = 1; k <= steps; ++k) {
            sample_white_increment(dW, cfg.dt, stream);
            stepper.step(u, BurgersDrift{}, dW);
            const double v = l4_pow4(u);
            sup = std::max(sup, v);
            if (k % stride == 0) {
                p.pow4.push_back(v);
                p.sup_pow4.push_back(sup);
            }
        }
    } catch (const BlowUp&) {
        p.blowup = true;
    }
    return p;
}

MeanCI transform(const MeanCI& m, double (*g)(double, double), double arg) {
    MeanCI r = m;
    r.mean = g(m.mean, arg);
    r.lo = g(m.lo, arg);
    r.hi = g(m.hi, arg);
    r.std_error = std::abs(r.hi - r.lo) / 3.919927969080108;
    return r;
}

} // namespace

CalibrationReport calibrate(double rho0, double rho1, double R, std::size_t mc_budget,
                            const CalibrationOptions& opts) {
    if (!(rho1 > 0.0) || rho1 > rho0) throw PreconditionError("calibrate: need 0 < rho1 <= rho0");
    if (!(R > 0.0)) throw PreconditionError("calibrate: R must be > 0");
    if (mc_budget < 100) throw PreconditionError("calibrate: mc_budget must be >= 100");

    CalibrationReport rep;
    rep.rho0 = rho0;
    rep.rho1 = rho1;
    rep.R = R;
    rep.T0 = wait_time(rho0, rho1);
    rep.delta = opts.delta;

    const Grid g = make_grid(opts.n_interior);
    const SolverConfig cfg{opts.dt, opts.blowup_guard, Scheme::SemiImplicitEuler};
    const Field x_edge = ball_boundary_profile(g, rho0);
    const std::size_t threads = resolve_threads(opts.threads);

    // Small-ball probability from a worst-case-norm pair x, -x under the wait coupling.
    const std::size_t wait_steps = step_count(rep.T0, opts.dt);
    enum Result : int { Miss = 0, Hit = 1, Blown = 2 };
    const auto hits = parallel_map(mc_budget, threads, [&](std::size_t i) -> int {
        StreamPair streams = StreamPair::for_trajectory(opts.seed, i);
        CoupledStepper stepper(g, cfg);
        CoupledPair pair = CoupledPair::start(x_edge, -1.0 * x_edge, 0.0);
        Field dW1(g), dW2(g), mixed(g);
        try {
            for (std::size_t k = 0; k < wait_steps; ++k) {
                sample_white_increment(dW1, opts.dt, streams.first);
                sample_white_increment(dW2, opts.dt, streams.second);
                if (opts.wait_coupling == WaitCoupling::Synchronous) {
                    for (std::size_t j = 0; j < mixed.size(); ++j) {
                        mixed[j] = (dW1[j] + dW2[j]) * kInvSqrt2;
                    }
                    stepper.step_synchronous(pair, BurgersDrift{}, mixed);
                } else {
                    stepper.step_independent(pair, BurgersDrift{}, dW1, dW2);
                }
            }
        } catch (const BlowUp&) {
            return Blown;
        }
        return l4(pair.x1) <= rho1 && l4(pair.x2) <= rho1 ? Hit : Miss;
    });
    std::size_t hit_count = 0;
    for (int h : hits) {
        hit_count += h == Hit ? 1 : 0;
        rep.blowups += h == Blown ? 1 : 0;
    }
    rep.alpha_hat = clopper_pearson(hit_count, mc_budget);

    // f_R(2 rho1) in the log domain.
    const LyapunovTable fR =
        build_f_R(R, opts.gamma_interp, kDiscreteInterpolationConstant, std::max(4.0, 2.02 * rho1));
    rep.c_R = fR.c_R();
    rep.log_f_R_at_2rho1 = fR.eval_log(2.0 * rho1, Which::f);
    rep.condition_313_ok = rep.log_f_R_at_2rho1 <= std::log(0.25);

    // Empirical moment constants from the rho0-edge profile and from zero.
    const double horizon = opts.moment_horizon > 0.0 ? opts.moment_horizon : rep.T0 + 1.0;
    const std::size_t steps = step_count(horizon, opts.dt);
    const std::size_t stride = std::max<std::size_t>(1, steps / 50);
    const std::size_t n_times = steps / stride;
    const Field starts[2] = {x_edge, Field(g)};
    rep.K1_hat.mean = rep.K2_hat.mean = rep.K3_hat.mean = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < 2; ++s) {
        const Field& x0 = starts[s];
        const auto paths = parallel_map(mc_budget, threads, [&](std::size_t i) {
            return moment_path(x0, steps, stride, cfg,
                               NoiseStream(opts.seed, 2 * mc_budget * (1 + s) + i));
        });
        std::vector<double> pow4, sup4;
        pow4.reserve(mc_budget);
        sup4.reserve(mc_budget);
        const double x4 = l4_pow4(x0);
        const double xl4 = l4(x0);
        const double x2 = norm(x0, NormKind::L2);
        for (std::size_t j = 0; j < n_times; ++j) {
            pow4.clear();
            sup4.clear();
            for (const auto& p : paths) {
                if (p.blowup || p.pow4.size() <= j) continue;
                pow4.push_back(p.pow4[j]);
                sup4.push_back(p.sup_pow4[j]);
            }
            if (pow4.size() < 2) continue;
            const double t = static_cast<double>((j + 1) * stride) * opts.dt;
            const MeanCI m4 = mean_ci(pow4);
            const MeanCI ms = mean_ci(sup4);

            const double w1 = 1.0 + std::pow(t, opts.delta);
            MeanCI k1 = ms;
            k1.mean = (ms.mean - 4.0 * x4) / w1;
            k1.lo = (ms.lo - 4.0 * x4) / w1;
            k1.hi = (ms.hi - 4.0 * x4) / w1;
            k1.std_error = ms.std_error / w1;
            if (k1.mean > rep.K1_hat.mean) rep.K1_hat = k1;

            const double shift = std::exp(-kPi2 * t / 16.0) * xl4;
            const MeanCI k2 = transform(
                m4, [](double v, double c) { return std::pow(std::max(v, 0.0), 0.25) - c; }, shift);
            if (k2.mean > rep.K2_hat.mean) rep.K2_hat = k2;

            const MeanCI k3 = transform(
                m4, [](double v, double c) { return v / c; }, 1.0 + x2 * x2 * x2 * x2);
            if (k3.mean > rep.K3_hat.mean) rep.K3_hat = k3;
        }
        for (const auto& p : paths) rep.blowups += p.blowup ? 1 : 0;
    }
    if (!std::isfinite(rep.K1_hat.mean)) throw InsufficientData("calibrate: no moment samples");
    rep.K1_hat.mean = std::max(rep.K1_hat.mean, 0.0);
    rep.K2_hat.mean = std::max(rep.K2_hat.mean, 0.0);

    const double R4 = R * R * R * R;
    rep.condition_312_ok = (8.0 + 4.0 * rep.K1_hat.mean) / R4 <= 0.25;
    const double k2 = rep.K2_hat.mean;
    rep.nu = k2 > 0.0 ? rep.alpha_hat.p_hat / (4.0 * k2 * k2 * k2 * k2)
                      : std::numeric_limits<double>::infinity();
    return rep;
}

} // namespace spdecouple
