#include "spdecouple/reflection_coupling.hpp"

#include <cmath>
#include <utility>

#include "spdecouple/errors.hpp"

namespace spdecouple {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// out = (a + b) / sqrt(2)
void mix(const Field& a, const Field& b, Field& out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] + b[i]) * kInvSqrt2;
}

} // namespace

CoupledPair CoupledPair::start(Field x1, Field x2, double eps_meet, double t) {
    if (!(x1.grid == x2.grid)) throw PreconditionError("CoupledPair: fields on different grids");
    CoupledPair p;
    p.x1 = std::move(x1);
    p.x2 = std::move(x2);
    p.t = t;
    if (norm(p.x1 - p.x2, NormKind::L2) <= eps_meet) p.merge_at(t);
    return p;
}

void CoupledPair::merge_at(double time) {
    x2.values = x1.values;
    regime = Regime::Merged;
    merge_time = time;
}

void reflect_in_place(Field& v, const Field& e) {
    const double ee = inner(e, e);
    if (std::abs(ee - 1.0) > 1e-12) throw PreconditionError("reflect: direction is not a unit field");
    const double c = 2.0 * inner(v, e);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * e[i];
}

Field reflect(const Field& v, const Field& e) {
    Field out = v;
    reflect_in_place(out, e);
    return out;
}

StreamPair StreamPair::for_trajectory(std::uint64_t master_seed, std::uint64_t id) {
    return {NoiseStream(master_seed, 2 * id), NoiseStream(master_seed, 2 * id + 1)};
}

CoupledStepper::CoupledStepper(const Grid& grid, const SolverConfig& cfg)
    : stepper_(grid, cfg), m1_(grid), m2_(grid), e_(grid), xi1_(grid), xi2_(grid) {}

void CoupledStepper::step_synchronous(CoupledPair& pair, const DriftSpec& spec, const Field& dW) {
    last_diff_noise_ = 0.0;
    stepper_.step(pair.x1, spec, dW);
    if (pair.merged()) {
        pair.x2.values = pair.x1.values;
    } else {
        stepper_.step(pair.x2, spec, dW);
    }
    pair.t += stepper_.config().dt;
}

void CoupledStepper::step_independent(CoupledPair& pair, const DriftSpec& spec, const Field& dW1,
                                      const Field& dW2) {
    last_diff_noise_ = 0.0;
    stepper_.step(pair.x1, spec, dW1);
    stepper_.step(pair.x2, spec, dW2);
    pair.t += stepper_.config().dt;
}

void CoupledStepper::finish_reflecting(CoupledPair& pair, double eps_meet) {
    stepper_.check_guard(pair.x1);
    stepper_.check_guard(pair.x2);
    pair.t += stepper_.config().dt;
    if (norm(pair.x1 - pair.x2, NormKind::L2) <= eps_meet) pair.merge_at(pair.t);
}

void CoupledStepper::step(CoupledPair& pair, const DriftSpec& spec, const Field& dW1,
                          const Field& dW2, double uniform, const CouplingOptions& opts) {
    const double dt = stepper_.config().dt;
    if (pair.merged()) {
        mix(dW1, dW2, xi1_);
        step_synchronous(pair, spec, xi1_);
        return;
    }

    stepper_.explicit_part(pair.x1, spec, m1_);
    stepper_.explicit_part(pair.x2, spec, m2_);
    const bool maximal = opts.rule == MeetingRule::Maximal;
    const std::size_t n = e_.size();
    for (std::size_t i = 0; i < n; ++i) {
        e_[i] = maximal ? m1_[i] - m2_[i] : pair.x1[i] - pair.x2[i];
    }
    const double z_norm = norm(e_, NormKind::L2);

    if (z_norm == 0.0) {
        // Identical drift-advanced states: the shared increment meets them exactly.
        mix(dW1, dW2, xi1_);
        for (std::size_t i = 0; i < n; ++i) m1_[i] += xi1_[i];
        stepper_.solve(m1_);
        std::swap(pair.x1.values, m1_.values);
        last_diff_noise_ = 0.0;
        stepper_.check_guard(pair.x1);
        pair.t += dt;
        pair.merge_at(pair.t);
        return;
    }
    for (std::size_t i = 0; i < n; ++i) e_[i] /= z_norm;

    // xi1 = (dW1 + H dW2)/sqrt(2), H the Householder map of e.
    xi2_.values = dW2.values;
    reflect_in_place(xi2_, e_);
    mix(dW1, xi2_, xi1_);
    const double xi_e = inner(xi1_, e_);

    bool meet = false;
    if (maximal) {
        // log phi(xi1 + z) - log phi(xi1) with z = z_norm e, density N(0, dt/dx I).
        const double log_ratio = -(2.0 * z_norm * xi_e + z_norm * z_norm) / (2.0 * dt);
        meet = log_ratio >= 0.0 || std::log(uniform) < log_ratio;
    }

    for (std::size_t i = 0; i < n; ++i) m1_[i] += xi1_[i];
    stepper_.solve(m1_);
    std::swap(pair.x1.values, m1_.values);

    if (meet) {
        last_diff_noise_ = 0.0;
        stepper_.check_guard(pair.x1);
        pair.t += dt;
        pair.merge_at(pair.t);
        return;
    }

    // xi2 = H xi1 = (H dW1 + dW2)/sqrt(2)
    for (std::size_t i = 0; i < n; ++i) m2_[i] += xi1_[i] - 2.0 * xi_e * e_[i];
    stepper_.solve(m2_);
    std::swap(pair.x2.values, m2_.values);
    last_diff_noise_ = 2.0 * xi_e;
    finish_reflecting(pair, opts.eps_meet);
}

CoupledPair coupled_step(const CoupledPair& pair, const DriftSpec& spec, const SolverConfig& cfg,
                         const Field& dW1, const Field& dW2, double uniform,
                         const CouplingOptions& opts) {
    validate(spec);
    CoupledStepper stepper(pair.x1.grid, cfg);
    CoupledPair out = pair;
    stepper.step(out, spec, dW1, dW2, uniform, opts);
    return out;
}

std::size_t step_count(double horizon, double dt) {
    if (horizon <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

CouplingOutcome run_until_coupled(const Field& x1, const Field& x2, const DriftSpec& spec,
                                  const SolverConfig& cfg, double t_max,
                                  const CouplingOptions& opts, StreamPair& streams,
                                  std::size_t trajectory_id, const PairObserver& observer) {
    if (!(x1.grid == x2.grid)) throw PreconditionError("run_until_coupled: fields on different grids");
    if (!(t_max > 0.0)) throw PreconditionError("run_until_coupled: t_max must be > 0");
    validate(spec);

    CouplingOutcome out;
    out.trajectory_id = trajectory_id;
    CoupledPair pair = CoupledPair::start(x1, x2, opts.eps_meet);
    if (observer) observer(0, pair);
    if (pair.merged()) return out;

    CoupledStepper stepper(x1.grid, cfg);
    Field dW1(x1.grid), dW2(x1.grid);
    const std::size_t steps = step_count(t_max, cfg.dt);
    try {
        for (std::size_t k = 0; k < steps; ++k) {
            sample_white_increment(dW1, cfg.dt, streams.first);
            sample_white_increment(dW2, cfg.dt, streams.second);
            const double u = streams.first.next_uniform();
            stepper.step(pair, spec, dW1, dW2, u, opts);
            if (observer) observer(k + 1, pair);
            if (pair.merged()) {
                out.tau = static_cast<double>(k + 1) * cfg.dt;
                return out;
            }
        }
    } catch (const BlowUp&) {
        out.blowup = true;
        out.censored = true;
        out.tau = pair.t;
        return out;
    }
    out.censored = true;
    out.tau = t_max;
    return out;
}

} // namespace spdecouple
