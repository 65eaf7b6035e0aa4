#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spdecouple/grid_noise.hpp"
#include "spdecouple/reflection_coupling.hpp"
#include "spdecouple/stats.hpp"

namespace spdecouple {

enum class WaitCoupling { Synchronous, Independent };

/// T(rho0, rho1) = (16/pi^2) ln(2 rho0 / rho1): time for the noiseless flow to
/// shrink |x|_4 <= rho0 to rho1/2. Throws PreconditionError unless 0 < rho1 <= rho0.
double wait_time(double rho0, double rho1);

struct StagedParams {
    double rho0 = 1.0;
    double rho1 = 0.3;
    double R = 3.0;
    double T0 = 0.0;  // wait_time(rho0, rho1) when left at 0 by with_defaults()
    double T = 0.0;   // T0 + 1 when left at 0
    double nu = 1.0;
    double eps_meet = 1e-6;
    double dt = 1e-3;
    double blowup_guard = 1e3;
    WaitCoupling wait_coupling = WaitCoupling::Synchronous;
    MeetingRule rule = MeetingRule::Maximal;

    /// Fills T0 and T from the formulas above when they are 0.
    StagedParams with_defaults() const;
    /// Throws PreconditionError unless R > max(rho0, rho1), T > T0 > 0, rho1 <= 1.
    void validate() const;
};

struct BlockOutcome {
    bool entered_ball = false;     // block start in the rho0-ball and both T0-norms <= rho1
    bool truncation_exit = false;  // a marginal left the R-ball during the reflection phase
    bool coupled_at_end = false;
    bool blowup = false;
    CoupledPair end_state;
};

struct StagedTrace {
    std::vector<BlockOutcome> blocks;  // blocks[k-1] is block k
    bool blowup = false;               // run stopped early; blocks holds the finished ones

    bool coupled_after(std::size_t k) const { return blocks.at(k - 1).coupled_at_end; }
};

/// Per-worker staged-coupling engine (owns scratch storage).
class StagedEngine {
public:
    StagedEngine(const Grid& grid, const StagedParams& params);

    const StagedParams& params() const { return params_; }

    /// One block [kT, (k+1)T] of the staged construction, evolving `pair` in place.
    ///
    /// Merged pairs move synchronously. Otherwise the wait phase runs full
    /// Burgers under the wait coupling for T0; if both block-start norms were
    /// <= rho0 and both T0-norms are <= rho1, the rest of the block is
    /// reflection-coupled with the cut-off drift until a marginal leaves the
    /// R-ball (checked after each step), then synchronous full Burgers.
    BlockOutcome block(CoupledPair& pair, StreamPair& streams);

    /// Largest |x|_4 of either marginal seen during reflection steps of the last block.
    double last_reflection_max_l4() const { return reflection_max_l4_; }

private:
    void wait_step(CoupledPair& pair, StreamPair& streams);
    void sync_step(CoupledPair& pair, StreamPair& streams);

    StagedParams params_;
    CoupledStepper stepper_;
    Field dW1_, dW2_, mixed_;
    std::size_t wait_steps_ = 0;
    std::size_t block_steps_ = 0;
    double reflection_max_l4_ = 0.0;
};

BlockOutcome staged_block(CoupledPair& pair, const StagedParams& params, StreamPair& streams);

StagedTrace run_staged(const Field& x1, const Field& x2, const StagedParams& params,
                       std::size_t k_max, StreamPair& streams);

/// F_k = mean over traces of (1 + nu (|X1|_4^4 + |X2|_4^4)) 1{X1 != X2} after block k.
/// Traces that blew up before block k count as uncoupled with their last state.
double kantorovich(std::span<const StagedTrace> traces, double nu, std::size_t k);

/// Per-trace summand of kantorovich(); used for interval estimates.
double kantorovich_term(const StagedTrace& trace, double nu, std::size_t k);

struct CalibrationOptions {
    std::size_t n_interior = 32;
    double dt = 1e-3;
    double blowup_guard = 1e3;
    WaitCoupling wait_coupling = WaitCoupling::Synchronous;
    double delta = 1.0;          // exponent in K1(delta)
    double moment_horizon = 0;   // 0: T0 + 1
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    double gamma_interp = 4.0 / 7.0;
};

struct CalibrationReport {
    double rho0 = 0.0;
    double rho1 = 0.0;
    double R = 0.0;
    double T0 = 0.0;
    BinomialCI alpha_hat;
    double c_R = 0.0;
    double log_f_R_at_2rho1 = 0.0;  // f_R(2 rho1) overflows for moderate R
    bool condition_312_ok = false;  // (8 + 4 K1_hat) / R^4 <= 1/4
    bool condition_313_ok = false;  // f_R(2 rho1) <= 1/4
    double delta = 1.0;
    MeanCI K1_hat;  // at the maximizing time; K1 = (E sup|X|_4^4 - 4|x|_4^4) / (1 + t^delta)
    MeanCI K2_hat;  // (E|X(t)|_4^4)^{1/4} - e^{-pi^2 t/16} |x|_4, maximized over t
    MeanCI K3_hat;  // E|X(t)|_4^4 / (1 + |x|_2^4), maximized over t
    double nu = 0.0;  // alpha_hat / (4 K2_hat^4)
    std::size_t blowups = 0;

    double f_R_at_2rho1() const;  // may be +inf
    /// Defaults for the staged run: T0, T = T0 + 1, nu.
    StagedParams staged_params(const CalibrationOptions& opts) const;
};

/// Worst-case-norm initial profile: c sin(pi x) scaled to |.|_4 = rho.
Field ball_boundary_profile(const Grid& g, double rho);

/// Small-ball probability, f_R(2 rho1), and empirical moment constants.
/// Throws PreconditionError if rho1 > rho0 or mc_budget < 100.
CalibrationReport calibrate(double rho0, double rho1, double R, std::size_t mc_budget,
                            const CalibrationOptions& opts);

} // namespace spdecouple
