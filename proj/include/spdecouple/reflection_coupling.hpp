#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "spdecouple/grid_noise.hpp"
#include "spdecouple/spde_solvers.hpp"

namespace spdecouple {

enum class Regime { Reflecting, Merged };

/// Two trajectories on the same grid. Merged pairs are bitwise equal.
struct CoupledPair {
    Field x1;
    Field x2;
    double t = 0.0;
    Regime regime = Regime::Reflecting;
    std::optional<double> merge_time;

    /// Starts Merged (with merge_time = t) when |x1 - x2|_2 <= eps_meet.
    static CoupledPair start(Field x1, Field x2, double eps_meet, double t = 0.0);

    bool merged() const { return regime == Regime::Merged; }
    void merge_at(double time);
};

/// How a reflecting step may end in a meeting.
///
/// Maximal: the second increment equals the meeting proposal with probability
/// min(1, phi(xi + z) / phi(xi)) and is the reflected increment otherwise
/// (reflection-maximal coupling of the two Gaussian steps). The eps_meet snap
/// still applies.
/// SnapOnly: always the reflected increment; meeting only through the snap.
enum class MeetingRule { Maximal, SnapOnly };

struct CouplingOptions {
    double eps_meet = 1e-6;
    MeetingRule rule = MeetingRule::Maximal;
};

/// Householder map v - 2 <v,e>_2 e. Throws PreconditionError unless <e,e>_2 = 1 within 1e-12.
Field reflect(const Field& v, const Field& e);
void reflect_in_place(Field& v, const Field& e);

/// Independent noise streams for the two trajectories of pair `id`
/// (stream ids 2 id and 2 id + 1).
struct StreamPair {
    NoiseStream first;
    NoiseStream second;

    static StreamPair for_trajectory(std::uint64_t master_seed, std::uint64_t id);
};

/// Per-worker coupled stepper. Holds scratch fields, so do not share across threads.
class CoupledStepper {
public:
    CoupledStepper(const Grid& grid, const SolverConfig& cfg);

    const SolverConfig& config() const { return stepper_.config(); }
    SemiImplicitStepper& marginal() { return stepper_; }

    /// Reflecting pairs take one reflection-coupled step; merged pairs take
    /// one synchronous step with (dW1 + dW2)/sqrt(2). `uniform` in (0,1) is
    /// consumed only by the Maximal rule.
    void step(CoupledPair& pair, const DriftSpec& spec, const Field& dW1, const Field& dW2,
              double uniform, const CouplingOptions& opts);

    /// Both marginals driven by the same increment dW. Merged pairs stay bitwise equal.
    void step_synchronous(CoupledPair& pair, const DriftSpec& spec, const Field& dW);

    /// Each marginal driven by its own increment; never merges.
    void step_independent(CoupledPair& pair, const DriftSpec& spec, const Field& dW1,
                          const Field& dW2);

    /// Difference noise <xi1 - xi2, e>_2 of the last reflecting step, e the
    /// reflection direction. Zero after a merged or meeting step.
    double last_difference_noise() const { return last_diff_noise_; }

private:
    void finish_reflecting(CoupledPair& pair, double eps_meet);

    SemiImplicitStepper stepper_;
    Field m1_, m2_, e_, xi1_, xi2_;
    double last_diff_noise_ = 0.0;
};

/// One coupled step on a copy of `pair`.
CoupledPair coupled_step(const CoupledPair& pair, const DriftSpec& spec, const SolverConfig& cfg,
                         const Field& dW1, const Field& dW2, double uniform,
                         const CouplingOptions& opts = {});

struct CouplingOutcome {
    std::size_t trajectory_id = 0;
    double tau = 0.0;       // meeting time, or the time reached when censored
    bool censored = false;  // no meeting before the horizon (or blow-up)
    bool blowup = false;
};

/// Called with the step index (0 before the first step) and the pair after that step.
using PairObserver = std::function<void(std::size_t, const CoupledPair&)>;

/// Steps until the pair merges or t reaches t_max (ceil(t_max/dt) steps).
/// Blow-up is recorded in the outcome and ends the run as censored.
CouplingOutcome run_until_coupled(const Field& x1, const Field& x2, const DriftSpec& spec,
                                  const SolverConfig& cfg, double t_max,
                                  const CouplingOptions& opts, StreamPair& streams,
                                  std::size_t trajectory_id = 0,
                                  const PairObserver& observer = {});

/// Number of steps needed to reach `horizon` with step dt.
std::size_t step_count(double horizon, double dt);

} // namespace spdecouple
