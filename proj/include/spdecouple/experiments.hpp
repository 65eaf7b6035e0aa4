#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdecouple/burgers_staged.hpp"
#include "spdecouple/config.hpp"
#include "spdecouple/estimators.hpp"

namespace spdecouple {

/// Independent master seed for a named sub-experiment.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t tag);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

struct CoupledEnsemble {
    std::vector<CouplingOutcome> outcomes;
    std::vector<double> times;                 // observation grid
    std::vector<TestFunction> functions;
    std::vector<TvObservations> observations;  // one per function (empty unless requested)
};

/// M coupled pairs from the config's x1, x2 and drift, run to t_max.
CoupledEnsemble run_coupled_ensemble(const ExperimentConfig& c, bool observe_tv);

/// Mode-1 coefficient and |X|_2^2 of a sample of fields.
struct MarginalSample {
    std::vector<double> mode1;
    std::vector<double> l2sq;
};

/// Marginal `which` (1 or 2) of coupled runs, continued past merging, at t_obs.
MarginalSample coupled_marginal(const ExperimentConfig& c, double t_obs, std::size_t which);
/// Plain single-trajectory runs of the config's drift from x1 or x2 at t_obs, on
/// streams independent of the coupled runs.
MarginalSample plain_marginal(const ExperimentConfig& c, double t_obs, std::size_t which = 1);
/// Exact OU samples from x1 at t_obs (b = 0), discrete eigenvalues, all modes.
MarginalSample ou_marginal(const ExperimentConfig& c, double t_obs);

struct MarginalTest {
    KSResult mode1;
    KSResult l2sq;
    bool pass(double level) const { return mode1.p_value >= level && l2sq.p_value >= level; }
};

MarginalTest compare_marginals(const MarginalSample& a, const MarginalSample& b);

struct StagedEnsemble {
    CalibrationReport calibration;
    bool calibrated = false;
    StagedParams params;
    std::vector<StagedTrace> traces;
};

/// Calibrates (when T or nu is 0 in the config) and runs M staged traces.
StagedEnsemble run_staged_ensemble(const ExperimentConfig& c);

struct StagedRow {
    std::size_t k = 0;
    BinomialCI p_uncoupled;
    MeanCI F;
};

std::vector<StagedRow> staged_table(const StagedEnsemble& e);

/// Marginal `which` of staged traces after block k against plain Burgers runs of
/// the same number of steps from the same start.
MarginalTest staged_marginal_test(const ExperimentConfig& c, const StagedEnsemble& e, std::size_t k,
                                  std::size_t which = 1);

struct OuStatistic {
    std::string name;
    MeanCI stepper;
    MeanCI oracle;
    double z = 0.0;
};

/// Stepper (b = 0) versus the exact OU sampler at t_max.
std::vector<OuStatistic> ou_validate(const ExperimentConfig& c);

struct ReportBundle {
    std::string out_dir;
    std::vector<std::string> artifacts;  // file names inside out_dir
    nlohmann::ordered_json summary;
};

/// Runs the configured experiment, writes its CSVs, summary.json and config
/// echo into out_dir (created if missing). Deterministic given (config, seed).
ReportBundle run_experiment(const ExperimentConfig& config, const std::string& out_dir);

} // namespace spdecouple
