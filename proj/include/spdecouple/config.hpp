#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "spdecouple/burgers_staged.hpp"
#include "spdecouple/grid_noise.hpp"
#include "spdecouple/reflection_coupling.hpp"
#include "spdecouple/spde_solvers.hpp"

namespace spdecouple {

enum class ExperimentKind { RdCouple, BurgersStaged, OuValidate, LyapunovBuild, GeneratorCheck, Calibrate };

/// Named initial condition: zero, sine(k,a) = a sqrt(2) sin(k pi x) (so |.|_2 = |a|
/// on the grid), constant(c).
struct Profile {
    enum class Kind { Zero, Sine, Constant };
    Kind kind = Kind::Zero;
    int k = 1;
    double value = 0.0;

    friend bool operator==(const Profile&, const Profile&) = default;
};

Profile parse_profile(const std::string& text);
std::string to_string(const Profile& p);
Field make_profile(const Grid& g, const Profile& p);

enum class DriftKind { Zero, ReactionDiffusion, Burgers, CutoffBurgers };
enum class TestFunctionKind { Square, Lyapunov };
enum class LyapunovBuildKind { ReactionDiffusion, Cutoff };

/// Flat key = value configuration. '#' starts a comment; blank lines are ignored.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::RdCouple;
    std::size_t n = 32;
    double dt = 1e-4;
    std::size_t M = 500;
    double t_max = 5.0;
    std::size_t k_max = 8;
    double eps_meet = 1e-6;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    std::size_t grid_points = 50;  // survival / observation time grid
    double blowup_guard = 1e3;

    DriftKind drift = DriftKind::ReactionDiffusion;
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;

    Profile x1{Profile::Kind::Sine, 1, 0.5};
    Profile x2{Profile::Kind::Sine, 1, -0.5};
    MeetingRule meeting_rule = MeetingRule::Maximal;

    // Burgers staged coupling; T = 0 and nu = 0 take calibrated values.
    double R = 3.0;
    double rho0 = 1.0;
    double rho1 = 0.2;
    double T = 0.0;
    double nu = 0.0;
    WaitCoupling wait_coupling = WaitCoupling::Synchronous;
    std::size_t calib_budget = 400;
    double moment_delta = 1.0;

    // Lyapunov tables.
    LyapunovBuildKind lyapunov_kind = LyapunovBuildKind::ReactionDiffusion;
    double r_max = 12.0;
    double quad_tol = 1e-10;
    double gamma_interp = 4.0 / 7.0;

    // OU validation: modes of the exact sampler (0 = n).
    std::size_t K = 0;

    TestFunctionKind test_function = TestFunctionKind::Lyapunov;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    /// Throws ConfigError for out-of-range values.
    void validate() const;

    DriftSpec drift_spec() const;
    SolverConfig solver_config() const;
};

/// Parses the key = value form. Unknown keys, duplicate keys and malformed values
/// throw ConfigError naming the line.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Writes every key at full precision; parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const ExperimentConfig& c);

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

/// Defaults for an experiment kind (used when the CLI gets no --config).
ExperimentConfig default_config(ExperimentKind kind);

} // namespace spdecouple
