#include "spdecouple/experiments.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "spdecouple/errors.hpp"
#include "spdecouple/lyapunov.hpp"
#include "spdecouple/parallel.hpp"

namespace spdecouple {

namespace {

// kPlainTag + 1 and + 2 are used by the two plain marginals.
enum SeedTag : std::uint64_t {
    kPlainTag = 20,
    kOuTag = 8,
    kStagedPlainTag = 9,
    kOuStepperTag = 10,
    kCalibrationTag = 11,
    kGeneratorTag = 12,
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t threads_for(const ExperimentConfig& c) { return resolve_threads(c.threads); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header)
        : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
        out_ << header << '\n';
    }

    template <typename... Ts>
    void row(const Ts&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }

private:
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    static std::string cell(std::size_t v) { return std::to_string(v); }

    std::ofstream out_;
};

nlohmann::ordered_json ci_json(const MeanCI& m) {
    return {{"mean", m.mean}, {"std_error", m.std_error}, {"ci_lo", m.lo}, {"ci_hi", m.hi}, {"n", m.n}};
}

nlohmann::ordered_json ci_json(const BinomialCI& b) {
    return {{"p_hat", b.p_hat}, {"ci_lo", b.lo}, {"ci_hi", b.hi}, {"successes", b.successes},
            {"trials", b.trials}};
}

// JSON has no infinity; non-finite values are written as null.
nlohmann::ordered_json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

void record_mode_stats(const Field& x, const Field& e1, MarginalSample& s, std::size_t i) {
    s.mode1[i] = inner(x, e1);
    const double r = norm(x, NormKind::L2);
    s.l2sq[i] = r * r;
}

LyapunovTable rd_table(const ExperimentConfig& c, double reach) {
    const RDConstants k = dissipativity_constants(c.alpha, c.beta, c.gamma, c.delta);
    return build_f(k, std::max(c.r_max, 1.5 * reach), c.quad_tol);
}

} // namespace

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), p);
}

CoupledEnsemble run_coupled_ensemble(const ExperimentConfig& c, bool observe_tv) {
    c.validate();
    const Grid g = make_grid(c.n);
    const Field x1 = make_profile(g, c.x1);
    const Field x2 = make_profile(g, c.x2);
    const DriftSpec spec = c.drift_spec();
    const SolverConfig cfg = c.solver_config();
    const CouplingOptions opts{c.eps_meet, c.meeting_rule};

    CoupledEnsemble ens;
    ens.times = uniform_times(c.t_max, c.grid_points);
    std::vector<std::size_t> obs_steps;
    for (double t : ens.times) obs_steps.push_back(static_cast<std::size_t>(std::llround(t / c.dt)));
    if (observe_tv) ens.functions = builtin_test_functions(g);
    const std::size_t F = ens.functions.size();
    const std::size_t J = ens.times.size();

    struct Result {
        CouplingOutcome outcome;
        std::vector<std::vector<double>> diff;  // [function][time]
    };
    auto results = parallel_map(c.M, threads_for(c), [&](std::size_t i) {
        Result r;
        r.diff.assign(F, std::vector<double>(J, 0.0));
        StreamPair streams = StreamPair::for_trajectory(c.seed, i);
        std::size_t next = 0;
        PairObserver observer;
        if (observe_tv) {
            observer = [&](std::size_t step, const CoupledPair& pair) {
                while (next < J && obs_steps[next] <= step) {
                    if (!pair.merged()) {
                        for (std::size_t f = 0; f < F; ++f) {
                            r.diff[f][next] = ens.functions[f].phi(pair.x1) - ens.functions[f].phi(pair.x2);
                        }
                    }
                    ++next;
                }
            };
        }
        r.outcome = run_until_coupled(x1, x2, spec, cfg, c.t_max, opts, streams, i, observer);
        return r;
    });

    ens.outcomes.reserve(c.M);
    for (const auto& r : results) ens.outcomes.push_back(r.outcome);
    ens.observations.resize(F);
    for (std::size_t f = 0; f < F; ++f) {
        ens.observations[f].times = ens.times;
        ens.observations[f].diff.assign(J, std::vector<double>(c.M, 0.0));
        for (std::size_t i = 0; i < c.M; ++i) {
            for (std::size_t j = 0; j < J; ++j) ens.observations[f].diff[j][i] = results[i].diff[f][j];
        }
    }
    return ens;
}

MarginalSample coupled_marginal(const ExperimentConfig& c, double t_obs, std::size_t which) {
    if (which != 1 && which != 2) throw PreconditionError("coupled_marginal: which must be 1 or 2");
    const Grid g = make_grid(c.n);
    const Field x1 = make_profile(g, c.x1);
    const Field x2 = make_profile(g, c.x2);
    const Field e1 = SineBasis(g).mode(1);
    const DriftSpec spec = c.drift_spec();
    const SolverConfig cfg = c.solver_config();
    const CouplingOptions opts{c.eps_meet, c.meeting_rule};
    const std::size_t steps = step_count(t_obs, c.dt);
    MarginalSample s{std::vector<double>(c.M), std::vector<double>(c.M)};
    const auto finals = parallel_map(c.M, threads_for(c), [&](std::size_t i) {
        StreamPair streams = StreamPair::for_trajectory(c.seed, i);
        CoupledStepper stepper(g, cfg);
        CoupledPair pair = CoupledPair::start(x1, x2, c.eps_meet);
        Field dW1(g), dW2(g);
        for (std::size_t k = 0; k < steps; ++k) {
            sample_white_increment(dW1, c.dt, streams.first);
            sample_white_increment(dW2, c.dt, streams.second);
            stepper.step(pair, spec, dW1, dW2, streams.first.next_uniform(), opts);
        }
        return which == 1 ? pair.x1 : pair.x2;
    });
    for (std::size_t i = 0; i < c.M; ++i) record_mode_stats(finals[i], e1, s, i);
    return s;
}

namespace {

MarginalSample plain_runs(const ExperimentConfig& c, const DriftSpec& spec, std::size_t steps,
                          std::uint64_t seed, std::size_t which) {
    if (which != 1 && which != 2) throw PreconditionError("plain_marginal: which must be 1 or 2");
    const Grid g = make_grid(c.n);
    const Field x0 = make_profile(g, which == 1 ? c.x1 : c.x2);
    const Field e1 = SineBasis(g).mode(1);
    const SolverConfig cfg = c.solver_config();
    MarginalSample s{std::vector<double>(c.M), std::vector<double>(c.M)};
    const auto finals = parallel_map(c.M, threads_for(c), [&](std::size_t i) {
        NoiseStream stream(seed, i);
        SemiImplicitStepper stepper(g, cfg);
        Field u = x0;
        Field dW(g);
        for (std::size_t k = 0; k < steps; ++k) {
            sample_white_increment(dW, c.dt, stream);
            stepper.step(u, spec, dW);
        }
        return u;
    });
    for (std::size_t i = 0; i < c.M; ++i) record_mode_stats(finals[i], e1, s, i);
    return s;
}

} // namespace

MarginalSample plain_marginal(const ExperimentConfig& c, double t_obs, std::size_t which) {
    return plain_runs(c, c.drift_spec(), step_count(t_obs, c.dt), derived_seed(c.seed, kPlainTag + which),
                      which);
}

MarginalSample ou_marginal(const ExperimentConfig& c, double t_obs) {
    const Grid g = make_grid(c.n);
    const Field x1 = make_profile(g, c.x1);
    const Field e1 = SineBasis(g).mode(1);
    const OUSpectralSampler sampler(g, c.K == 0 ? c.n : c.K, EigenKind::Discrete);
    const std::uint64_t seed = derived_seed(c.seed, kOuTag);
    // The stepper lands on steps * dt, so sample the oracle at the same time.
    const double t = static_cast<double>(step_count(t_obs, c.dt)) * c.dt;
    MarginalSample s{std::vector<double>(c.M), std::vector<double>(c.M)};
    const auto finals = parallel_map(c.M, threads_for(c), [&](std::size_t i) {
        NoiseStream stream(seed, i);
        return sampler.sample(x1, t, stream);
    });
    for (std::size_t i = 0; i < c.M; ++i) record_mode_stats(finals[i], e1, s, i);
    return s;
}

MarginalTest compare_marginals(const MarginalSample& a, const MarginalSample& b) {
    return {ks_two_sample(a.mode1, b.mode1), ks_two_sample(a.l2sq, b.l2sq)};
}

StagedEnsemble run_staged_ensemble(const ExperimentConfig& c) {
    c.validate();
    StagedEnsemble e;
    StagedParams p;
    p.rho0 = c.rho0;
    p.rho1 = c.rho1;
    p.R = c.R;
    p.eps_meet = c.eps_meet;
    p.dt = c.dt;
    p.blowup_guard = c.blowup_guard;
    p.wait_coupling = c.wait_coupling;
    p.rule = c.meeting_rule;
    p.T0 = wait_time(c.rho0, c.rho1);
    p.T = c.T > 0.0 ? c.T : p.T0 + 1.0;
    if (c.nu == 0.0) {
        CalibrationOptions o;
        o.n_interior = c.n;
        o.dt = c.dt;
        o.blowup_guard = c.blowup_guard;
        o.wait_coupling = c.wait_coupling;
        o.delta = c.moment_delta;
        o.seed = derived_seed(c.seed, kCalibrationTag);
        o.threads = c.threads;
        o.gamma_interp = c.gamma_interp;
        e.calibration = calibrate(c.rho0, c.rho1, c.R, c.calib_budget, o);
        e.calibrated = true;
        p.nu = e.calibration.staged_params(o).nu;
    } else {
        p.nu = c.nu;
    }
    p.validate();
    e.params = p;

    const Grid g = make_grid(c.n);
    const Field x1 = make_profile(g, c.x1);
    const Field x2 = make_profile(g, c.x2);
    e.traces = parallel_map(c.M, threads_for(c), [&](std::size_t i) {
        StreamPair streams = StreamPair::for_trajectory(c.seed, i);
        return run_staged(x1, x2, p, c.k_max, streams);
    });
    return e;
}

std::vector<StagedRow> staged_table(const StagedEnsemble& e) {
    if (e.traces.empty()) throw InsufficientData("staged_table: no traces");
    std::size_t k_max = 0;
    for (const auto& t : e.traces) k_max = std::max(k_max, t.blocks.size());
    std::vector<StagedRow> rows;
    std::vector<double> terms(e.traces.size());
    for (std::size_t k = 1; k <= k_max; ++k) {
        std::size_t uncoupled = 0;
        for (std::size_t i = 0; i < e.traces.size(); ++i) {
            const auto& tr = e.traces[i];
            uncoupled += (k > tr.blocks.size() || !tr.coupled_after(k)) ? 1 : 0;
            terms[i] = kantorovich_term(tr, e.params.nu, k);
        }
        rows.push_back({k, clopper_pearson(uncoupled, e.traces.size()), mean_ci(terms)});
    }
    return rows;
}

MarginalTest staged_marginal_test(const ExperimentConfig& c, const StagedEnsemble& e, std::size_t k,
                                  std::size_t which) {
    const Grid g = make_grid(c.n);
    const Field e1 = SineBasis(g).mode(1);
    MarginalSample coupled;
    for (const auto& tr : e.traces) {
        if (tr.blocks.size() < k || tr.blocks[k - 1].blowup) continue;
        const Field& x = which == 1 ? tr.blocks[k - 1].end_state.x1 : tr.blocks[k - 1].end_state.x2;
        coupled.mode1.push_back(inner(x, e1));
        const double r = norm(x, NormKind::L2);
        coupled.l2sq.push_back(r * r);
    }
    const std::size_t steps = k * step_count(e.params.T, e.params.dt);
    const MarginalSample plain =
        plain_runs(c, BurgersDrift{}, steps, derived_seed(c.seed, kStagedPlainTag), which);
    return compare_marginals(coupled, plain);
}

std::vector<OuStatistic> ou_validate(const ExperimentConfig& c) {
    c.validate();
    const Grid g = make_grid(c.n);
    const Field x1 = make_profile(g, c.x1);
    const Field e1 = SineBasis(g).mode(1);
    const Field smooth = sample_function(g, [](double x) { return x * (1.0 - x); });
    const std::size_t a = c.n / 4;
    const std::size_t b = (3 * c.n) / 4;
    const std::size_t steps = step_count(c.t_max, c.dt);
    const double t = static_cast<double>(steps) * c.dt;
    const SolverConfig cfg = c.solver_config();
    const OUSpectralSampler sampler(g, c.K == 0 ? c.n : c.K, EigenKind::Discrete);
    const std::uint64_t s_seed = derived_seed(c.seed, kOuStepperTag);
    const std::uint64_t o_seed = derived_seed(c.seed, kOuTag);

    const auto stepper_fields = parallel_map(c.M, threads_for(c), [&](std::size_t i) {
        NoiseStream stream(s_seed, i);
        SemiImplicitStepper stepper(g, cfg);
        Field u = x1;
        Field dW(g);
        for (std::size_t k = 0; k < steps; ++k) {
            sample_white_increment(dW, c.dt, stream);
            stepper.step(u, ZeroDrift{}, dW);
        }
        return u;
    });
    const auto oracle_fields = parallel_map(c.M, threads_for(c), [&](std::size_t i) {
        NoiseStream stream(o_seed, i);
        return sampler.sample(x1, t, stream);
    });

    struct Stat {
        const char* name;
        std::function<double(const Field&)> fn;
    };
    const std::vector<Stat> stats = {
        {"mode1_mean", [&](const Field& u) { return inner(u, e1); }},
        {"mode1_second_moment", [&](const Field& u) { const double v = inner(u, e1); return v * v; }},
        {"smooth_second_moment", [&](const Field& u) { const double v = inner(u, smooth); return v * v; }},
        {"mode1_smooth_cross", [&](const Field& u) { return inner(u, e1) * inner(u, smooth); }},
        {"node_cross", [&](const Field& u) { return u[a] * u[b]; }},
    };
    std::vector<OuStatistic> out;
    std::vector<double> xs(c.M), ys(c.M);
    for (const auto& st : stats) {
        for (std::size_t i = 0; i < c.M; ++i) {
            xs[i] = st.fn(stepper_fields[i]);
            ys[i] = st.fn(oracle_fields[i]);
        }
        OuStatistic r{st.name, mean_ci(xs), mean_ci(ys), 0.0};
        const double se = std::hypot(r.stepper.std_error, r.oracle.std_error);
        r.z = se > 0.0 ? (r.stepper.mean - r.oracle.mean) / se : 0.0;
        out.push_back(r);
    }
    return out;
}

namespace {

void write_survival(const std::filesystem::path& dir, const std::vector<SurvivalPoint>& curve) {
    CsvWriter w(dir / "survival.csv", "t,p_hat,ci_lo,ci_hi");
    for (const auto& sp : curve) w.row(sp.t, sp.p.p_hat, sp.p.lo, sp.p.hi);
}

void write_lyapunov(const std::filesystem::path& dir, const LyapunovTable& t) {
    std::ofstream out(dir / "lyapunov.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write lyapunov.csv");
    t.write_csv(out);
}

void run_rd_couple(const ExperimentConfig& c, const std::filesystem::path& dir, ReportBundle& rb,
                   nlohmann::ordered_json& timings) {
    auto t0 = Clock::now();
    const CoupledEnsemble ens = run_coupled_ensemble(c, true);
    timings["ensemble"] = seconds_since(t0);

    {
        CsvWriter w(dir / "tau_samples.csv", "traj_id,tau,censored,blowup");
        for (const auto& o : ens.outcomes) w.row(o.trajectory_id, o.tau, o.censored, o.blowup);
        rb.artifacts.push_back("tau_samples.csv");
    }
    const auto curve = survival_curve(ens.outcomes, ens.times);
    write_survival(dir, curve);
    rb.artifacts.push_back("survival.csv");

    const auto tv = tv_check(ens.observations, ens.functions, ens.outcomes);
    std::size_t tv_violations = 0;
    {
        CsvWriter w(dir / "tv_check.csv", "function,t,mean_diff,diff_se,bound,bound_hi,violation");
        for (const auto& r : tv) {
            w.row(r.function, r.t, r.mean_diff, r.diff_se, r.bound, r.bound_hi, r.violation);
            tv_violations += r.violation ? 1 : 0;
        }
        rb.artifacts.push_back("tv_check.csv");
    }

    auto& s = rb.summary;
    std::size_t censored = 0, blowups = 0;
    for (const auto& o : ens.outcomes) {
        censored += o.censored ? 1 : 0;
        blowups += o.blowup ? 1 : 0;
    }
    const Grid g = make_grid(c.n);
    const double distance = norm(make_profile(g, c.x1) - make_profile(g, c.x2), NormKind::L2);
    s["samples"] = ens.outcomes.size();
    s["censored"] = censored;
    s["blowups"] = blowups;
    s["distance"] = distance;
    s["tv_violations"] = tv_violations;
    s["checks"]["coupling_inequality"] = tv_violations == 0;

    if (c.drift != DriftKind::ReactionDiffusion) {
        std::vector<double> taus;
        for (const auto& o : ens.outcomes) {
            if (!o.censored) taus.push_back(o.tau);
        }
        if (!taus.empty()) s["mean_tau"] = ci_json(mean_ci(taus));
        return;
    }
    t0 = Clock::now();
    const LyapunovTable table = rd_table(c, distance);
    timings["lyapunov"] = seconds_since(t0);
    try {
        const TauStats st = estimate_tau_stats(ens.outcomes, table, distance, ens.times);
        const auto viol = tail_check(st);
        s["mean_tau"] = ci_json(st.mean);
        s["Lambda"] = st.lambda;
        s["f_at_distance"] = st.f_bound;
        s["mean_bound_with_slack"] = 1.1 * st.f_bound;
        s["exp_moment"] = st.exp_moment;
        s["exp_moment_lower_with_censoring"] = st.exp_moment_lower;
        s["exp_bound_from_f"] = st.exp_bound_proof;
        s["exp_bound_displayed"] = st.exp_bound_display;
        s["tail_rate"] = num(st.tail_rate);
        s["tail_goodness"] = num(st.tail_goodness);
        s["tail_violations"] = viol.size();
        s["checks"]["mean_tau_bound"] = st.mean.hi <= 1.1 * st.f_bound;
        s["checks"]["tail_bound"] = viol.empty();
        s["checks"]["exp_moment_bound"] = st.exp_moment <= st.exp_bound_proof;
    } catch (const InsufficientData& e) {
        s["mean_tau_error"] = e.what();
        s["checks"]["mean_tau_bound"] = false;
    }
}

void run_staged_experiment(const ExperimentConfig& c, const std::filesystem::path& dir,
                           ReportBundle& rb, nlohmann::ordered_json& timings) {
    auto t0 = Clock::now();
    const StagedEnsemble e = run_staged_ensemble(c);
    timings["calibration_and_ensemble"] = seconds_since(t0);
    const auto rows = staged_table(e);
    {
        CsvWriter w(dir / "staged.csv", "k,p_uncoupled,ci_lo,ci_hi,F_k");
        for (const auto& r : rows) w.row(r.k, r.p_uncoupled.p_hat, r.p_uncoupled.lo, r.p_uncoupled.hi, r.F.mean);
        rb.artifacts.push_back("staged.csv");
    }
    auto& s = rb.summary;
    s["params"] = {{"rho0", e.params.rho0}, {"rho1", e.params.rho1}, {"R", e.params.R},
                   {"T0", e.params.T0},     {"T", e.params.T},       {"nu", e.params.nu}};
    if (e.calibrated) {
        const auto& cr = e.calibration;
        s["calibration"] = {{"alpha_hat", ci_json(cr.alpha_hat)},
                            {"c_R", cr.c_R},
                            {"log_f_R_at_2rho1", cr.log_f_R_at_2rho1},
                            {"condition_312_ok", cr.condition_312_ok},
                            {"condition_313_ok", cr.condition_313_ok},
                            {"K1_hat", ci_json(cr.K1_hat)},
                            {"K2_hat", ci_json(cr.K2_hat)},
                            {"K3_hat", ci_json(cr.K3_hat)},
                            {"delta", cr.delta},
                            {"blowups", cr.blowups}};
    }
    std::size_t blowups = 0, entered_first = 0, coupled_first = 0, truncations = 0;
    for (const auto& tr : e.traces) {
        blowups += tr.blowup ? 1 : 0;
        entered_first += tr.blocks.front().entered_ball ? 1 : 0;
        coupled_first += tr.blocks.front().coupled_at_end ? 1 : 0;
        for (const auto& b : tr.blocks) truncations += b.truncation_exit ? 1 : 0;
    }
    s["traces"] = e.traces.size();
    s["blowups"] = blowups;
    s["first_block_entered"] = entered_first;
    s["first_block_coupled"] = coupled_first;
    s["truncation_exits"] = truncations;

    bool strictly_decreasing = true;
    bool kantorovich_nonincreasing = true;
    for (std::size_t i = 2; i < rows.size(); ++i) {
        if (!(rows[i].p_uncoupled.p_hat < rows[i - 1].p_uncoupled.p_hat)) strictly_decreasing = false;
    }
    const double z = normal_two_sided_z(0.95);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double slack = z * std::hypot(rows[i].F.std_error, rows[i - 1].F.std_error);
        if (rows[i].F.mean > rows[i - 1].F.mean + slack) kantorovich_nonincreasing = false;
    }
    std::vector<double> ks, ps;
    for (const auto& r : rows) {
        ks.push_back(static_cast<double>(r.k));
        ps.push_back(r.p_uncoupled.p_hat);
    }
    bool fit_ok = false;
    try {
        const DecayFit fit = fit_decay(ks, ps);
        s["decay_fit"] = {{"rate", fit.rate}, {"goodness", fit.goodness},
                          {"points_used", fit.points_used}, {"truncated", fit.truncated}};
        fit_ok = fit.rate > 0.0 && fit.goodness >= 0.9;
    } catch (const DegenerateFit& ex) {
        s["decay_fit"] = {{"error", ex.what()}};
    }
    s["checks"]["uncoupled_strictly_decreasing_from_k2"] = strictly_decreasing;
    s["checks"]["geometric_decay_fit"] = fit_ok;
    s["checks"]["kantorovich_nonincreasing"] = kantorovich_nonincreasing;
}

void run_ou_experiment(const ExperimentConfig& c, const std::filesystem::path& dir, ReportBundle& rb,
                       nlohmann::ordered_json& timings) {
    const auto t0 = Clock::now();
    const auto stats = ou_validate(c);
    timings["ensemble"] = seconds_since(t0);
    CsvWriter w(dir / "ou_validate.csv", "statistic,stepper_mean,stepper_se,oracle_mean,oracle_se,z");
    bool ok = true;
    for (const auto& st : stats) {
        w.row(st.name, st.stepper.mean, st.stepper.std_error, st.oracle.mean, st.oracle.std_error, st.z);
        rb.summary["z"][st.name] = st.z;
        ok = ok && std::abs(st.z) <= 3.0;
    }
    rb.artifacts.push_back("ou_validate.csv");
    rb.summary["checks"]["within_3_standard_errors"] = ok;
}

void run_lyapunov_experiment(const ExperimentConfig& c, const std::filesystem::path& dir,
                             ReportBundle& rb, nlohmann::ordered_json& timings) {
    const auto t0 = Clock::now();
    auto& s = rb.summary;
    if (c.lyapunov_kind == LyapunovBuildKind::Cutoff) {
        const LyapunovTable t = build_f_R(c.R, c.gamma_interp, kDiscreteInterpolationConstant, c.r_max, c.quad_tol);
        timings["build"] = seconds_since(t0);
        write_lyapunov(dir, t);
        rb.artifacts.push_back("lyapunov.csv");
        s["kind"] = "cutoff";
        s["c_R"] = t.c_R();
        s["log_fprime0"] = t.log_scale();
        s["csv_normalized_by_fprime0"] = t.log_scale() != 0.0;
        s["log_Lambda"] = t.log_Lambda();
        return;
    }
    const RDConstants k = dissipativity_constants(c.alpha, c.beta, c.gamma, c.delta);
    const LyapunovTable t = build_f(k, c.r_max, c.quad_tol);
    timings["build"] = seconds_since(t0);
    write_lyapunov(dir, t);
    rb.artifacts.push_back("lyapunov.csv");

    double max_res = 0.0;
    const double r_hi = std::min(10.0, 0.9 * c.r_max);
    for (double r = 0.01; r <= r_hi + 1e-12; r += 0.001) max_res = std::max(max_res, std::abs(t.ode_residual(r)));
    bool product_ok = true, decreasing = true, positive = true;
    for (std::size_t i = 0; i < t.knot_count(); ++i) {
        const double r = t.knot(i);
        const double fp = t.tabulated(i, Which::fprime);
        product_ok = product_ok && (k.a * r * r * r - k.lambda_ * r) * fp < 1.0;
        positive = positive && fp > 0.0;
        if (i > 0) decreasing = decreasing && fp < t.tabulated(i - 1, Which::fprime);
    }
    s["kind"] = "reaction_diffusion";
    s["lambda"] = k.lambda_;
    s["a"] = k.a;
    s["fprime0"] = t.eval(0.0, Which::fprime);
    s["f_infinity"] = t.f_infinity();
    s["Lambda"] = t.Lambda();
    s["max_abs_ode_residual"] = max_res;
    s["residual_range"] = {0.01, r_hi};
    s["checks"]["ode_residual"] = max_res <= 1e-5;
    s["checks"]["product_below_one"] = product_ok;
    s["checks"]["fprime_positive_decreasing"] = positive && decreasing;
    s["checks"]["Lambda_finite"] = std::isfinite(t.Lambda());
}

void run_generator_experiment(const ExperimentConfig& c, const std::filesystem::path& dir,
                              ReportBundle& rb, nlohmann::ordered_json& timings) {
    const auto t0 = Clock::now();
    const Grid g = make_grid(c.n);
    const Field x1 = make_profile(g, c.x1);
    const Field x2 = make_profile(g, c.x2);
    const SolverConfig cfg = c.solver_config();
    const std::uint64_t seed = derived_seed(c.seed, kGeneratorTag);
    std::vector<GeneratorResult> results;
    results.push_back(generator_check("square_zero_drift", x1, x2, ZeroDrift{}, cfg, square_function(), c.M,
                                      seed, c.threads));
    const double distance = norm(x1 - x2, NormKind::L2);
    const LyapunovTable table = rd_table(c, distance);
    results.push_back(generator_check("lyapunov_rd_drift", x1, x2,
                                      ReactionDiffusion{c.alpha, c.beta, c.gamma, c.delta}, cfg,
                                      lyapunov_function(table), c.M, seed + 1, c.threads));
    timings["ensemble"] = seconds_since(t0);
    CsvWriter w(dir / "generator.csv", "case,estimate,std_error,prediction,residual,z");
    bool ok = true;
    for (const auto& r : results) {
        w.row(r.name, r.estimate, r.std_error, r.prediction, r.residual, r.z);
        rb.summary["z"][r.name] = r.z;
        ok = ok && std::abs(r.z) <= 3.0;
    }
    rb.artifacts.push_back("generator.csv");
    rb.summary["checks"]["within_3_standard_errors"] = ok;
}

void run_calibrate_experiment(const ExperimentConfig& c, const std::filesystem::path& dir,
                              ReportBundle& rb, nlohmann::ordered_json& timings) {
    const auto t0 = Clock::now();
    CalibrationOptions o;
    o.n_interior = c.n;
    o.dt = c.dt;
    o.blowup_guard = c.blowup_guard;
    o.wait_coupling = c.wait_coupling;
    o.delta = c.moment_delta;
    o.seed = derived_seed(c.seed, kCalibrationTag);
    o.threads = c.threads;
    o.gamma_interp = c.gamma_interp;
    const CalibrationReport cr = calibrate(c.rho0, c.rho1, c.R, c.calib_budget, o);
    timings["calibrate"] = seconds_since(t0);
    CsvWriter w(dir / "calibration.csv", "quantity,value,ci_lo,ci_hi");
    w.row("T0", cr.T0, cr.T0, cr.T0);
    w.row("alpha_hat", cr.alpha_hat.p_hat, cr.alpha_hat.lo, cr.alpha_hat.hi);
    w.row("c_R", cr.c_R, cr.c_R, cr.c_R);
    w.row("log_f_R_at_2rho1", cr.log_f_R_at_2rho1, cr.log_f_R_at_2rho1, cr.log_f_R_at_2rho1);
    w.row("K1_hat", cr.K1_hat.mean, cr.K1_hat.lo, cr.K1_hat.hi);
    w.row("K2_hat", cr.K2_hat.mean, cr.K2_hat.lo, cr.K2_hat.hi);
    w.row("K3_hat", cr.K3_hat.mean, cr.K3_hat.lo, cr.K3_hat.hi);
    w.row("nu", cr.nu, cr.nu, cr.nu);
    rb.artifacts.push_back("calibration.csv");
    auto& s = rb.summary;
    s["T0"] = cr.T0;
    s["alpha_hat"] = ci_json(cr.alpha_hat);
    s["c_R"] = cr.c_R;
    s["log_f_R_at_2rho1"] = cr.log_f_R_at_2rho1;
    s["f_R_at_2rho1"] = num(cr.f_R_at_2rho1());
    s["K1_hat"] = ci_json(cr.K1_hat);
    s["K2_hat"] = ci_json(cr.K2_hat);
    s["K3_hat"] = ci_json(cr.K3_hat);
    s["nu"] = num(cr.nu);
    s["blowups"] = cr.blowups;
    s["checks"]["condition_312_ok"] = cr.condition_312_ok;
    s["checks"]["condition_313_ok"] = cr.condition_313_ok;
}

} // namespace

ReportBundle run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
    config.validate();
    const auto t0 = Clock::now();
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    ReportBundle rb;
    rb.out_dir = out_dir;
    rb.summary["experiment"] = to_string(config.experiment);
    rb.summary["version"] = "spdecouple 1.0.0";
    rb.summary["seed"] = config.seed;
    rb.summary["threads"] = resolve_threads(config.threads);
    nlohmann::ordered_json timings;

    switch (config.experiment) {
    case ExperimentKind::RdCouple: run_rd_couple(config, dir, rb, timings); break;
    case ExperimentKind::BurgersStaged: run_staged_experiment(config, dir, rb, timings); break;
    case ExperimentKind::OuValidate: run_ou_experiment(config, dir, rb, timings); break;
    case ExperimentKind::LyapunovBuild: run_lyapunov_experiment(config, dir, rb, timings); break;
    case ExperimentKind::GeneratorCheck: run_generator_experiment(config, dir, rb, timings); break;
    case ExperimentKind::Calibrate: run_calibrate_experiment(config, dir, rb, timings); break;
    }

    {
        std::ofstream cfg_out(dir / "config.cfg", std::ios::binary | std::ios::trunc);
        write_config(cfg_out, config);
        rb.artifacts.push_back("config.cfg");
    }
    timings["total"] = seconds_since(t0);
    rb.summary["artifacts"] = rb.artifacts;
    rb.summary["timings_seconds"] = timings;
    std::ofstream js(dir / "summary.json", std::ios::binary | std::ios::trunc);
    js << rb.summary.dump(2) << '\n';
    rb.artifacts.push_back("summary.json");
    return rb;
}

} // namespace spdecouple
