#include "spdecouple/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "spdecouple/errors.hpp"

namespace spdecouple {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) {
        throw ConfigError("expected a finite number, got '" + s + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) throw ConfigError("expected a nonnegative integer, got '" + s + "'");
    return v;
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), p);
}

template <typename E>
struct EnumNames {
    std::vector<std::pair<E, const char*>> names;

    const char* name(E e) const {
        for (const auto& [k, n] : names) {
            if (k == e) return n;
        }
        throw ConfigError("unnamed enum value");
    }
    E parse(const std::string& s) const {
        for (const auto& [k, n] : names) {
            if (s == n) return k;
        }
        std::string options;
        for (const auto& [k, n] : names) options += (options.empty() ? "" : "|") + std::string(n);
        throw ConfigError("expected one of " + options + ", got '" + s + "'");
    }
};

const EnumNames<ExperimentKind> kExperimentNames{{{ExperimentKind::RdCouple, "rd_couple"},
                                                  {ExperimentKind::BurgersStaged, "burgers_staged"},
                                                  {ExperimentKind::OuValidate, "ou_validate"},
                                                  {ExperimentKind::LyapunovBuild, "lyapunov_build"},
                                                  {ExperimentKind::GeneratorCheck, "generator_check"},
                                                  {ExperimentKind::Calibrate, "calibrate"}}};
const EnumNames<DriftKind> kDriftNames{{{DriftKind::Zero, "zero"},
                                        {DriftKind::ReactionDiffusion, "reaction_diffusion"},
                                        {DriftKind::Burgers, "burgers"},
                                        {DriftKind::CutoffBurgers, "cutoff_burgers"}}};
const EnumNames<MeetingRule> kRuleNames{{{MeetingRule::Maximal, "maximal"}, {MeetingRule::SnapOnly, "snap"}}};
const EnumNames<WaitCoupling> kWaitNames{
    {{WaitCoupling::Synchronous, "synchronous"}, {WaitCoupling::Independent, "independent"}}};
const EnumNames<LyapunovBuildKind> kLyapNames{
    {{LyapunovBuildKind::ReactionDiffusion, "reaction_diffusion"}, {LyapunovBuildKind::Cutoff, "cutoff"}}};
const EnumNames<TestFunctionKind> kTestFnNames{
    {{TestFunctionKind::Square, "square"}, {TestFunctionKind::Lyapunov, "lyapunov"}}};

struct Key {
    const char* name;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define SPD_DOUBLE(field)                                                               \
    Key {                                                                               \
        #field, [](const ExperimentConfig& c) { return format_double(c.field); },       \
            [](ExperimentConfig& c, const std::string& v) { c.field = parse_double(v); } \
    }
#define SPD_COUNT(field)                                                                      \
    Key {                                                                                     \
        #field, [](const ExperimentConfig& c) { return std::to_string(c.field); },            \
            [](ExperimentConfig& c, const std::string& v) {                                   \
                c.field = static_cast<decltype(c.field)>(parse_u64(v));                       \
            }                                                                                 \
    }
#define SPD_ENUM(field, table)                                                         \
    Key {                                                                              \
        #field, [](const ExperimentConfig& c) { return std::string(table.name(c.field)); }, \
            [](ExperimentConfig& c, const std::string& v) { c.field = table.parse(v); }  \
    }
#define SPD_PROFILE(field)                                                              \
    Key {                                                                               \
        #field, [](const ExperimentConfig& c) { return to_string(c.field); },           \
            [](ExperimentConfig& c, const std::string& v) { c.field = parse_profile(v); } \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> k = {
        SPD_ENUM(experiment, kExperimentNames),
        SPD_COUNT(n),
        SPD_DOUBLE(dt),
        SPD_COUNT(M),
        SPD_DOUBLE(t_max),
        SPD_COUNT(k_max),
        SPD_DOUBLE(eps_meet),
        SPD_COUNT(seed),
        SPD_COUNT(threads),
        SPD_COUNT(grid_points),
        SPD_DOUBLE(blowup_guard),
        SPD_ENUM(drift, kDriftNames),
        SPD_DOUBLE(alpha),
        SPD_DOUBLE(beta),
        SPD_DOUBLE(gamma),
        SPD_DOUBLE(delta),
        SPD_PROFILE(x1),
        SPD_PROFILE(x2),
        SPD_ENUM(meeting_rule, kRuleNames),
        SPD_DOUBLE(R),
        SPD_DOUBLE(rho0),
        SPD_DOUBLE(rho1),
        SPD_DOUBLE(T),
        SPD_DOUBLE(nu),
        SPD_ENUM(wait_coupling, kWaitNames),
        SPD_COUNT(calib_budget),
        SPD_DOUBLE(moment_delta),
        SPD_ENUM(lyapunov_kind, kLyapNames),
        SPD_DOUBLE(r_max),
        SPD_DOUBLE(quad_tol),
        SPD_DOUBLE(gamma_interp),
        SPD_COUNT(K),
        SPD_ENUM(test_function, kTestFnNames),
    };
    return k;
}

#undef SPD_DOUBLE
#undef SPD_COUNT
#undef SPD_ENUM
#undef SPD_PROFILE

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

} // namespace

Profile parse_profile(const std::string& text) {
    const std::string s = trim(text);
    if (s == "zero") return {};
    const auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')') {
        throw ConfigError("profile must be zero, sine(k,a) or constant(c), got '" + s + "'");
    }
    const std::string name = trim(s.substr(0, open));
    const std::string args = s.substr(open + 1, s.size() - open - 2);
    if (name == "constant") return {Profile::Kind::Constant, 1, parse_double(trim(args))};
    if (name == "sine") {
        const auto comma = args.find(',');
        if (comma == std::string::npos) throw ConfigError("sine profile needs (k,a)");
        const std::uint64_t k = parse_u64(trim(args.substr(0, comma)));
        if (k < 1 || k > 100000) throw ConfigError("sine mode index out of range");
        return {Profile::Kind::Sine, static_cast<int>(k), parse_double(trim(args.substr(comma + 1)))};
    }
    throw ConfigError("unknown profile '" + name + "'");
}

std::string to_string(const Profile& p) {
    switch (p.kind) {
    case Profile::Kind::Zero: return "zero";
    case Profile::Kind::Constant: return "constant(" + format_double(p.value) + ")";
    case Profile::Kind::Sine: return "sine(" + std::to_string(p.k) + "," + format_double(p.value) + ")";
    }
    return "zero";
}

Field make_profile(const Grid& g, const Profile& p) {
    switch (p.kind) {
    case Profile::Kind::Zero: return Field(g);
    case Profile::Kind::Constant: return sample_function(g, [&](double) { return p.value; });
    case Profile::Kind::Sine:
        return sample_function(g, [&](double x) {
            return p.value * std::sqrt(2.0) * std::sin(p.k * 3.14159265358979323846 * x);
        });
    }
    return Field(g);
}

std::string to_string(ExperimentKind k) { return kExperimentNames.name(k); }
ExperimentKind parse_experiment_kind(const std::string& s) { return kExperimentNames.parse(s); }

void ExperimentConfig::validate() const {
    require(n >= 2, "n must be >= 2");
    require(dt > 0.0, "dt must be > 0");
    require(M >= 1, "M must be >= 1");
    require(t_max > 0.0, "t_max must be > 0");
    require(k_max >= 1, "k_max must be >= 1");
    require(eps_meet > 0.0, "eps_meet must be > 0");
    require(grid_points >= 1, "grid_points must be >= 1");
    require(blowup_guard > 0.0, "blowup_guard must be > 0");
    require(alpha > 0.0, "alpha must be > 0");
    require(R > 0.0, "R must be > 0");
    require(rho0 > 0.0 && rho1 > 0.0 && rho1 <= rho0, "need 0 < rho1 <= rho0");
    require(rho1 <= 1.0, "rho1 must be <= 1");
    require(T >= 0.0 && nu >= 0.0, "T and nu must be >= 0 (0 selects the calibrated value)");
    require(calib_budget >= 100, "calib_budget must be >= 100");
    require(moment_delta > 0.0, "moment_delta must be > 0");
    require(r_max > 0.0 && quad_tol > 0.0, "r_max and quad_tol must be > 0");
    require(gamma_interp >= 4.0 / 7.0 - 1e-12 && gamma_interp <= 1.0, "gamma_interp must lie in [4/7, 1]");
    require(K <= n, "K must be <= n");
}

DriftSpec ExperimentConfig::drift_spec() const {
    switch (drift) {
    case DriftKind::Zero: return ZeroDrift{};
    case DriftKind::ReactionDiffusion: return ReactionDiffusion{alpha, beta, gamma, delta};
    case DriftKind::Burgers: return BurgersDrift{};
    case DriftKind::CutoffBurgers: return CutoffBurgers{R};
    }
    return ZeroDrift{};
}

SolverConfig ExperimentConfig::solver_config() const {
    return {dt, blowup_guard, Scheme::SemiImplicitEuler};
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    std::map<std::string, const Key*> index;
    for (const auto& k : keys()) index[k.name] = &k;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = index.find(key);
        if (it == index.end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
        try {
            it->second->set(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
    for (const auto& k : keys()) out << k.name << " = " << k.get(c) << '\n';
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    switch (kind) {
    case ExperimentKind::RdCouple: break;
    case ExperimentKind::BurgersStaged:
        c.drift = DriftKind::Burgers;
        c.dt = 1e-3;
        c.M = 300;
        // |sqrt(2) sin(pi x)|_4 = 1.5^{1/4}, so amplitude 0.85 starts inside the rho0 = 1 ball.
        c.x1 = {Profile::Kind::Sine, 1, 0.85};
        c.x2 = {Profile::Kind::Sine, 1, -0.85};
        break;
    case ExperimentKind::OuValidate:
        c.drift = DriftKind::Zero;
        c.n = 16;
        c.dt = 1e-3;
        c.M = 5000;
        c.t_max = 0.5;
        c.x1 = {Profile::Kind::Sine, 1, 1.0};
        break;
    case ExperimentKind::LyapunovBuild: break;
    case ExperimentKind::GeneratorCheck:
        c.n = 4;
        c.dt = 1e-5;
        c.M = 100000;
        break;
    case ExperimentKind::Calibrate:
        c.drift = DriftKind::Burgers;
        c.dt = 1e-3;
        break;
    }
    return c;
}

} // namespace spdecouple
