#include "spdecouple/spde_solvers.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "spdecouple/errors.hpp"

namespace spdecouple {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// out_i = scale * (u_{i+1}^2 - u_{i-1}^2) / (2 dx) with u_0 = u_{n+1} = 0.
// `out` must not alias `u`.
void divergence_of_square(const Field& u, double scale, std::vector<double>& out) {
    const std::size_t n = u.size();
    const double c = scale / (2.0 * u.grid.dx);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? 0.0 : u[i - 1] * u[i - 1];
        const double right = i + 1 == n ? 0.0 : u[i + 1] * u[i + 1];
        out[i] = c * (right - left);
    }
}

double l4_power4(const Field& u) {
    double s = 0.0;
    for (double v : u.values) s += (v * v) * (v * v);
    return u.grid.dx * s;
}

} // namespace

void validate(const DriftSpec& spec) {
    std::visit(overloaded{
                   [](const ReactionDiffusion& rd) {
                       if (!(rd.alpha > 0.0)) {
                           throw PreconditionError("ReactionDiffusion: alpha must be > 0");
                       }
                   },
                   [](const CutoffBurgers& cb) {
                       if (!(cb.R > 0.0)) throw PreconditionError("CutoffBurgers: R must be > 0");
                   },
                   [](const auto&) {},
               },
               spec);
}

void validate(const SolverConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw PreconditionError("SolverConfig: dt must be > 0");
    if (!(cfg.blowup_guard > 0.0)) {
        throw PreconditionError("SolverConfig: blowup_guard must be > 0");
    }
}

Field drift_eval(const DriftSpec& spec, const Field& u) {
    Field out(u.grid);
    drift_eval(spec, u, out);
    return out;
}

void drift_eval(const DriftSpec& spec, const Field& u, Field& out) {
    if (&out == &u) throw PreconditionError("drift_eval: output must not alias input");
    const std::size_t n = u.size();
    out.grid = u.grid;
    out.values.resize(n);
    std::visit(overloaded{
                   [&](const ZeroDrift&) { std::fill(out.values.begin(), out.values.end(), 0.0); },
                   [&](const ReactionDiffusion& rd) {
                       for (std::size_t i = 0; i < n; ++i) {
                           const double x = u[i];
                           out[i] = ((-rd.alpha * x + rd.beta) * x + rd.gamma) * x + rd.delta;
                       }
                   },
                   [&](const BurgersDrift&) { divergence_of_square(u, 1.0, out.values); },
                   [&](const CutoffBurgers& cb) {
                       const double l4 = norm(u, NormKind::L4);
                       const double scale = l4 <= cb.R ? 1.0 : (cb.R * cb.R) / (l4 * l4);
                       divergence_of_square(u, scale, out.values);
                   },
               },
               spec);
}

Field cutoff_square(const Field& u, double R) {
    if (!(R > 0.0)) throw PreconditionError("cutoff_square: R must be > 0");
    const double l4 = norm(u, NormKind::L4);
    const double scale = l4 <= R ? 1.0 : (R * R) / (l4 * l4);
    Field out(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = scale * u[i] * u[i];
    return out;
}

SemiImplicitStepper::SemiImplicitStepper(const Grid& grid, const SolverConfig& cfg)
    : grid_(grid), cfg_(cfg), scratch_(grid) {
    validate(cfg);
    const std::size_t n = grid.n_interior;
    const double r = cfg.dt / (grid.dx * grid.dx);
    const double diag = 1.0 + 2.0 * r;
    off_ = -r;
    c_prime_.resize(n);
    inv_denom_.resize(n);
    double c_prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = diag - off_ * c_prev;
        inv_denom_[i] = 1.0 / denom;
        c_prime_[i] = off_ * inv_denom_[i];
        c_prev = c_prime_[i];
    }
}

void SemiImplicitStepper::explicit_part(const Field& u, const DriftSpec& spec, Field& rhs) {
    drift_eval(spec, u, rhs);
    const double dt = cfg_.dt;
    for (std::size_t i = 0; i < u.size(); ++i) rhs[i] = u[i] + dt * rhs[i];
}

void SemiImplicitStepper::solve(Field& rhs) const {
    const std::size_t n = rhs.size();
    auto& d = rhs.values;
    // Forward sweep: d'_i = (d_i - off * d'_{i-1}) / denom_i
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = (d[i] - off_ * prev) * inv_denom_[i];
        prev = d[i];
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c_prime_[i] * d[i + 1];
}

void SemiImplicitStepper::check_guard(const Field& u) const {
    const double p4 = l4_power4(u);
    const double guard = cfg_.blowup_guard;
    if (!std::isfinite(p4) || p4 > guard * guard * guard * guard) {
        std::ostringstream os;
        os << "|X|_4 = " << std::pow(p4, 0.25) << " exceeds blowup guard " << guard;
        throw BlowUp(os.str());
    }
}

void SemiImplicitStepper::step(Field& u, const DriftSpec& spec, const Field& dW) {
    explicit_part(u, spec, scratch_);
    for (std::size_t i = 0; i < u.size(); ++i) scratch_[i] += dW[i];
    solve(scratch_);
    check_guard(scratch_);
    std::swap(u.values, scratch_.values);
}

Field step_semi_implicit(const Field& u, const DriftSpec& spec, const SolverConfig& cfg,
                         const Field& dW) {
    validate(spec);
    SemiImplicitStepper stepper(u.grid, cfg);
    stepper.check_guard(u);
    Field out = u;
    stepper.step(out, spec, dW);
    return out;
}

Field solve_deterministic_burgers(const Field& x0, double t_end, const SolverConfig& cfg) {
    if (t_end < 0.0) throw PreconditionError("solve_deterministic_burgers: t_end must be >= 0");
    validate(cfg);
    Field u = x0;
    if (t_end == 0.0) return u;
    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / cfg.dt - 1e-9));
    SolverConfig step_cfg = cfg;
    step_cfg.dt = t_end / static_cast<double>(n_steps);
    SemiImplicitStepper stepper(x0.grid, step_cfg);
    const Field zero(x0.grid);
    const DriftSpec burgers = BurgersDrift{};
    for (std::size_t s = 0; s < n_steps; ++s) stepper.step(u, burgers, zero);
    return u;
}

SineBasis::SineBasis(const Grid& g) : grid_(g), n_(g.n_interior), table_(n_ * n_) {
    const double norm_factor = std::sqrt(2.0);
    for (std::size_t k = 1; k <= n_; ++k) {
        for (std::size_t i = 0; i < n_; ++i) {
            const double x = static_cast<double>(i + 1) * g.dx;
            table_[(k - 1) * n_ + i] =
                norm_factor * std::sin(static_cast<double>(k) * std::numbers::pi * x);
        }
    }
}

double SineBasis::eigenvalue(std::size_t k, EigenKind kind) const {
    const double kk = static_cast<double>(k);
    if (kind == EigenKind::Continuous) return std::numbers::pi * std::numbers::pi * kk * kk;
    const double s = std::sin(kk * std::numbers::pi * grid_.dx / 2.0);
    return 4.0 / (grid_.dx * grid_.dx) * s * s;
}

Field SineBasis::mode(std::size_t k) const {
    Field e(grid_);
    std::copy_n(table_.begin() + static_cast<std::ptrdiff_t>((k - 1) * n_), n_, e.values.begin());
    return e;
}

std::vector<double> SineBasis::coefficients(const Field& u) const {
    std::vector<double> c(n_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
        const double* row = table_.data() + k * n_;
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += row[i] * u[i];
        c[k] = grid_.dx * s;
    }
    return c;
}

Field SineBasis::synthesize(const std::vector<double>& coeffs) const {
    Field u(grid_);
    for (std::size_t k = 0; k < coeffs.size() && k < n_; ++k) {
        const double* row = table_.data() + k * n_;
        for (std::size_t i = 0; i < n_; ++i) u[i] += coeffs[k] * row[i];
    }
    return u;
}

OUSpectralSampler::OUSpectralSampler(const Grid& g, std::size_t K, EigenKind kind)
    : basis_(g), K_(K), kind_(kind) {
    if (K == 0 || K > g.n_interior) {
        throw PreconditionError("OUSpectralSampler: need 1 <= K <= n_interior");
    }
}

double OUSpectralSampler::transition_variance(std::size_t k, double t) const {
    const double lam = eigenvalue(k);
    return -std::expm1(-2.0 * lam * t) / (2.0 * lam);
}

double OUSpectralSampler::stationary_variance(std::size_t k) const {
    return 1.0 / (2.0 * eigenvalue(k));
}

Field OUSpectralSampler::sample(const Field& x0, double t, NoiseStream& stream) const {
    if (t < 0.0) throw PreconditionError("sample_ou_exact: t must be >= 0");
    if (t == 0.0) {
        std::vector<double> unused(K_);
        stream.next_normals(unused);
        return x0;
    }
    std::vector<double> c = basis_.coefficients(x0);
    std::vector<double> z(K_);
    stream.next_normals(z);
    for (std::size_t k = 1; k <= c.size(); ++k) {
        c[k - 1] *= std::exp(-eigenvalue(k) * t);
        if (k <= K_) c[k - 1] += std::sqrt(transition_variance(k, t)) * z[k - 1];
    }
    return basis_.synthesize(c);
}

Field sample_ou_exact(const Field& x0, double t, std::size_t K, NoiseStream& stream,
                      EigenKind kind) {
    return OUSpectralSampler(x0.grid, K, kind).sample(x0, t, stream);
}

} // namespace spdecouple
