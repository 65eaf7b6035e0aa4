#include "spdecouple/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include "spdecouple/errors.hpp"

namespace spdecouple {

double normal_two_sided_z(double level) {
    if (!(level > 0.0 && level < 1.0)) throw PreconditionError("confidence level must be in (0,1)");
    return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

MeanCI mean_ci(std::span<const double> xs, double level) {
    if (xs.empty()) throw InsufficientData("mean_ci: empty sample");
    MeanCI r;
    r.n = xs.size();
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(r.n);
    r.std_error = std::sqrt(sample_variance(xs) / static_cast<double>(r.n));
    const double z = normal_two_sided_z(level);
    r.lo = r.mean - z * r.std_error;
    r.hi = r.mean + z * r.std_error;
    return r;
}

BinomialCI clopper_pearson(std::size_t successes, std::size_t trials, double level) {
    if (trials == 0) throw InsufficientData("clopper_pearson: zero trials");
    if (successes > trials) throw PreconditionError("clopper_pearson: successes > trials");
    const double a = 0.5 * (1.0 - level);
    const double k = static_cast<double>(successes);
    const double n = static_cast<double>(trials);
    BinomialCI r{successes, trials, k / n, 0.0, 1.0};
    if (successes > 0) r.lo = boost::math::quantile(boost::math::beta_distribution<>(k, n - k + 1.0), a);
    if (successes < trials) {
        r.hi = boost::math::quantile(boost::math::beta_distribution<>(k + 1.0, n - k), 1.0 - a);
    }
    return r;
}

double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    // The alternating series converges poorly for small lambda, where the tail is 1 to double precision.
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InsufficientData("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size());
    const double nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

DecayFit fit_decay(std::span<const double> k, std::span<const double> p) {
    if (k.size() != p.size()) throw PreconditionError("fit_decay: size mismatch");
    DecayFit fit;
    std::size_t m = 0;
    while (m < p.size() && p[m] > 0.0) ++m;
    fit.truncated = m < p.size();
    if (m < 3) throw DegenerateFit("fit_decay: fewer than 3 positive points");
    fit.points_used = m;

    double mk = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mk += k[i];
        my += std::log(p[i]);
    }
    mk /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double skk = 0.0, sky = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dk = k[i] - mk;
        const double dy = std::log(p[i]) - my;
        skk += dk * dk;
        sky += dk * dy;
        syy += dy * dy;
    }
    if (skk == 0.0) throw DegenerateFit("fit_decay: all k equal");
    const double slope = sky / skk;
    fit.rate = -slope;
    fit.intercept = my - slope * mk;
    double sse = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = std::log(p[i]) - (fit.intercept + slope * k[i]);
        sse += r * r;
    }
    fit.goodness = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

} // namespace spdecouple
