#include "spdecouple/grid_noise.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "spdecouple/errors.hpp"

namespace spdecouple {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
// Tags the uniform substream family so it never collides with the Gaussian one.
constexpr std::uint64_t kUniformTag = 0xd1b54a32d192ed03ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// SplitMix64 walk started from a hashed substream key.
class SubstreamGen {
public:
    explicit SubstreamGen(std::uint64_t seed) : state_(mix64(seed)) {}

    std::uint64_t next() {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform on the open interval (0,1); log() is always finite.
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

} // namespace

Grid make_grid(std::size_t n_interior) {
    if (n_interior < 2) {
        throw PreconditionError("make_grid: n_interior must be >= 2, got " +
                                std::to_string(n_interior));
    }
    return Grid{n_interior, 1.0 / static_cast<double>(n_interior + 1)};
}

Field::Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != g.n_interior) {
        throw PreconditionError("Field: value count does not match grid");
    }
}

bool Field::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Field& Field::operator+=(const Field& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values) v *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

double inner(const Field& u, const Field& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) s += u.values[i] * v.values[i];
    return u.grid.dx * s;
}

double norm(const Field& u, NormKind kind) {
    const double dx = u.grid.dx;
    switch (kind) {
    case NormKind::L2: {
        double s = 0.0;
        for (double v : u.values) s += v * v;
        return std::sqrt(dx * s);
    }
    case NormKind::L4: {
        double s = 0.0;
        for (double v : u.values) s += (v * v) * (v * v);
        return std::sqrt(std::sqrt(dx * s));
    }
    case NormKind::H10: {
        double s = 0.0;
        double prev = 0.0;
        for (double v : u.values) {
            s += (v - prev) * (v - prev);
            prev = v;
        }
        s += prev * prev;
        return std::sqrt(s / dx);
    }
    }
    return 0.0;
}

double discrete_first_eigenvalue(const Grid& g) {
    const double s = std::sin(std::numbers::pi * g.dx / 2.0);
    return 4.0 / (g.dx * g.dx) * s * s;
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id),
      key_(mix64(mix64(master_seed) ^ (stream_id * kGolden + 0x632be59bd9b4e019ULL))) {}

void NoiseStream::next_normals(std::span<double> out) {
    SubstreamGen gen(key_ ^ mix64(counter_ + 1));
    ++counter_;
    // Box-Muller, pairs of variates.
    std::size_t i = 0;
    for (; i + 1 < out.size(); i += 2) {
        const double r = std::sqrt(-2.0 * std::log(gen.uniform_open()));
        const double theta = 2.0 * std::numbers::pi * gen.uniform_open();
        out[i] = r * std::cos(theta);
        out[i + 1] = r * std::sin(theta);
    }
    if (i < out.size()) {
        const double r = std::sqrt(-2.0 * std::log(gen.uniform_open()));
        const double theta = 2.0 * std::numbers::pi * gen.uniform_open();
        out[i] = r * std::cos(theta);
    }
}

double NoiseStream::next_uniform() {
    SubstreamGen gen(key_ ^ mix64(kUniformTag + uniform_counter_));
    ++uniform_counter_;
    return gen.uniform_open();
}

Field sample_white_increment(const Grid& g, double dt, NoiseStream& stream) {
    Field out(g);
    sample_white_increment(out, dt, stream);
    return out;
}

void sample_white_increment(Field& out, double dt, NoiseStream& stream) {
    if (dt < 0.0) throw PreconditionError("sample_white_increment: dt must be >= 0");
    stream.next_normals(out.values);
    const double scale = std::sqrt(dt / out.grid.dx);
    for (double& v : out.values) v *= scale;
}

} // namespace spdecouple
