#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spdecouple {

/// Uniform grid on [0,1] with homogeneous Dirichlet boundary.
///
/// Only interior nodes x_i = i*dx, i = 1..n_interior, carry unknowns; the two
/// boundary values are identically zero.
struct Grid {
    std::size_t n_interior = 0;
    double dx = 0.0;

    friend bool operator==(const Grid&, const Grid&) = default;
};

Grid make_grid(std::size_t n_interior);

/// Interior node values of an element of L^2(0,1).
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g) : grid(g), values(g.n_interior, 0.0) {}
    Field(const Grid& g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<double> span() { return values; }
    std::span<const double> span() const { return values; }

    // Node coordinate of interior entry i.
    double node(std::size_t i) const { return static_cast<double>(i + 1) * grid.dx; }

    bool all_finite() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);

    friend bool operator==(const Field&, const Field&) = default;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

template <typename F>
Field sample_function(const Grid& g, F&& fn) {
    Field u(g);
    for (std::size_t i = 0; i < g.n_interior; ++i) u[i] = fn(u.node(i));
    return u;
}

enum class NormKind { L2, L4, H10 };

/// Discrete L^2 inner product dx * sum(u_i v_i).
double inner(const Field& u, const Field& v);

/// Discrete norms:
///   L2:  (dx * sum u_i^2)^(1/2)
///   L4:  (dx * sum u_i^4)^(1/4)
///   H10: (sum (u_{i+1} - u_i)^2 / dx)^(1/2), with u_0 = u_{n+1} = 0
double norm(const Field& u, NormKind kind);

/// Smallest eigenvalue (4/dx^2) sin^2(pi dx / 2) of the 3-point Dirichlet Laplacian.
double discrete_first_eigenvalue(const Grid& g);

/// Counter-based Gaussian stream.
///
/// The k-th call to next_normals() depends only on (master_seed, stream_id, k),
/// so a trajectory's noise never depends on which worker runs it.
class NoiseStream {
public:
    NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    /// Fills `out` with i.i.d. N(0,1) variates from the next substream.
    void next_normals(std::span<double> out);

    /// Uniform on (0,1) from a substream family disjoint from next_normals().
    double next_uniform();

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::uint64_t uniform_counter_ = 0;
};

/// Discrete cylindrical Wiener increment over a step dt: i.i.d. N(0, dt/dx) entries.
Field sample_white_increment(const Grid& g, double dt, NoiseStream& stream);

/// In-place variant used by the steppers to avoid reallocation.
void sample_white_increment(Field& out, double dt, NoiseStream& stream);

} // namespace spdecouple
