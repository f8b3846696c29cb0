#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ggame/errors.hpp"

namespace ggame {

/// Uniform grid t_k = k * dt on [0, T].
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t n_steps);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return n_steps_; }
    std::size_t points() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return dt_; }

    /// Grid point k; t(steps()) is exactly the horizon.
    double t(std::size_t k) const noexcept {
        return k == n_steps_ ? horizon_ : static_cast<double>(k) * dt_;
    }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_;
    std::size_t n_steps_;
    double dt_;
};

using State = std::vector<double>;
using VectorField = std::function<State(double, std::span<const double>)>;

namespace detail {
inline void require_finite(std::span<const double> v, double t) {
    for (double x : v) {
        if (!std::isfinite(x)) throw IntegrationError("non-finite derivative", t);
    }
}
}  // namespace detail

/// Classical 4th-order Runge-Kutta step. `dt` may be negative (backward sweep).
template <class Field>
State rk4_step(Field&& field, double t, std::span<const double> y, double dt) {
    const std::size_t n = y.size();
    State stage(n);

    State k1 = field(t, y);
    detail::require_finite(k1, t);
    for (std::size_t i = 0; i < n; ++i) stage[i] = y[i] + 0.5 * dt * k1[i];

    State k2 = field(t + 0.5 * dt, stage);
    detail::require_finite(k2, t + 0.5 * dt);
    for (std::size_t i = 0; i < n; ++i) stage[i] = y[i] + 0.5 * dt * k2[i];

    State k3 = field(t + 0.5 * dt, stage);
    detail::require_finite(k3, t + 0.5 * dt);
    for (std::size_t i = 0; i < n; ++i) stage[i] = y[i] + dt * k3[i];

    State k4 = field(t + dt, stage);
    detail::require_finite(k4, t + dt);

    State next(n);
    for (std::size_t i = 0; i < n; ++i)
        next[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return next;
}

/// Explicit Euler step y + dt * field(t, y).
template <class Field>
State euler_step(Field&& field, double t, std::span<const double> y, double dt) {
    State k1 = field(t, y);
    detail::require_finite(k1, t);
    State next(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) next[i] = y[i] + dt * k1[i];
    return next;
}

/// Midpoint rule for a function on [0,1]^2 with an M x M grid.
double midpoint_quadrature_2d(const std::function<double(double, double)>& f, std::size_t m);

/// Cubic (4-point Lagrange) value at the midpoint of interval [k, k+1] of a
/// uniformly sampled sequence of `count` values read through `at(i)`. Uses
/// one-sided stencils at the ends and linear interpolation below 4 samples.
template <class At>
double midpoint_cubic(At&& at, std::size_t count, std::size_t k) {
    if (count < 2 || k + 1 >= count) throw DimensionError("midpoint_cubic: interval out of range");
    if (count < 4) return 0.5 * (at(k) + at(k + 1));
    if (k == 0) return (5.0 * at(0) + 15.0 * at(1) - 5.0 * at(2) + at(3)) / 16.0;
    if (k + 2 >= count)
        return (at(k - 2) - 5.0 * at(k - 1) + 15.0 * at(k) + 5.0 * at(k + 1)) / 16.0;
    return (-at(k - 1) + 9.0 * at(k) + 9.0 * at(k + 1) - at(k + 2)) / 16.0;
}

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Reproducible, splittable random stream: the draw sequence is a pure function
/// of (seed, stream id). Different stream ids never share a counter block.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() { return next_u64(); }
    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform double in (0, 1].
    double uniform_open_left() { return 1.0 - uniform(); }
    /// Exponential variate with the given rate (> 0).
    double exponential(double rate);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    std::size_t pos_ = 2;
};

}  // namespace ggame
