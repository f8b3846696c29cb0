#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "ggame/matrix.hpp"

namespace ggame {

/// Piecewise-constant kernel: w(x,y) = weights[block(x)][block(y)], blocks laid
/// out left to right on [0,1] with the given masses.
struct BlockKernel {
    SquareMatrix weights;
    std::vector<double> masses;
    bool operator==(const BlockKernel&) const = default;
};

/// w(x,y) = (x y)^(-g), g <= 0.
struct PowerLawKernel {
    double g = 0.0;
    bool operator==(const PowerLawKernel&) const = default;
};

struct ConstantKernel {
    double p = 0.0;
    bool operator==(const ConstantKernel&) const = default;
};

/// Kernel sampled at M equispaced grid points i/(M-1), bilinear in between.
struct TabulatedKernel {
    SquareMatrix grid;
    bool operator==(const TabulatedKernel&) const = default;
};

/// Symmetric measurable interaction kernel w : [0,1]^2 -> [0,1].
class Graphon {
public:
    using Kernel = std::variant<BlockKernel, PowerLawKernel, ConstantKernel, TabulatedKernel>;

    static Graphon block(SquareMatrix weights, std::vector<double> masses);
    static Graphon power_law(double g);
    static Graphon constant(double p);
    static Graphon tabulated(SquareMatrix grid);

    const Kernel& kernel() const noexcept { return kernel_; }
    const BlockKernel* as_block() const noexcept { return std::get_if<BlockKernel>(&kernel_); }
    bool is_block() const noexcept { return as_block() != nullptr; }
    const PowerLawKernel* as_power_law() const noexcept { return std::get_if<PowerLawKernel>(&kernel_); }

    double eval(double x, double y) const;

    /// Block containing x under half-open cumulative-mass intervals (last closed).
    std::size_t block_of(double x) const;

    /// Upper bound of w over [0,1]^2.
    double sup() const;

    /// ||w||_{L^2([0,1]^2)}; exact for block and constant kernels, midpoint
    /// quadrature with `quadrature_points`^2 nodes otherwise.
    double l2_norm(std::size_t quadrature_points = 512) const;

    bool operator==(const Graphon&) const = default;

private:
    explicit Graphon(Kernel k) : kernel_(std::move(k)) {}
    Kernel kernel_;
};

/// out_i = sum_k weights[i][k] * values[k] * masses[k].
std::vector<double> aggregate_block(const SquareMatrix& weights, std::span<const double> masses,
                                    std::span<const double> values);

/// (1/N) sum_j w(query, indices[j]) * values[j], summed in index order.
double aggregate_sampled(const Graphon& w, std::span<const double> indices,
                         std::span<const double> values, double query);

/// aggregate_sampled evaluated at every sample index. Uses the kernel's
/// structure (block buckets, rank-one power law) so the cost is O(N) except
/// for tabulated kernels. Since w is symmetric this map is self-adjoint.
std::vector<double> aggregate_sampled_all(const Graphon& w, std::span<const double> indices,
                                          std::span<const double> values);

/// Contraction constant ||w|| L_K L_a of the aggregate map. A value >= 1 means
/// existence of an equilibrium is not guaranteed by the contraction argument.
double existence_margin(const Graphon& w, double lip_impact, double lip_control);

}  // namespace ggame
