#include "ggame/graphon.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "ggame/errors.hpp"
#include "ggame/numerics.hpp"

namespace ggame {

namespace {

constexpr double kMassTolerance = 1e-12;

void check_unit_entries(const SquareMatrix& m, const char* what) {
    for (std::size_t i = 0; i < m.size; ++i) {
        for (std::size_t j = 0; j < m.size; ++j) {
            const double v = m(i, j);
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError(what, "entries must lie in [0,1]");
            if (m(i, j) != m(j, i)) throw ValidationError(what, "matrix must be symmetric");
        }
    }
}

void check_index(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("graphon index " + std::to_string(x) + " outside [0,1]");
}

std::size_t block_index(const std::vector<double>& masses, double x) {
    double cumulative = 0.0;
    for (std::size_t i = 0; i + 1 < masses.size(); ++i) {
        cumulative += masses[i];
        if (x < cumulative) return i;
    }
    return masses.size() - 1;
}

}  // namespace

SquareMatrix SquareMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    SquareMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size())
            throw DimensionError("matrix row " + std::to_string(i) + " has wrong length");
        for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<std::vector<double>> SquareMatrix::rows() const {
    std::vector<std::vector<double>> out(size, std::vector<double>(size));
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) out[i][j] = (*this)(i, j);
    return out;
}

Graphon Graphon::block(SquareMatrix weights, std::vector<double> masses) {
    if (weights.size == 0) throw ValidationError("graphon.weights", "need at least one block");
    if (masses.size() != weights.size)
        throw ValidationError("graphon.masses", "one mass per block required");
    check_unit_entries(weights, "graphon.weights");
    double total = 0.0;
    for (double m : masses) {
        if (!(m >= 0.0)) throw ValidationError("graphon.masses", "masses must be nonnegative");
        total += m;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
        throw ValidationError("graphon.masses", "masses sum ≠ 1 (got " + std::to_string(total) + ")");
    return Graphon(BlockKernel{std::move(weights), std::move(masses)});
}

Graphon Graphon::power_law(double g) {
    if (!(g <= 0.0) || !std::isfinite(g))
        throw ValidationError("graphon.g", "power-law exponent must be finite and <= 0");
    return Graphon(PowerLawKernel{g});
}

Graphon Graphon::constant(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("graphon.p", "must lie in [0,1]");
    return Graphon(ConstantKernel{p});
}

Graphon Graphon::tabulated(SquareMatrix grid) {
    if (grid.size < 2) throw ValidationError("graphon.grid", "need at least 2 grid points");
    check_unit_entries(grid, "graphon.grid");
    return Graphon(TabulatedKernel{std::move(grid)});
}

double Graphon::eval(double x, double y) const {
    check_index(x);
    check_index(y);
    struct Visitor {
        double x, y;
        double operator()(const BlockKernel& b) const {
            return b.weights(block_index(b.masses, x), block_index(b.masses, y));
        }
        double operator()(const PowerLawKernel& k) const {
            // x^(-g) -> 0 as x -> 0 for g < 0; g == 0 gives the constant kernel 1
            return std::clamp(std::pow(x * y, -k.g), 0.0, 1.0);
        }
        double operator()(const ConstantKernel& k) const { return k.p; }
        double operator()(const TabulatedKernel& k) const {
            const std::size_t m = k.grid.size;
            const double scale = static_cast<double>(m - 1);
            const double sx = x * scale, sy = y * scale;
            const std::size_t i = std::min(static_cast<std::size_t>(sx), m - 2);
            const std::size_t j = std::min(static_cast<std::size_t>(sy), m - 2);
            const double fx = sx - static_cast<double>(i), fy = sy - static_cast<double>(j);
            const double v = (1 - fx) * (1 - fy) * k.grid(i, j) + fx * (1 - fy) * k.grid(i + 1, j) +
                             (1 - fx) * fy * k.grid(i, j + 1) + fx * fy * k.grid(i + 1, j + 1);
            return std::clamp(v, 0.0, 1.0);
        }
    };
    return std::visit(Visitor{x, y}, kernel_);
}

std::size_t Graphon::block_of(double x) const {
    check_index(x);
    const auto* b = as_block();
    if (b == nullptr) throw DomainError("block_of requires a block graphon");
    return block_index(b->masses, x);
}

double Graphon::sup() const {
    struct Visitor {
        double operator()(const BlockKernel& b) const {
            return *std::max_element(b.weights.data.begin(), b.weights.data.end());
        }
        double operator()(const PowerLawKernel&) const { return 1.0; }
        double operator()(const ConstantKernel& k) const { return k.p; }
        double operator()(const TabulatedKernel& k) const {
            return *std::max_element(k.grid.data.begin(), k.grid.data.end());
        }
    };
    return std::visit(Visitor{}, kernel_);
}

double Graphon::l2_norm(std::size_t quadrature_points) const {
    if (const auto* b = as_block()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < b->masses.size(); ++i)
            for (std::size_t j = 0; j < b->masses.size(); ++j) {
                const double w = b->weights(i, j);
                sum += w * w * b->masses[i] * b->masses[j];
            }
        return std::sqrt(sum);
    }
    if (const auto* c = std::get_if<ConstantKernel>(&kernel_)) return c->p;
    const double squared = midpoint_quadrature_2d(
        [this](double x, double y) {
            const double w = eval(x, y);
            return w * w;
        },
        quadrature_points);
    return std::sqrt(squared);
}

std::vector<double> aggregate_block(const SquareMatrix& weights, std::span<const double> masses,
                                    std::span<const double> values) {
    const std::size_t k = weights.size;
    if (masses.size() != k || values.size() != k)
        throw DimensionError("aggregate_block: weights, masses and values must agree");
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += weights(i, j) * values[j] * masses[j];
        out[i] = acc;
    }
    return out;
}

double aggregate_sampled(const Graphon& w, std::span<const double> indices,
                         std::span<const double> values, double query) {
    if (indices.empty()) throw DimensionError("aggregate_sampled: empty sample");
    if (indices.size() != values.size())
        throw DimensionError("aggregate_sampled: indices and values differ in length");
    double acc = 0.0;
    for (std::size_t j = 0; j < indices.size(); ++j) acc += w.eval(query, indices[j]) * values[j];
    return acc / static_cast<double>(indices.size());
}

std::vector<double> aggregate_sampled_all(const Graphon& w, std::span<const double> indices,
                                          std::span<const double> values) {
    const std::size_t n = indices.size();
    if (n == 0) throw DimensionError("aggregate_sampled_all: empty sample");
    if (values.size() != n)
        throw DimensionError("aggregate_sampled_all: indices and values differ in length");
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> out(n, 0.0);

    struct Visitor {
        std::span<const double> x, v;
        std::vector<double>& out;
        double inv_n;
        const Graphon& w;

        void operator()(const BlockKernel& b) const {
            const std::size_t k = b.masses.size();
            std::vector<double> bucket(k, 0.0);
            std::vector<std::size_t> owner(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) {
                owner[j] = w.block_of(x[j]);
                bucket[owner[j]] += v[j];
            }
            std::vector<double> per_block(k, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < k; ++j) acc += b.weights(i, j) * bucket[j];
                per_block[i] = acc * inv_n;
            }
            for (std::size_t j = 0; j < x.size(); ++j) out[j] = per_block[owner[j]];
        }
        void operator()(const PowerLawKernel& k) const {
            double acc = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) acc += std::pow(x[j], -k.g) * v[j];
            for (std::size_t j = 0; j < x.size(); ++j) out[j] = std::pow(x[j], -k.g) * acc * inv_n;
        }
        void operator()(const ConstantKernel& k) const {
            double acc = 0.0;
            for (double vj : v) acc += vj;
            std::fill(out.begin(), out.end(), k.p * acc * inv_n);
        }
        void operator()(const TabulatedKernel&) const {
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = aggregate_sampled(w, x, v, x[i]);
        }
    };
    for (double xi : indices) check_index(xi);
    std::visit(Visitor{indices, values, out, inv_n, w}, w.kernel());
    return out;
}

double existence_margin(const Graphon& w, double lip_impact, double lip_control) {
    if (!(lip_impact >= 0.0) || !(lip_control >= 0.0))
        throw DomainError("Lipschitz constants must be nonnegative");
    const double margin = w.l2_norm() * lip_impact * lip_control;
    if (margin >= 1.0) {
        std::clog << "warning: existence margin " << margin
                  << " >= 1; equilibrium existence is not guaranteed, solving anyway\n";
    }
    return margin;
}

}  // namespace ggame
