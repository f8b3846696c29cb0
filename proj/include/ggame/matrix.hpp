#pragma once

#include <cstddef>
#include <vector>

namespace ggame {

/// Dense row-major K x K matrix used for block weights and tabulated kernels.
struct SquareMatrix {
    std::size_t size = 0;
    std::vector<double> data;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t k, double fill = 0.0) : size(k), data(k * k, fill) {}
    static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows);

    double operator()(std::size_t i, std::size_t j) const { return data[i * size + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * size + j]; }
    std::vector<std::vector<double>> rows() const;

    bool operator==(const SquareMatrix&) const = default;
};

}  // namespace ggame
