#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

#include "ggame/numerics.hpp"

namespace ggame {

/// Fully connected network R -> R^n with tanh hidden layers and a linear
/// output layer. All weights and biases live in one flat vector, layer by
/// layer, weights row-major (out x in) followed by the biases.
class Mlp {
public:
    /// Activations of one forward pass, kept for the backward pass.
    struct Tape {
        std::vector<std::vector<double>> activations;
    };

    Mlp() = default;
    /// Uniform initialization in [-s, s] with s = sqrt(1/fan_in).
    static Mlp random(std::vector<std::size_t> widths, RngStream& rng);
    static Mlp zeros(std::vector<std::size_t> widths);

    const std::vector<std::size_t>& widths() const noexcept { return widths_; }
    std::size_t outputs() const noexcept { return widths_.empty() ? 0 : widths_.back(); }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    std::vector<double> forward(double x) const;
    std::vector<double> forward(double x, Tape& tape) const;

    /// Adds d(output . d_out)/d(theta) to grad.
    void backward(const Tape& tape, std::span<const double> d_out, std::span<double> grad) const;

    nlohmann::json to_json() const;
    /// Throws ValidationError on a malformed checkpoint.
    static Mlp from_json(const nlohmann::json& j);

    bool operator==(const Mlp&) const = default;

private:
    explicit Mlp(std::vector<std::size_t> widths);

    std::vector<std::size_t> widths_;
    std::vector<std::size_t> offsets_;  // start of each layer's weights
    std::vector<double> params_;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(std::size_t size, AdamConfig config = {});
    void step(std::span<double> params, std::span<const double> grad, double lr);
    std::size_t steps() const noexcept { return t_; }

private:
    AdamConfig config_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace ggame
