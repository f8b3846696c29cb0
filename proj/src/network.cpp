#include "ggame/network.hpp"

#include <cmath>

#include "ggame/errors.hpp"

namespace ggame {

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2 || widths_.front() != 1)
        throw ValidationError("network.widths", "need a scalar input and at least one layer");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        if (widths_[l + 1] == 0) throw ValidationError("network.widths", "layers must be nonempty");
        offsets_.push_back(total);
        total += widths_[l + 1] * (widths_[l] + 1);
    }
    params_.assign(total, 0.0);
}

Mlp Mlp::zeros(std::vector<std::size_t> widths) { return Mlp(std::move(widths)); }

Mlp Mlp::random(std::vector<std::size_t> widths, RngStream& rng) {
    Mlp net(std::move(widths));
    for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
        const std::size_t in = net.widths_[l], out = net.widths_[l + 1];
        const double s = std::sqrt(1.0 / static_cast<double>(in));
        double* p = net.params_.data() + net.offsets_[l];
        for (std::size_t i = 0; i < out * (in + 1); ++i) p[i] = s * (2.0 * rng.uniform() - 1.0);
    }
    return net;
}

std::vector<double> Mlp::forward(double x) const {
    Tape scratch;
    return forward(x, scratch);
}

std::vector<double> Mlp::forward(double x, Tape& tape) const {
    const std::size_t layers = widths_.size() - 1;
    tape.activations.resize(layers + 1);
    tape.activations[0].assign(1, x);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = widths_[l], out = widths_[l + 1];
        const double* W = params_.data() + offsets_[l];
        const double* b = W + out * in;
        const auto& a = tape.activations[l];
        auto& next = tape.activations[l + 1];
        next.resize(out);
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b[o];
            for (std::size_t i = 0; i < in; ++i) acc += W[o * in + i] * a[i];
            next[o] = l + 1 < layers ? std::tanh(acc) : acc;
        }
    }
    return tape.activations.back();
}

void Mlp::backward(const Tape& tape, std::span<const double> d_out, std::span<double> grad) const {
    if (d_out.size() != outputs() || grad.size() != params_.size())
        throw DimensionError("Mlp::backward: size mismatch");
    const std::size_t layers = widths_.size() - 1;
    std::vector<double> delta(d_out.begin(), d_out.end()), prev;
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = widths_[l], out = widths_[l + 1];
        const double* W = params_.data() + offsets_[l];
        double* gW = grad.data() + offsets_[l];
        double* gb = gW + out * in;
        const auto& a = tape.activations[l];
        if (l + 1 < layers) {
            const auto& y = tape.activations[l + 1];
            for (std::size_t o = 0; o < out; ++o) delta[o] *= 1.0 - y[o] * y[o];
        }
        prev.assign(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            gb[o] += delta[o];
            for (std::size_t i = 0; i < in; ++i) {
                gW[o * in + i] += delta[o] * a[i];
                prev[i] += W[o * in + i] * delta[o];
            }
        }
        delta.swap(prev);
    }
}

nlohmann::json Mlp::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const std::size_t in = widths_[l], out = widths_[l + 1];
        const auto first = params_.begin() + static_cast<std::ptrdiff_t>(offsets_[l]);
        layers.push_back({{"shape", {out, in}},
                          {"weight", std::vector<double>(first, first + out * in)},
                          {"bias", std::vector<double>(first + out * in, first + out * (in + 1))}});
    }
    return {{"format", "ggame-mlp"},
            {"version", 1},
            {"activation", "tanh"},
            {"widths", widths_},
            {"layers", layers}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "ggame-mlp" || j.at("version") != 1)
            throw ValidationError("checkpoint.format", "not a version 1 network checkpoint");
        Mlp net(j.at("widths").get<std::vector<std::size_t>>());
        const auto& layers = j.at("layers");
        if (layers.size() + 1 != net.widths_.size())
            throw ValidationError("checkpoint.layers", "layer count does not match widths");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto w = layers[l].at("weight").get<std::vector<double>>();
            const auto b = layers[l].at("bias").get<std::vector<double>>();
            const std::size_t in = net.widths_[l], out = net.widths_[l + 1];
            if (w.size() != out * in || b.size() != out)
                throw ValidationError("checkpoint.layers", "tensor shape does not match widths");
            std::copy(w.begin(), w.end(), net.params_.begin() + static_cast<std::ptrdiff_t>(net.offsets_[l]));
            std::copy(b.begin(), b.end(),
                      net.params_.begin() + static_cast<std::ptrdiff_t>(net.offsets_[l] + out * in));
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("checkpoint", e.what());
    }
}

Adam::Adam(std::size_t size, AdamConfig config) : config_(config), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw DimensionError("Adam::step: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
    }
}

}  // namespace ggame
