#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ggame {

/// Argument outside the mathematical domain of an operation (index off [0,1],
/// control outside A, negative aggregate, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Shapes of inputs do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A scenario or model description violates a stated constraint.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// An integrator produced a non-finite value or left its admissible set.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what + " (t=" + std::to_string(t) + ")"), time_(t) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Damped Picard iteration hit its iteration cap.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(std::size_t iterations, double residual)
        : std::runtime_error("fixed-point iteration did not converge after " +
                             std::to_string(iterations) + " iterations (residual " +
                             std::to_string(residual) + "); retry with smaller damping"),
          iterations_(iterations),
          residual_(residual) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

/// Training loss blew up or became non-finite.
class TrainingDivergence : public std::runtime_error {
public:
    TrainingDivergence(std::size_t iteration, double loss)
        : std::runtime_error("training diverged at iteration " + std::to_string(iteration) +
                             " (loss " + std::to_string(loss) + "); use a smaller learning rate"),
          iteration_(iteration),
          loss_(loss) {}

    std::size_t iteration() const noexcept { return iteration_; }
    double loss() const noexcept { return loss_; }

private:
    std::size_t iteration_;
    double loss_;
};

/// A simulated jump rate exceeded the declared majorant q_max.
class ModelBoundViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ggame
