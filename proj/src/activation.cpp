#include "neuroevo/activation.hpp"

#include <algorithm>
#include <cmath>

namespace neuroevo {

double activate(double x, ActivationKind kind) noexcept {
    switch (kind) {
    case ActivationKind::sigmoid_steepened:
        return 1.0 / (1.0 + std::exp(-4.9 * x));
    case ActivationKind::sigmoid:
        return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::relu:
        return std::max(0.0, x);
    case ActivationKind::tanh:
        return std::tanh(x);
    case ActivationKind::linear:
        return x;
    }
    return x;
}

std::string_view to_string(ActivationKind kind) noexcept {
    switch (kind) {
    case ActivationKind::sigmoid_steepened:
        return "sigmoid_steepened";
    case ActivationKind::sigmoid:
        return "sigmoid";
    case ActivationKind::relu:
        return "relu";
    case ActivationKind::tanh:
        return "tanh";
    case ActivationKind::linear:
        return "linear";
    }
    return "?";
}

std::optional<ActivationKind> parse_activation(std::string_view name) noexcept {
    for (auto kind : kAllActivations) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

} // namespace neuroevo
