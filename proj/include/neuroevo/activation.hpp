#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace neuroevo {

enum class ActivationKind { sigmoid_steepened, sigmoid, relu, tanh, linear };

inline constexpr std::array kAllActivations{
    ActivationKind::sigmoid_steepened, ActivationKind::sigmoid, ActivationKind::relu,
    ActivationKind::tanh, ActivationKind::linear};

double activate(double x, ActivationKind kind) noexcept;

std::string_view to_string(ActivationKind kind) noexcept;
std::optional<ActivationKind> parse_activation(std::string_view name) noexcept;

} // namespace neuroevo
