#pragma once

// Subsampling operators: valid cross-correlation, non-overlapping pooling and
// the shape algebra that ties them together.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "neuroevo/activation.hpp"

namespace neuroevo {

struct Shape {
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const noexcept { return height * width; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

// Row-major real matrix. Used for kernels and intermediate feature maps.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> v);

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    Shape shape() const noexcept { return {rows, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class PoolerKind { max, average, none };

inline constexpr PoolerKind kAllPoolers[] = {PoolerKind::max, PoolerKind::average, PoolerKind::none};

std::string_view to_string(PoolerKind kind) noexcept;
std::optional<PoolerKind> parse_pooler(std::string_view name) noexcept;

// Output shape of a valid-padding convolution, or nullopt if the kernel does
// not fit inside the input.
std::optional<Shape> convolved_shape(Shape input, Shape kernel, std::size_t stride) noexcept;
std::optional<Shape> pooled_shape(Shape input, std::size_t window) noexcept;

Matrix convolve(const Matrix& input, const Matrix& kernel, std::size_t stride);
Matrix pool(const Matrix& input, PoolerKind kind, std::size_t window);
void activate_inplace(Matrix& map, ActivationKind kind) noexcept;

} // namespace neuroevo
