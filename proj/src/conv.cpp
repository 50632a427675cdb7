#include "neuroevo/conv.hpp"

#include <algorithm>
#include <string>

#include "neuroevo/error.hpp"

namespace neuroevo {

namespace {

std::string dims(Shape s) {
    return std::to_string(s.height) + "x" + std::to_string(s.width);
}

} // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols) {
        throw ShapeError("matrix " + dims({rows, cols}) + " given " + std::to_string(values.size()) + " values");
    }
}

std::string_view to_string(PoolerKind kind) noexcept {
    switch (kind) {
    case PoolerKind::max:
        return "max";
    case PoolerKind::average:
        return "average";
    case PoolerKind::none:
        return "none";
    }
    return "?";
}

std::optional<PoolerKind> parse_pooler(std::string_view name) noexcept {
    for (auto kind : kAllPoolers) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

std::optional<Shape> convolved_shape(Shape input, Shape kernel, std::size_t stride) noexcept {
    if (stride == 0 || kernel.height == 0 || kernel.width == 0 || kernel.height > input.height ||
        kernel.width > input.width) {
        return std::nullopt;
    }
    return Shape{(input.height - kernel.height) / stride + 1, (input.width - kernel.width) / stride + 1};
}

std::optional<Shape> pooled_shape(Shape input, std::size_t window) noexcept {
    if (window == 0 || window > input.height || window > input.width) {
        return std::nullopt;
    }
    return Shape{input.height / window, input.width / window};
}

Matrix convolve(const Matrix& input, const Matrix& kernel, std::size_t stride) {
    const auto out_shape = convolved_shape(input.shape(), kernel.shape(), stride);
    if (!out_shape) {
        throw ShapeError("kernel " + dims(kernel.shape()) + " with stride " + std::to_string(stride) +
                         " does not fit input " + dims(input.shape()));
    }
    Matrix out(out_shape->height, out_shape->width);
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) {
            double acc = 0.0;
            for (std::size_t a = 0; a < kernel.rows; ++a) {
                const double* row = &input.values[(i * stride + a) * input.cols + j * stride];
                const double* krow = &kernel.values[a * kernel.cols];
                for (std::size_t b = 0; b < kernel.cols; ++b) {
                    acc += krow[b] * row[b];
                }
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Matrix pool(const Matrix& input, PoolerKind kind, std::size_t window) {
    if (kind == PoolerKind::none) {
        return input;
    }
    const auto out_shape = pooled_shape(input.shape(), window);
    if (!out_shape) {
        throw ShapeError("pool window " + std::to_string(window) + " exceeds map " + dims(input.shape()));
    }
    Matrix out(out_shape->height, out_shape->width);
    const double count = static_cast<double>(window * window);
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) {
            double acc = kind == PoolerKind::max ? input.at(i * window, j * window) : 0.0;
            for (std::size_t a = 0; a < window; ++a) {
                for (std::size_t b = 0; b < window; ++b) {
                    const double v = input.at(i * window + a, j * window + b);
                    if (kind == PoolerKind::max) {
                        acc = std::max(acc, v);
                    } else {
                        acc += v;
                    }
                }
            }
            out.at(i, j) = kind == PoolerKind::max ? acc : acc / count;
        }
    }
    return out;
}

void activate_inplace(Matrix& map, ActivationKind kind) noexcept {
    for (double& v : map.values) {
        v = activate(v, kind);
    }
}

} // namespace neuroevo
