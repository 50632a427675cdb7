#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuroevo/conv.hpp"
#include "neuroevo/genome.hpp"

namespace neuroevo {

// Grayscale image, intensities in [0, 1].
class ImageMatrix {
public:
    ImageMatrix(std::size_t width, std::size_t height, std::vector<double> pixels);

    std::size_t width() const noexcept { return pixels_.cols; }
    std::size_t height() const noexcept { return pixels_.rows; }
    Shape shape() const noexcept { return pixels_.shape(); }
    double at(std::size_t row, std::size_t col) const { return pixels_.at(row, col); }
    const Matrix& matrix() const noexcept { return pixels_; }

    friend bool operator==(const ImageMatrix&, const ImageMatrix&) = default;

private:
    Matrix pixels_;
};

// Compiled, immutable network. forward() is const and reentrant.
class Phenotype {
public:
    struct Incoming {
        std::size_t source;  // slot index
        double weight;
    };

    struct Neuron {
        NodeId id;
        std::size_t slot;
        ActivationKind activation;
        std::vector<Incoming> incoming;
    };

    std::vector<double> forward(const ImageMatrix& image) const;
    // Runs only the graph part on already-flattened inputs.
    std::vector<double> forward_flat(std::span<const double> inputs) const;
    // Runs only the conv pipeline and flattens row-major.
    std::vector<double> extract_features(const ImageMatrix& image) const;

    Shape input_shape() const noexcept { return input_shape_; }
    std::size_t input_count() const noexcept { return input_count_; }
    std::vector<NodeId> eval_order() const;
    const std::vector<Neuron>& neurons() const noexcept { return neurons_; }

private:
    friend Phenotype compile(const Genome& g, std::size_t input_width, std::size_t input_height);

    Shape input_shape_;
    std::vector<ConvStageGene> stages_;
    std::size_t input_count_ = 0;
    std::size_t slot_count_ = 0;
    // Slots: inputs [0, input_count), bias at input_count, then neurons.
    std::vector<Neuron> neurons_;
    std::vector<std::size_t> output_slots_;
};

Phenotype compile(const Genome& g, std::size_t input_width, std::size_t input_height);
inline Phenotype compile(const Genome& g) {
    return compile(g, g.input_shape.width, g.input_shape.height);
}

} // namespace neuroevo
