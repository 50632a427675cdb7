#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "neuroevo/genome.hpp"
#include "neuroevo/phenotype.hpp"

namespace neuroevo {

// A fitness function must be pure: the same phenotype always scores the same,
// and concurrent calls from several threads are allowed.
struct FitnessTask {
    std::string name;
    Shape input_shape;
    std::size_t output_count = 1;
    std::function<double(const Phenotype&)> fitness;
    std::optional<double> fitness_target;
    // Conv layout used when the run configuration does not override it.
    std::vector<ConvStageSpec> conv_layout;
};

struct LabeledImage {
    ImageMatrix image;
    int label = 0;
};

// Fraction of samples where (first output >= 0.5) equals the label.
double classification_accuracy(const Phenotype& p, const std::vector<LabeledImage>& samples);

// XOR on a 2x1 "image". Fitness (4 - sum |error|)^2 in [0, 16].
FitnessTask xor_task();

struct BarsOptions {
    std::size_t size = 16;
    std::size_t samples_per_class = 40;
    std::uint64_t seed = 1;
    // Background pixels are drawn from [0, noise], bar pixels from [1 - noise, 1].
    double noise = 0.2;
};

// Class 0: one horizontal bright bar, class 1: one vertical bright bar.
std::vector<LabeledImage> generate_bars(const BarsOptions& options);
FitnessTask bars_task(const BarsOptions& options = {});

struct ManifestRecord {
    std::filesystem::path image_path;  // as written in the manifest
    int label = 0;
};

struct DatasetManifest {
    std::filesystem::path base_dir;  // relative image paths resolve against this
    std::vector<ManifestRecord> records;
};

// Plain text, one `path,label` record per line; blank lines and lines
// starting with '#' are skipped.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Center-crop to the target aspect ratio, then nearest-neighbour resample.
ImageMatrix fit_image(const ImageMatrix& image, std::size_t width, std::size_t height);

FitnessTask image_classification_task(const DatasetManifest& manifest, std::size_t input_width,
                                      std::size_t input_height);

} // namespace neuroevo
