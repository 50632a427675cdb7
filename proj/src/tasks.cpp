#include "neuroevo/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "neuroevo/error.hpp"
#include "neuroevo/image_io.hpp"

namespace neuroevo {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

} // namespace

double classification_accuracy(const Phenotype& p, const std::vector<LabeledImage>& samples) {
    if (samples.empty()) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (const auto& sample : samples) {
        const int predicted = p.forward(sample.image).front() >= 0.5 ? 1 : 0;
        correct += predicted == sample.label;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

FitnessTask xor_task() {
    FitnessTask task;
    task.name = "xor";
    task.input_shape = {1, 2};
    task.output_count = 1;
    task.fitness_target = 15.0;
    auto cases = std::make_shared<const std::vector<LabeledImage>>(std::vector<LabeledImage>{
        {ImageMatrix(2, 1, {0.0, 0.0}), 0},
        {ImageMatrix(2, 1, {0.0, 1.0}), 1},
        {ImageMatrix(2, 1, {1.0, 0.0}), 1},
        {ImageMatrix(2, 1, {1.0, 1.0}), 0},
    });
    task.fitness = [cases](const Phenotype& p) {
        double error = 0.0;
        for (const auto& c : *cases) {
            error += std::abs(p.forward(c.image).front() - c.label);
        }
        const double score = std::max(0.0, 4.0 - error);
        return score * score;
    };
    return task;
}

std::vector<LabeledImage> generate_bars(const BarsOptions& options) {
    if (options.size < 4) {
        throw ConfigError("bars task needs size >= 4");
    }
    if (options.samples_per_class == 0) {
        throw ConfigError("bars task needs at least one sample per class");
    }
    if (options.noise < 0.0 || options.noise > 0.5) {
        throw ConfigError("bars noise must lie in [0, 0.5]");
    }
    Rng rng(options.seed);
    const std::size_t n = options.size;
    std::vector<LabeledImage> samples;
    samples.reserve(2 * options.samples_per_class);
    for (std::size_t i = 0; i < options.samples_per_class; ++i) {
        for (int label = 0; label < 2; ++label) {
            const std::size_t position = rng.index(n);
            std::vector<double> pixels(n * n);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    const bool on_bar = label == 0 ? r == position : c == position;
                    const double jitter = options.noise * rng.uniform();
                    pixels[r * n + c] = on_bar ? 1.0 - jitter : jitter;
                }
            }
            samples.push_back({ImageMatrix(n, n, std::move(pixels)), label});
        }
    }
    return samples;
}

FitnessTask bars_task(const BarsOptions& options) {
    auto samples = std::make_shared<const std::vector<LabeledImage>>(generate_bars(options));
    FitnessTask task;
    task.name = "bars";
    task.input_shape = {options.size, options.size};
    task.output_count = 1;
    task.fitness_target = 0.95;
    task.fitness = [samples](const Phenotype& p) { return classification_accuracy(p, *samples); };

    ConvStageSpec stage;
    stage.kernel_height = 3;
    stage.kernel_width = 3;
    stage.stride = 1;
    stage.activation = ActivationKind::relu;
    stage.pooler = PoolerKind::max;
    stage.pool_window = 2;
    task.conv_layout = {stage};
    return task;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest " + path.string());
    }
    DatasetManifest manifest;
    manifest.base_dir = path.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto comma = text.rfind(',');
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (comma == std::string::npos) {
            throw ParseError(where, "expected `path,label`");
        }
        const auto image = trim(std::string_view(text).substr(0, comma));
        const auto label = trim(std::string_view(text).substr(comma + 1));
        if (image.empty()) {
            throw ParseError(where, "empty image path");
        }
        if (label != "0" && label != "1") {
            throw ParseError(where, "label must be 0 or 1, got '" + label + "'");
        }
        manifest.records.push_back({image, label == "1" ? 1 : 0});
    }
    return manifest;
}

ImageMatrix fit_image(const ImageMatrix& image, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) {
        throw ShapeError("target size must be at least 1x1");
    }
    const std::size_t src_w = image.width();
    const std::size_t src_h = image.height();
    // Largest centred window with the target aspect ratio.
    std::size_t crop_w = src_w;
    std::size_t crop_h = src_h;
    if (src_w * height > src_h * width) {
        crop_w = std::max<std::size_t>(1, src_h * width / height);
    } else {
        crop_h = std::max<std::size_t>(1, src_w * height / width);
    }
    const std::size_t x0 = (src_w - crop_w) / 2;
    const std::size_t y0 = (src_h - crop_h) / 2;

    std::vector<double> pixels(width * height);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            pixels[r * width + c] = image.at(y0 + r * crop_h / height, x0 + c * crop_w / width);
        }
    }
    return ImageMatrix(width, height, std::move(pixels));
}

FitnessTask image_classification_task(const DatasetManifest& manifest, std::size_t input_width,
                                      std::size_t input_height) {
    if (manifest.records.empty()) {
        throw ConfigError("manifest has no records");
    }
    auto samples = std::make_shared<std::vector<LabeledImage>>();
    std::vector<std::string> failures;
    for (const auto& record : manifest.records) {
        const auto full = manifest.base_dir / record.image_path;
        try {
            samples->push_back({fit_image(load_image(full), input_width, input_height), record.label});
        } catch (const Error& e) {
            failures.push_back(e.what());
        }
    }
    if (!failures.empty()) {
        std::string message = "could not load " + std::to_string(failures.size()) + " image(s):";
        for (const auto& f : failures) {
            message += "\n  " + f;
        }
        throw DecodeError(message);
    }

    FitnessTask task;
    task.name = "images";
    task.input_shape = {input_height, input_width};
    task.output_count = 1;
    task.fitness_target = 0.95;
    std::shared_ptr<const std::vector<LabeledImage>> data = std::move(samples);
    task.fitness = [data](const Phenotype& p) { return classification_accuracy(p, *data); };

    ConvStageSpec stage;
    stage.activation = ActivationKind::relu;
    if (input_width >= 6 && input_height >= 6) {
        stage.pooler = PoolerKind::max;
        stage.pool_window = 2;
    }
    if (input_width < 3 || input_height < 3) {
        stage.kernel_height = 1;
        stage.kernel_width = 1;
    }
    task.conv_layout = {stage};
    return task;
}

} // namespace neuroevo
