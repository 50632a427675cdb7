#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "neuroevo/error.hpp"
#include "neuroevo/evolution.hpp"
#include "neuroevo/image_io.hpp"
#include "neuroevo/persistence.hpp"
#include "neuroevo/schema.hpp"
#include "neuroevo/tasks.hpp"

namespace py = pybind11;
using namespace neuroevo;

namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows) {
    if (rows.empty()) {
        throw ShapeError("matrix must have at least one row");
    }
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols) {
            throw ShapeError("matrix rows differ in length");
        }
        for (std::size_t c = 0; c < m.cols; ++c) {
            m.at(r, c) = rows[r][c];
        }
    }
    return m;
}

Rows to_rows(const Matrix& m) {
    Rows rows(m.rows, std::vector<double>(m.cols));
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            rows[r][c] = m.at(r, c);
        }
    }
    return rows;
}

PoolerKind pooler_named(const std::string& name) {
    const auto kind = parse_pooler(name);
    if (!kind) {
        throw UsageError("unknown pooler '" + name + "'");
    }
    return *kind;
}

FitnessTask task_named(const std::string& selector, const EvolutionConfig& config) {
    if (selector == "xor") {
        return xor_task();
    }
    if (selector == "bars") {
        BarsOptions options;
        options.size = config.task.bars_size;
        options.samples_per_class = config.task.bars_samples_per_class;
        options.noise = config.task.bars_noise;
        options.seed = config.task.bars_seed;
        return bars_task(options);
    }
    if (selector.starts_with("images:")) {
        return image_classification_task(load_manifest(selector.substr(7)), config.task.image_width,
                                         config.task.image_height);
    }
    throw UsageError("unknown task '" + selector + "'");
}

py::dict train(const std::string& task_name, const std::string& config_text, std::size_t workers,
               const std::function<void(std::size_t, double)>& on_generation) {
    EvolutionConfig config;
    if (!config_text.empty()) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(config_text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: malformed JSON: ") + e.what());
        }
        config = config_from_json(doc);
    }
    const FitnessTask task = task_named(task_name, config);
    RunOptions options{workers, {}};
    if (on_generation) {
        options.on_generation = [&](const GenerationReport& r) {
            py::gil_scoped_acquire gil;
            on_generation(r.generation, r.best_fitness_ever);
        };
    }
    RunResult result;
    {
        py::gil_scoped_release release;
        result = evolve(task, config, options);
    }
    py::dict out;
    out["champion"] = serialize_genome(result.champion);
    out["history"] = serialize_history(result.history);
    out["target_reached"] = result.target_reached;
    return out;
}

std::vector<double> classify(const std::string& genome_text, const Rows& pixels) {
    const Genome g = parse_genome(genome_text);
    const Matrix m = to_matrix(pixels);
    return compile(g).forward(ImageMatrix(m.cols, m.rows, m.values));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "NEAT neuroevolution engine with evolvable convolution stages";

    static py::exception<Error> error(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
    py::register_exception<StructureError>(m, "StructureError", error.ptr());
    py::register_exception<UsageError>(m, "UsageError", error.ptr());
    py::register_exception<EvaluationError>(m, "EvaluationError", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());
    py::register_exception<DecodeError>(m, "DecodeError", error.ptr());
    static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
    py::register_exception<UnsupportedVersionError>(m, "UnsupportedVersionError", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const ParseError& e) {
            py::object exc = py::handle(parse_error.ptr())(e.what());
            exc.attr("path") = e.path();
            PyErr_SetObject(parse_error.ptr(), exc.ptr());
        }
    });

    m.attr("FORMAT_VERSION") = kFormatVersion;

    m.def("train", &train, py::arg("task") = "xor", py::arg("config") = "", py::arg("workers") = 1,
          py::arg("on_generation") = nullptr,
          "Run evolution. `config` is JSON text; returns champion and history documents as JSON text.");
    m.def("classify", &classify, py::arg("genome"), py::arg("pixels"),
          "Network outputs for a grayscale image given as rows of intensities in [0, 1].");
    m.def("load_image", [](const std::filesystem::path& path) { return to_rows(load_image(path).matrix()); },
          py::arg("path"));
    m.def("convolve",
          [](const Rows& image, const Rows& kernel, std::size_t stride) {
              return to_rows(convolve(to_matrix(image), to_matrix(kernel), stride));
          },
          py::arg("image"), py::arg("kernel"), py::arg("stride") = 1);
    m.def("pool",
          [](const Rows& map, const std::string& kind, std::size_t window) {
              return to_rows(pool(to_matrix(map), pooler_named(kind), window));
          },
          py::arg("map"), py::arg("kind"), py::arg("window"));
    m.def("activate",
          [](double x, const std::string& name) {
              const auto kind = parse_activation(name);
              if (!kind) {
                  throw UsageError("unknown activation '" + name + "'");
              }
              return activate(x, *kind);
          },
          py::arg("x"), py::arg("activation"));
    m.def("distance",
          [](const std::string& a, const std::string& b, double c1, double c2, double c3, std::size_t n_floor) {
              return compatibility_distance(parse_genome(a), parse_genome(b), {c1, c2, c3, n_floor, 0.0});
          },
          py::arg("a"), py::arg("b"), py::arg("c1") = 1.0, py::arg("c2") = 1.0, py::arg("c3") = 0.4,
          py::arg("n_floor") = 20);
    m.def("minimal_genome",
          [](std::size_t width, std::size_t height, std::size_t outputs, std::uint64_t seed) {
              InnovationRegistry registry;
              Rng rng(seed);
              return serialize_genome(new_minimal_genome({height, width}, outputs, {}, registry, rng));
          },
          py::arg("width"), py::arg("height"), py::arg("outputs") = 1, py::arg("seed") = 1);
    m.def("canonical_genome", [](const std::string& text) { return serialize_genome(parse_genome(text)); },
          py::arg("text"), "Parse and re-serialize a genome document.");
    m.def("canonical_history", [](const std::string& text) { return serialize_history(parse_history(text)); },
          py::arg("text"), "Parse and re-serialize a history archive.");
    m.def("default_config", [] { return config_to_json(EvolutionConfig{}).dump(2); });
    m.def("genome_schema", [] { return std::string(genome_schema_text()); });
    m.def("history_schema", [] { return std::string(history_schema_text()); });
}
