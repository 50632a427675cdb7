#include "neuroevo/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/logger.h>
#include <spdlog/sinks/ostream_sink.h>

#include "neuroevo/error.hpp"
#include "neuroevo/evolution.hpp"
#include "neuroevo/image_io.hpp"
#include "neuroevo/persistence.hpp"
#include "neuroevo/phenotype.hpp"
#include "neuroevo/tasks.hpp"

namespace neuroevo::cli {

namespace {

namespace fs = std::filesystem;

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("neuroevo", sink);
    logger->set_pattern("[%l] %v");
    const char* env = std::getenv("NEUROEVO_LOG");
    const std::string level = env ? env : "info";
    if (level == "quiet") {
        logger->set_level(spdlog::level::off);
    } else if (level == "debug") {
        logger->set_level(spdlog::level::debug);
    } else {
        logger->set_level(spdlog::level::info);
        if (level != "info") {
            logger->warn("NEUROEVO_LOG={} not recognised, using info", level);
        }
    }
    return logger;
}

std::string dims(Shape s) {
    return fmt::format("{}x{}", s.width, s.height);
}

struct TrainArgs {
    std::optional<std::string> config_path;
    std::string task = "xor";
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
};

FitnessTask select_task(const std::string& selector, const EvolutionConfig& config) {
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
    constexpr std::string_view prefix = "images:";
    if (selector.starts_with(prefix)) {
        const fs::path manifest_path = selector.substr(prefix.size());
        if (!fs::exists(manifest_path)) {
            throw UsageError("manifest not found: " + manifest_path.string());
        }
        const auto manifest = load_manifest(manifest_path);
        return image_classification_task(manifest, config.task.image_width, config.task.image_height);
    }
    throw UsageError("unknown task '" + selector + "' (expected xor, bars or images:<manifest>)");
}

int cmd_train(const TrainArgs& args, std::ostream& out, spdlog::logger& log) {
    EvolutionConfig config;
    FitnessTask task;
    try {
        if (args.config_path) {
            config = load_config(*args.config_path);
        }
        if (args.seed) {
            config.seed = *args.seed;
        }
        config.validate();
        task = select_task(args.task, config);
    } catch (const Error& e) {
        log.error("{}", e.what());
        return kExitUsage;
    }

    const fs::path out_dir = args.out_dir;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        log.error("cannot create output directory {}: {}", out_dir.string(), ec.message());
        return kExitUsage;
    }

    log.info("task={} inputs={} population={} seed={}", task.name, dims(task.input_shape), config.population_size,
             config.seed);
    RunOptions options;
    options.workers = args.workers;
    options.on_generation = [&](const GenerationReport& r) {
        out << fmt::format("generation={} species={} best={} mean={} best_ever={}\n", r.generation,
                           r.species.size(), r.fitness.max, r.fitness.mean, r.best_fitness_ever)
            << std::flush;
    };

    RunResult result;
    try {
        result = evolve(task, config, options);
    } catch (const EvaluationError& e) {
        log.error("{}", e.what());
        return kExitEvaluation;
    } catch (const Error& e) {
        log.error("{}", e.what());
        return kExitUsage;
    }

    try {
        save_genome(result.champion, out_dir / "champion.json");
        export_history(result.history, out_dir / "history.json");
    } catch (const Error& e) {
        log.error("{}", e.what());
        return kExitUsage;
    }
    log.info("wrote {} and {}", (out_dir / "champion.json").string(), (out_dir / "history.json").string());

    if (!result.target_reached) {
        log.info("fitness target not reached after {} generations", config.max_generations);
        return kExitTargetMissed;
    }
    log.info("fitness target reached in generation {}", result.history.generations.back().generation);
    return kExitOk;
}

int cmd_classify(const std::string& genome_path, const std::string& image_path, std::ostream& out,
                 spdlog::logger& log) {
    Genome genome;
    ImageMatrix image(1, 1, {0.0});
    try {
        genome = load_genome(genome_path);
        image = load_image(image_path);
    } catch (const Error& e) {
        log.error("{}", e.what());
        return kExitUsage;
    }
    if (image.shape() != genome.input_shape) {
        log.error("image {} is {} but the genome expects {}", image_path, dims(image.shape()),
                  dims(genome.input_shape));
        return kExitUsage;
    }
    try {
        const auto outputs = compile(genome).forward(image);
        // Outputs of non-sigmoid activations are clamped so the result stays
        // a probability.
        const double p = std::clamp(outputs.at(0), 0.0, 1.0);
        out << fmt::format("probability={}\n", p);
        out << "note: advisory estimate only, it cannot replace assessment by a qualified clinician\n";
    } catch (const Error& e) {
        log.error("{}", e.what());
        return kExitEvaluation;
    }
    return kExitOk;
}

int cmd_export(const std::string& history_path, const std::string& out_path, spdlog::logger& log) {
    try {
        const auto archive = import_history(history_path);
        export_history(archive, out_path);
        log.info("exported {} generations to {}", archive.generations.size(), out_path);
    } catch (const Error& e) {
        log.error("{}", e.what());
        return kExitUsage;
    }
    return kExitOk;
}

int cmd_inspect(const std::string& genome_path, std::ostream& out, spdlog::logger& log) {
    Genome g;
    try {
        g = load_genome(genome_path);
    } catch (const Error& e) {
        log.error("{}", e.what());
        return kExitUsage;
    }
    const auto hidden = std::count_if(g.nodes.begin(), g.nodes.end(),
                                      [](const NodeGene& n) { return n.kind == NodeKind::hidden; });
    const auto enabled = std::count_if(g.connections.begin(), g.connections.end(),
                                       [](const ConnectionGene& c) { return c.enabled; });
    out << fmt::format("image={} conv_stages={} inputs={} hidden={} outputs={} connections={} enabled={}",
                       dims(g.input_shape), g.conv_stages.size(), g.input_count(), hidden, g.output_count(),
                       g.connections.size(), enabled);
    if (g.fitness) {
        out << fmt::format(" fitness={}", *g.fitness);
    }
    out << '\n';
    for (const auto& s : g.conv_stages) {
        out << fmt::format("stage={} kernel={}x{} stride={} pooler={} window={} activation={}\n", s.stage_index,
                           s.kernel.cols, s.kernel.rows, s.stride, to_string(s.pooler), s.pool_window,
                           to_string(s.activation));
    }
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    auto log = make_logger(err);

    CLI::App app{"NEAT neuroevolution with evolvable convolution stages", "neuroevo"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Evolve a network and write champion.json and history.json");
    train_cmd->add_option("--config", train.config_path, "JSON config file");
    train_cmd->add_option("--task", train.task, "xor, bars or images:<manifest>")->capture_default_str();
    train_cmd->add_option("--out", train.out_dir, "Output directory")->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "Override the config seed");
    train_cmd->add_option("--workers", train.workers, "Parallel evaluation threads (0 = all cores)");

    std::string genome_path;
    std::string image_path;
    auto* classify_cmd = app.add_subcommand("classify", "Score one image with a saved genome");
    classify_cmd->add_option("genome", genome_path, "Genome document")->required();
    classify_cmd->add_option("image", image_path, "PNG or BMP image")->required();

    std::string history_path;
    std::string export_path;
    auto* export_cmd = app.add_subcommand("export", "Validate a history archive and write it for the visualizer");
    export_cmd->add_option("history", history_path, "History archive")->required();
    export_cmd->add_option("out", export_path, "Output file")->required();

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarise a genome document");
    inspect_cmd->add_option("genome", inspect_path, "Genome document")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*train_cmd) {
        return cmd_train(train, out, *log);
    }
    if (*classify_cmd) {
        return cmd_classify(genome_path, image_path, out, *log);
    }
    if (*export_cmd) {
        return cmd_export(history_path, export_path, *log);
    }
    return cmd_inspect(inspect_path, out, *log);
}

} // namespace neuroevo::cli
