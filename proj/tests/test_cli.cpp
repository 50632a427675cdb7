#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "neuroevo/cli.hpp"
#include "neuroevo/image_io.hpp"
#include "neuroevo/persistence.hpp"
#include "support/generators.hpp"

using namespace neuroevo;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    // Error messages go through the logger, so keep it at info level.
    ::setenv("NEUROEVO_LOG", "info", 1);
    args.insert(args.begin(), "neuroevo");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

const char* kTinyConfig = R"({
  "population_size": 20,
  "max_generations": 2,
  "fitness_target": 1000.0,
  "seed": 9
})";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("train writes champion and history and reports a missed target") {
    gen::TempDir dir("cli-train");
    write_text(dir / "c.json", kTinyConfig);
    const auto r = invoke({"train", "--config", (dir / "c.json").string(), "--task", "xor", "--out",
                           (dir / "run").string(), "--workers", "1"});
    CHECK(r.code == cli::kExitTargetMissed);
    CHECK(r.out.find("generation=0 species=") != std::string::npos);
    CHECK(r.out.find("generation=2 species=") != std::string::npos);
    const auto history = import_history(dir / "run" / "history.json");
    CHECK(history.generations.size() == 3);
    CHECK(history.config.population_size == 20);
    const Genome champion = load_genome(dir / "run" / "champion.json");
    CHECK(champion.fitness.has_value());
    CHECK(*champion.fitness == history.generations.back().best_fitness_ever);
}

TEST_CASE("same seed gives byte-identical outputs") {
    gen::TempDir dir("cli-determinism");
    write_text(dir / "c.json", kTinyConfig);
    const std::string config = (dir / "c.json").string();
    const auto a = invoke({"train", "--config", config, "--out", (dir / "a").string(), "--seed", "17", "--workers", "1"});
    const auto b = invoke({"train", "--config", config, "--out", (dir / "b").string(), "--seed", "17", "--workers", "2"});
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
    CHECK(slurp(dir / "a" / "history.json") == slurp(dir / "b" / "history.json"));
    CHECK(slurp(dir / "a" / "champion.json") == slurp(dir / "b" / "champion.json"));

    const auto c = invoke({"train", "--config", config, "--out", (dir / "c").string(), "--seed", "18", "--workers", "1"});
    CHECK(slurp(dir / "a" / "history.json") != slurp(dir / "c" / "history.json"));
}

TEST_CASE("usage errors exit with code 2") {
    gen::TempDir dir("cli-usage");
    const auto missing = invoke({"train", "--task", "images:" + (dir / "missing.csv").string(), "--out",
                                 (dir / "o").string()});
    CHECK(missing.code == cli::kExitUsage);
    CHECK(missing.err.find("missing.csv") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir / "o" / "history.json"));

    write_text(dir / "bad.json", R"({"mutation": {"add_node_rat": 0.1}})");
    const auto bad = invoke({"train", "--config", (dir / "bad.json").string(), "--out", (dir / "o").string()});
    CHECK(bad.code == cli::kExitUsage);
    CHECK(bad.err.find("config.mutation.add_node_rat") != std::string::npos);

    CHECK(invoke({"train", "--task", "mnist", "--out", (dir / "o").string()}).code == cli::kExitUsage);
    CHECK(invoke({}).code == cli::kExitUsage);
    CHECK(invoke({"fly"}).code == cli::kExitUsage);
    CHECK(invoke({"classify", "only-one-arg.json"}).code == cli::kExitUsage);
    CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("classify prints a probability and the advisory note") {
    gen::TempDir dir("cli-classify");
    InnovationRegistry reg;
    Rng rng(4);
    Genome g = new_minimal_genome({2, 3}, 1, {}, reg, rng);
    for (auto& c : g.connections) {
        c.weight = 0.0;
    }
    save_genome(g, dir / "g.json");
    const std::vector<std::uint8_t> pixels{0, 50, 100, 150, 200, 250};
    write_png(dir / "ok.png", 3, 2, 1, pixels);

    const auto first = invoke({"classify", (dir / "g.json").string(), (dir / "ok.png").string()});
    CHECK(first.code == cli::kExitOk);
    CHECK(first.out.rfind("probability=0.5\n", 0) == 0);
    CHECK(first.out.find("qualified clinician") != std::string::npos);
    CHECK(invoke({"classify", (dir / "g.json").string(), (dir / "ok.png").string()}).out == first.out);

    write_png(dir / "wide.png", 4, 2, 1, std::vector<std::uint8_t>(8, 7));
    const auto wrong = invoke({"classify", (dir / "g.json").string(), (dir / "wide.png").string()});
    CHECK(wrong.code == cli::kExitUsage);
    CHECK(wrong.err.find("4x2") != std::string::npos);
    CHECK(wrong.err.find("3x2") != std::string::npos);
    CHECK(wrong.out.empty());

    const auto absent = invoke({"classify", (dir / "none.json").string(), (dir / "ok.png").string()});
    CHECK(absent.code == cli::kExitUsage);
}

TEST_CASE("export validates and rewrites archives") {
    gen::TempDir dir("cli-export");
    write_text(dir / "c.json", kTinyConfig);
    invoke({"train", "--config", (dir / "c.json").string(), "--out", (dir / "run").string(), "--workers", "1"});
    const auto source = dir / "run" / "history.json";

    const auto ok = invoke({"export", source.string(), (dir / "e1.json").string()});
    CHECK(ok.code == cli::kExitOk);
    CHECK(slurp(dir / "e1.json") == slurp(source));
    CHECK(invoke({"export", (dir / "e1.json").string(), (dir / "e2.json").string()}).code == cli::kExitOk);
    CHECK(slurp(dir / "e2.json") == slurp(dir / "e1.json"));

    const std::string text = slurp(source);
    write_text(dir / "cut.json", text.substr(0, text.size() / 3));
    const auto cut = invoke({"export", (dir / "cut.json").string(), (dir / "e3.json").string()});
    CHECK(cut.code == cli::kExitUsage);
    CHECK_FALSE(std::filesystem::exists(dir / "e3.json"));
}

TEST_CASE("inspect summarises a genome") {
    gen::TempDir dir("cli-inspect");
    InnovationRegistry reg;
    Rng rng(5);
    ConvStageGene stage;
    stage.kernel = Matrix(3, 3, 0.5);
    stage.pooler = PoolerKind::max;
    stage.pool_window = 2;
    const std::vector<ConvStageGene> stages{stage};
    const Genome g = new_minimal_genome({6, 6}, 2, stages, reg, rng);
    save_genome(g, dir / "g.json");
    const auto r = invoke({"inspect", (dir / "g.json").string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("image=6x6 conv_stages=1 inputs=4 hidden=0 outputs=2 connections=10 enabled=10") !=
          std::string::npos);
    CHECK(r.out.find("stage=0 kernel=3x3 stride=1 pooler=max window=2") != std::string::npos);
}

}
