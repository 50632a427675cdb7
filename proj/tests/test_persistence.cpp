#include <doctest.h>

#include <bit>
#include <fstream>

#include "neuroevo/error.hpp"
#include "neuroevo/evolution.hpp"
#include "neuroevo/persistence.hpp"
#include "neuroevo/schema.hpp"
#include "support/generators.hpp"

using namespace neuroevo;
using nlohmann::json;

namespace {

Genome minimal() {
    InnovationRegistry reg;
    Rng rng(1);
    return new_minimal_genome({1, 2}, 1, {}, reg, rng);
}

bool same_bits(const Genome& a, const Genome& b) {
    if (!structurally_equal(a, b) || a.fitness.has_value() != b.fitness.has_value()) {
        return false;
    }
    for (std::size_t i = 0; i < a.connections.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(a.connections[i].weight) !=
            std::bit_cast<std::uint64_t>(b.connections[i].weight)) {
            return false;
        }
    }
    return !a.fitness || std::bit_cast<std::uint64_t>(*a.fitness) == std::bit_cast<std::uint64_t>(*b.fitness);
}

HistoryArchive small_history(std::size_t generations, std::size_t cap = 50000) {
    FitnessTask task;
    task.name = "output";
    task.input_shape = {2, 2};
    task.output_count = 1;
    task.fitness = [](const Phenotype& p) { return p.forward_flat(std::vector<double>{1, 0, 0, 1})[0]; };
    EvolutionConfig config;
    config.population_size = 12;
    config.max_generations = generations - 1;
    config.archive_member_cap = cap;
    config.conv_stages = std::vector<ConvStageSpec>{ConvStageSpec{1, 1, 1, PoolerKind::none, 1,
                                                                   ActivationKind::linear, std::nullopt}};
    return evolve(task, config, {1, {}}).history;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_SUITE("persistence") {

TEST_CASE("genome round trip and canonical form") {
    const Genome g = minimal();
    const std::string text = serialize_genome(g);
    CHECK(text == serialize_genome(g));
    CHECK(same_bits(parse_genome(text), g));

    const json doc = json::parse(text);
    CHECK(doc["format_version"] == 1);
    CHECK(doc["connections"].size() == 3);
    CHECK(doc["connections"][0].contains("innovation"));
    CHECK_FALSE(doc.contains("fitness"));
}

TEST_CASE("random genomes round trip bit for bit") {
    Rng rng(404);
    InnovationRegistry reg;
    gen::GenomeOptions options;
    options.wide_weights = true;
    for (int i = 0; i < 300; ++i) {
        const Genome g = gen::genome(rng, reg, options);
        const std::string text = serialize_genome(g);
        const Genome back = parse_genome(text);
        REQUIRE(same_bits(back, g));
        REQUIRE(serialize_genome(back) == text);
    }
}

TEST_CASE("missing field is reported with its path") {
    json doc = genome_to_json(minimal());
    doc.erase("connections");
    try {
        genome_from_json(doc);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.path() == "/connections");
        CHECK(std::string(e.what()).find("connections") != std::string::npos);
    }

    json heavy = genome_to_json(minimal());
    heavy["connections"][1]["weight"] = 9.5;
    try {
        genome_from_json(heavy);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.path() == "/connections/1/weight");
    }

    json extra = genome_to_json(minimal());
    extra["nodes"][0]["colour"] = "red";
    CHECK_THROWS_AS(genome_from_json(extra), ParseError);

    CHECK_THROWS_AS(parse_genome("{\"format_version\": 1, "), ParseError);
    CHECK_THROWS_AS(parse_genome("[1, 2]"), ParseError);
}

TEST_CASE("format version gate") {
    json doc = genome_to_json(minimal());
    doc["format_version"] = 2;
    CHECK_THROWS_AS(genome_from_json(doc), UnsupportedVersionError);
    doc["format_version"] = 0;
    CHECK_THROWS_AS(genome_from_json(doc), UnsupportedVersionError);
    doc["format_version"] = "1";
    CHECK_THROWS_AS(genome_from_json(doc), ParseError);
}

TEST_CASE("documents that pass the schema but break invariants") {
    json cyclic = genome_to_json(minimal());
    cyclic["connections"].push_back({{"innovation", 9}, {"from", 4}, {"to", 1}, {"weight", 0.5}, {"enabled", true}});
    CHECK_THROWS_AS(genome_from_json(cyclic), StructureError);

    ConvStageGene stage;
    stage.kernel = Matrix(3, 3, 0.1);
    InnovationRegistry reg;
    Rng rng(2);
    const std::vector<ConvStageGene> stages{stage};
    json conv = genome_to_json(new_minimal_genome({4, 4}, 1, stages, reg, rng));
    conv["conv_stages"][0]["kernel"].erase(0);
    try {
        genome_from_json(conv);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.path() == "/conv_stages/0/kernel");
    }
}

TEST_CASE("save and load files") {
    gen::TempDir dir("genome-files");
    const Genome g = minimal();
    save_genome(g, dir / "g.json");
    CHECK(same_bits(load_genome(dir / "g.json"), g));
    CHECK_FALSE(std::filesystem::exists(dir / "g.json.tmp"));
    CHECK_THROWS_AS(load_genome(dir / "none.json"), IoError);
    CHECK_THROWS_AS(save_genome(g, dir / "no" / "such" / "dir.json"), IoError);

    Genome bad = g;
    bad.connections[0].weight = 20.0;
    CHECK_THROWS_AS(save_genome(bad, dir / "bad.json"), StructureError);

    std::ofstream(dir / "cut.json") << serialize_genome(g).substr(0, 40);
    try {
        load_genome(dir / "cut.json");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("cut.json") != std::string::npos);
    }
}

TEST_CASE("config documents") {
    EvolutionConfig c;
    c.population_size = 42;
    c.fitness_target = 3.5;
    c.mutation.add_node_rate = 0.125;
    c.activations.hidden = ActivationKind::tanh;
    c.conv_stages = std::vector<ConvStageSpec>{
        ConvStageSpec{3, 3, 1, PoolerKind::max, 2, ActivationKind::relu, std::nullopt},
        ConvStageSpec{1, 1, 1, PoolerKind::none, 1, ActivationKind::linear, std::vector<double>{0.5}}};
    c.seed = 18446744073709551557ull;
    const json doc = config_to_json(c);
    CHECK(config_to_json(config_from_json(doc)) == doc);

    const EvolutionConfig partial = config_from_json(json{{"population_size", 10}, {"mutation", {{"add_node_rate", 0.5}}}});
    CHECK(partial.population_size == 10);
    CHECK(partial.mutation.add_node_rate == 0.5);
    CHECK(partial.mutation.add_connection_rate == EvolutionConfig{}.mutation.add_connection_rate);

    auto error_of = [](const json& j) -> std::string {
        try {
            config_from_json(j);
        } catch (const ConfigError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(error_of(json{{"mutation", {{"add_nod_rate", 0.5}}}}).find("config.mutation.add_nod_rate") !=
          std::string::npos);
    CHECK(error_of(json{{"populaton_size", 10}}).find("config.populaton_size") != std::string::npos);
    CHECK(error_of(json{{"population_size", "ten"}}).find("config.population_size") != std::string::npos);
    CHECK(error_of(json{{"population_size", -3}}).find("config.population_size") != std::string::npos);
    CHECK(error_of(json{{"survival_fraction", 0.0}}).find("survival_fraction") != std::string::npos);
    CHECK(error_of(json{{"hidden_activation", "softmax"}}).find("config.hidden_activation") != std::string::npos);
    CHECK(error_of(json{{"conv_stages", {{{"kernel_size", 3}}}}}).find("config.conv_stages[0].kernel_size") !=
          std::string::npos);

    gen::TempDir dir("config");
    std::ofstream(dir / "c.json") << "{\"population_size\": 12,";
    CHECK_THROWS_AS(load_config(dir / "c.json"), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "absent.json"), IoError);
}

TEST_CASE("shipped example configs load") {
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(NEUROEVO_SOURCE_DIR "/configs")) {
        INFO(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path()));
        ++count;
    }
    CHECK(count >= 3);
}

TEST_CASE("history export and import") {
    const auto history = small_history(1);
    const json doc = history_to_json(history);
    CHECK(doc["generations"].size() == 1);
    CHECK_NOTHROW(validate_history_document(doc));

    const auto longer = small_history(6);
    const std::string text = serialize_history(longer);
    const auto back = parse_history(text);
    CHECK(serialize_history(back) == text);
    CHECK(back.members_included);
    for (const auto& g : back.generations) {
        std::size_t total = 0;
        for (const auto& s : g.species) {
            total += s.size;
        }
        CHECK(total == back.config.population_size);
    }

    gen::TempDir dir("history");
    export_history(longer, dir / "h.json");
    CHECK(slurp(dir / "h.json") == text);
    CHECK(serialize_history(import_history(dir / "h.json")) == text);

    const auto gated = small_history(4, 10);
    CHECK_FALSE(gated.members_included);
    const json gated_doc = history_to_json(gated);
    CHECK_FALSE(gated_doc["generations"][0]["species"][0].contains("members"));
    CHECK(serialize_history(parse_history(gated_doc.dump())) == serialize_history(gated));
}

TEST_CASE("history validation failures") {
    const json doc = history_to_json(small_history(3));

    json future = doc;
    future["format_version"] = 7;
    CHECK_THROWS_AS(history_from_json(future), UnsupportedVersionError);

    json gap = doc;
    gap["generations"][1]["generation"] = 5;
    CHECK_THROWS_AS(history_from_json(gap), ParseError);

    json shrunk = doc;
    shrunk["generations"][2]["species"][0]["size"] = 1000;
    CHECK_THROWS_AS(history_from_json(shrunk), ParseError);

    json decreasing = doc;
    decreasing["generations"][2]["best_fitness_ever"] = -1.0;
    CHECK_THROWS_AS(history_from_json(decreasing), ParseError);

    json bad_genome = doc;
    bad_genome["generations"][0]["champion"].erase("nodes");
    try {
        history_from_json(bad_genome);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.path() == "/generations/0/champion/nodes");
    }

    json bad_config = doc;
    bad_config["config"]["mutation"]["typo"] = 1;
    CHECK_THROWS_AS(history_from_json(bad_config), ParseError);

    const std::string text = doc.dump();
    CHECK_THROWS_AS(parse_history(text.substr(0, text.size() / 2)), ParseError);
}

TEST_CASE("schema validator subset") {
    SchemaValidator v;
    v.add_schema(json::parse(R"({
        "$id": "urn:test:leaf",
        "type": "object",
        "required": ["n"],
        "additionalProperties": false,
        "properties": {
            "n": {"type": "integer", "minimum": 0, "maximum": 10},
            "tag": {"enum": ["a", "b"]},
            "xs": {"type": "array", "minItems": 1, "maxItems": 2, "items": {"type": ["number", "null"]}}
        }
    })"));
    v.add_schema(json::parse(R"({
        "$id": "urn:test:root",
        "type": "object",
        "properties": {"leaf": {"$ref": "urn:test:leaf"}, "local": {"$ref": "#/$defs/flag"}},
        "$defs": {"flag": {"const": true}}
    })"));
    auto issue_at = [&](const json& doc) {
        const auto issue = v.validate(doc, "urn:test:root");
        return issue ? issue->path : std::string("<valid>");
    };
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 3}})")) == "<valid>");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 3.0}})")) == "<valid>");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 3.5}})")) == "/leaf/n");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 11}})")) == "/leaf/n");
    CHECK(issue_at(json::parse(R"({"leaf": {}})")) == "/leaf/n");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 1, "tag": "c"}})")) == "/leaf/tag");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 1, "zz": 0}})")) == "/leaf/zz");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 1, "xs": []}})")) == "/leaf/xs");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 1, "xs": [1, 2, 3]}})")) == "/leaf/xs");
    CHECK(issue_at(json::parse(R"({"leaf": {"n": 1, "xs": [null, "s"]}})")) == "/leaf/xs/1");
    CHECK(issue_at(json::parse(R"({"local": false})")) == "/local");

    CHECK_THROWS(v.add_schema(json::parse(R"({"$id": "urn:test:bad", "pattern": "x"})")));
    CHECK_THROWS(v.validate(json::object(), "urn:test:missing"));
}

TEST_CASE("embedded schemas match the published files") {
    const std::filesystem::path dir = NEUROEVO_SOURCE_DIR "/schemas";
    CHECK(json::parse(genome_schema_text()) == json::parse(slurp(dir / "genome.schema.json")));
    CHECK(json::parse(history_schema_text()) == json::parse(slurp(dir / "history.schema.json")));
}

}
