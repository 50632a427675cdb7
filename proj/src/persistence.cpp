#include "neuroevo/persistence.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <system_error>

#include "neuroevo/error.hpp"
#include "neuroevo/schema.hpp"

namespace neuroevo {

namespace {

using nlohmann::json;

json number(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw UsageError(std::string("cannot serialize non-finite ") + what);
    }
    return v;
}

void check_version(const json& doc) {
    if (!doc.is_object()) {
        throw ParseError("", "document must be a JSON object");
    }
    auto it = doc.find("format_version");
    if (it != doc.end() && (it->is_number_integer()) && it->get<std::int64_t>() != kFormatVersion) {
        throw UnsupportedVersionError("format_version " + it->dump() + " is not supported (this build reads " +
                                      std::to_string(kFormatVersion) + ")");
    }
}

json parse_text(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("malformed JSON: ") + e.what());
    }
}

// ---- genome ----

json conv_stage_to_json(const ConvStageGene& s) {
    json kernel = json::array();
    for (double v : s.kernel.values) {
        kernel.push_back(number(v, "kernel value"));
    }
    return json{{"stage_index", s.stage_index},
                {"kernel_height", s.kernel.rows},
                {"kernel_width", s.kernel.cols},
                {"kernel", std::move(kernel)},
                {"stride", s.stride},
                {"pooler", to_string(s.pooler)},
                {"pool_window", s.pool_window},
                {"activation", to_string(s.activation)}};
}

// The document has already passed the genome schema.
Genome genome_from_checked(const json& doc, const std::string& path) {
    Genome g;
    g.input_shape = {doc["input_height"].get<std::size_t>(), doc["input_width"].get<std::size_t>()};
    const auto& stages = doc["conv_stages"];
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        const auto rows = s["kernel_height"].get<std::size_t>();
        const auto cols = s["kernel_width"].get<std::size_t>();
        auto values = s["kernel"].get<std::vector<double>>();
        if (values.size() != rows * cols) {
            throw ParseError(path + "/conv_stages/" + std::to_string(i) + "/kernel",
                             "expected " + std::to_string(rows * cols) + " values, got " +
                                 std::to_string(values.size()));
        }
        ConvStageGene stage;
        stage.stage_index = s["stage_index"].get<std::size_t>();
        stage.kernel = Matrix(rows, cols, std::move(values));
        stage.stride = s["stride"].get<std::size_t>();
        stage.pooler = *parse_pooler(s["pooler"].get<std::string>());
        stage.pool_window = s["pool_window"].get<std::size_t>();
        stage.activation = *parse_activation(s["activation"].get<std::string>());
        g.conv_stages.push_back(std::move(stage));
    }
    for (const auto& n : doc["nodes"]) {
        g.nodes.push_back({NodeId{n["id"].get<std::uint32_t>()}, *parse_node_kind(n["kind"].get<std::string>()),
                           *parse_activation(n["activation"].get<std::string>())});
    }
    for (const auto& c : doc["connections"]) {
        g.connections.push_back({Innovation{c["innovation"].get<std::uint32_t>()},
                                 NodeId{c["from"].get<std::uint32_t>()}, NodeId{c["to"].get<std::uint32_t>()},
                                 c["weight"].get<double>(), c["enabled"].get<bool>()});
    }
    if (auto f = doc.find("fitness"); f != doc.end()) {
        g.fitness = f->get<double>();
    }
    if (auto problem = find_invariant_violation(g)) {
        throw StructureError((path.empty() ? "" : path + ": ") + *problem);
    }
    return g;
}

void throw_issue(const std::optional<SchemaIssue>& issue) {
    if (issue) {
        throw ParseError(issue->path, issue->message);
    }
}

// ---- config ----

class ConfigReader {
public:
    ConfigReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
        if (!object_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
    }

    void allow(std::initializer_list<const char*> keys) const {
        for (const auto& [key, value] : object_.items()) {
            bool known = false;
            for (const char* k : keys) {
                known = known || key == k;
            }
            if (!known) {
                throw ConfigError(path_ + "." + key + ": unknown key");
            }
        }
    }

    const json* find(const char* key) const {
        auto it = object_.find(key);
        return it == object_.end() ? nullptr : &*it;
    }

    std::string field(const char* key) const { return path_ + "." + key; }

    void read(const char* key, double& out) const {
        if (const json* v = find(key)) {
            if (!v->is_number()) {
                throw ConfigError(field(key) + ": expected a number");
            }
            out = v->get<double>();
        }
    }

    template <typename T>
        requires std::is_unsigned_v<T>
    void read(const char* key, T& out) const {
        if (const json* v = find(key)) {
            if (v->is_number_unsigned()) {
                out = static_cast<T>(v->get<std::uint64_t>());
                return;
            }
            if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
                out = static_cast<T>(v->get<std::int64_t>());
                return;
            }
            if (v->is_number_float()) {
                const double d = v->get<double>();
                if (d >= 0 && std::floor(d) == d && d < 1.8e19) {
                    out = static_cast<T>(d);
                    return;
                }
            }
            throw ConfigError(field(key) + ": expected a non-negative integer");
        }
    }

    void read(const char* key, ActivationKind& out) const {
        if (const json* v = find(key)) {
            auto parsed = v->is_string() ? parse_activation(v->get<std::string>()) : std::nullopt;
            if (!parsed) {
                throw ConfigError(field(key) + ": unknown activation " + v->dump());
            }
            out = *parsed;
        }
    }

    void read(const char* key, PoolerKind& out) const {
        if (const json* v = find(key)) {
            auto parsed = v->is_string() ? parse_pooler(v->get<std::string>()) : std::nullopt;
            if (!parsed) {
                throw ConfigError(field(key) + ": unknown pooler " + v->dump());
            }
            out = *parsed;
        }
    }

private:
    const json& object_;
    std::string path_;
};

json conv_spec_to_json(const ConvStageSpec& s) {
    json out{{"kernel_height", s.kernel_height},
             {"kernel_width", s.kernel_width},
             {"stride", s.stride},
             {"pooler", to_string(s.pooler)},
             {"pool_window", s.pool_window},
             {"activation", to_string(s.activation)}};
    if (s.kernel) {
        json kernel = json::array();
        for (double v : *s.kernel) {
            kernel.push_back(number(v, "kernel value"));
        }
        out["kernel"] = std::move(kernel);
    }
    return out;
}

ConvStageSpec conv_spec_from_json(const json& doc, const std::string& path) {
    ConfigReader r(doc, path);
    r.allow({"kernel_height", "kernel_width", "stride", "pooler", "pool_window", "activation", "kernel"});
    ConvStageSpec s;
    r.read("kernel_height", s.kernel_height);
    r.read("kernel_width", s.kernel_width);
    r.read("stride", s.stride);
    r.read("pooler", s.pooler);
    r.read("pool_window", s.pool_window);
    r.read("activation", s.activation);
    if (const json* k = r.find("kernel")) {
        if (!k->is_array()) {
            throw ConfigError(r.field("kernel") + ": expected an array of numbers");
        }
        std::vector<double> values;
        for (const auto& v : *k) {
            if (!v.is_number()) {
                throw ConfigError(r.field("kernel") + ": expected an array of numbers");
            }
            values.push_back(v.get<double>());
        }
        s.kernel = std::move(values);
    }
    return s;
}

// ---- history ----

json stats_to_json(const FitnessStats& s) {
    return json{{"min", number(s.min, "fitness")}, {"mean", number(s.mean, "fitness")},
                {"max", number(s.max, "fitness")}};
}

} // namespace

json genome_to_json(const Genome& g) {
    json stages = json::array();
    for (const auto& s : g.conv_stages) {
        stages.push_back(conv_stage_to_json(s));
    }
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        nodes.push_back(json{{"id", raw(n.id)}, {"kind", to_string(n.kind)}, {"activation", to_string(n.activation)}});
    }
    json connections = json::array();
    for (const auto& c : g.connections) {
        connections.push_back(json{{"innovation", raw(c.innovation)},
                                   {"from", raw(c.from)},
                                   {"to", raw(c.to)},
                                   {"weight", number(c.weight, "weight")},
                                   {"enabled", c.enabled}});
    }
    json doc{{"format_version", kFormatVersion},
             {"input_width", g.input_shape.width},
             {"input_height", g.input_shape.height},
             {"conv_stages", std::move(stages)},
             {"nodes", std::move(nodes)},
             {"connections", std::move(connections)}};
    if (g.fitness) {
        doc["fitness"] = number(*g.fitness, "fitness");
    }
    return doc;
}

void validate_genome_document(const json& doc) {
    throw_issue(published_schemas().validate(doc, kGenomeSchemaId));
}

void validate_history_document(const json& doc) {
    throw_issue(published_schemas().validate(doc, kHistorySchemaId));
}

Genome genome_from_json(const json& doc) {
    check_version(doc);
    validate_genome_document(doc);
    return genome_from_checked(doc, "");
}

std::string serialize_genome(const Genome& g) {
    return genome_to_json(g).dump(2) + "\n";
}

Genome parse_genome(std::string_view text) {
    return genome_from_json(parse_text(text));
}

void save_genome(const Genome& g, const std::filesystem::path& path) {
    validate_genome(g);
    write_file_atomic(path, serialize_genome(g));
}

Genome load_genome(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return parse_genome(text);
    } catch (const ParseError& e) {
        throw ParseError(e.path(), path.string() + ": " + e.message());
    }
}

json config_to_json(const EvolutionConfig& c) {
    const auto& m = c.mutation;
    json conv_stages = nullptr;
    if (c.conv_stages) {
        conv_stages = json::array();
        for (const auto& s : *c.conv_stages) {
            conv_stages.push_back(conv_spec_to_json(s));
        }
    }
    return json{
        {"population_size", c.population_size},
        {"compatibility",
         {{"c1", c.compatibility.c1},
          {"c2", c.compatibility.c2},
          {"c3", c.compatibility.c3},
          {"n_floor", c.compatibility.n_floor},
          {"threshold", c.compatibility.threshold}}},
        {"mutation",
         {{"weight_mutation_rate", m.weight_mutation_rate},
          {"weight_perturb_prob", m.weights.perturb_prob},
          {"weight_perturb_sigma", m.weights.perturb_sigma},
          {"weight_reset_prob", m.weights.reset_prob},
          {"add_connection_rate", m.add_connection_rate},
          {"add_node_rate", m.add_node_rate},
          {"conv_mutation_rate", m.conv_mutation_rate},
          {"kernel_sigma", m.conv.kernel_sigma},
          {"swap_pooler_prob", m.conv.swap_pooler_prob},
          {"swap_activation_prob", m.conv.swap_activation_prob},
          {"disable_inherited_prob", m.disable_inherited_prob}}},
        {"elitism_count", c.elitism_count},
        {"elitism_min_species_size", c.elitism_min_species_size},
        {"stagnation_limit", c.stagnation_limit},
        {"interspecies_mating_prob", c.interspecies_mating_prob},
        {"survival_fraction", c.survival_fraction},
        {"max_generations", c.max_generations},
        {"fitness_target", c.fitness_target ? json(*c.fitness_target) : json(nullptr)},
        {"seed", c.seed},
        {"hidden_activation", to_string(c.activations.hidden)},
        {"output_activation", to_string(c.activations.output)},
        {"conv_stages", std::move(conv_stages)},
        {"archive_member_cap", c.archive_member_cap},
        {"task",
         {{"bars_size", c.task.bars_size},
          {"bars_samples_per_class", c.task.bars_samples_per_class},
          {"bars_noise", c.task.bars_noise},
          {"bars_seed", c.task.bars_seed},
          {"image_width", c.task.image_width},
          {"image_height", c.task.image_height}}},
    };
}

EvolutionConfig config_from_json(const json& doc) {
    EvolutionConfig c;
    ConfigReader r(doc, "config");
    r.allow({"population_size", "compatibility", "mutation", "elitism_count", "elitism_min_species_size",
             "stagnation_limit", "interspecies_mating_prob", "survival_fraction", "max_generations",
             "fitness_target", "seed", "hidden_activation", "output_activation", "conv_stages",
             "archive_member_cap", "task"});
    r.read("population_size", c.population_size);
    if (const json* v = r.find("compatibility")) {
        ConfigReader cr(*v, r.field("compatibility"));
        cr.allow({"c1", "c2", "c3", "n_floor", "threshold"});
        cr.read("c1", c.compatibility.c1);
        cr.read("c2", c.compatibility.c2);
        cr.read("c3", c.compatibility.c3);
        cr.read("n_floor", c.compatibility.n_floor);
        cr.read("threshold", c.compatibility.threshold);
    }
    if (const json* v = r.find("mutation")) {
        auto& m = c.mutation;
        ConfigReader mr(*v, r.field("mutation"));
        mr.allow({"weight_mutation_rate", "weight_perturb_prob", "weight_perturb_sigma", "weight_reset_prob",
                  "add_connection_rate", "add_node_rate", "conv_mutation_rate", "kernel_sigma", "swap_pooler_prob",
                  "swap_activation_prob", "disable_inherited_prob"});
        mr.read("weight_mutation_rate", m.weight_mutation_rate);
        mr.read("weight_perturb_prob", m.weights.perturb_prob);
        mr.read("weight_perturb_sigma", m.weights.perturb_sigma);
        mr.read("weight_reset_prob", m.weights.reset_prob);
        mr.read("add_connection_rate", m.add_connection_rate);
        mr.read("add_node_rate", m.add_node_rate);
        mr.read("conv_mutation_rate", m.conv_mutation_rate);
        mr.read("kernel_sigma", m.conv.kernel_sigma);
        mr.read("swap_pooler_prob", m.conv.swap_pooler_prob);
        mr.read("swap_activation_prob", m.conv.swap_activation_prob);
        mr.read("disable_inherited_prob", m.disable_inherited_prob);
    }
    r.read("elitism_count", c.elitism_count);
    r.read("elitism_min_species_size", c.elitism_min_species_size);
    r.read("stagnation_limit", c.stagnation_limit);
    r.read("interspecies_mating_prob", c.interspecies_mating_prob);
    r.read("survival_fraction", c.survival_fraction);
    r.read("max_generations", c.max_generations);
    if (const json* v = r.find("fitness_target"); v && !v->is_null()) {
        double target = 0.0;
        r.read("fitness_target", target);
        c.fitness_target = target;
    }
    r.read("seed", c.seed);
    r.read("hidden_activation", c.activations.hidden);
    r.read("output_activation", c.activations.output);
    if (const json* v = r.find("conv_stages"); v && !v->is_null()) {
        if (!v->is_array()) {
            throw ConfigError(r.field("conv_stages") + ": expected an array or null");
        }
        std::vector<ConvStageSpec> specs;
        for (std::size_t i = 0; i < v->size(); ++i) {
            specs.push_back(conv_spec_from_json((*v)[i], r.field("conv_stages") + "[" + std::to_string(i) + "]"));
        }
        c.conv_stages = std::move(specs);
    }
    r.read("archive_member_cap", c.archive_member_cap);
    if (const json* v = r.find("task")) {
        ConfigReader tr(*v, r.field("task"));
        tr.allow({"bars_size", "bars_samples_per_class", "bars_noise", "bars_seed", "image_width", "image_height"});
        tr.read("bars_size", c.task.bars_size);
        tr.read("bars_samples_per_class", c.task.bars_samples_per_class);
        tr.read("bars_noise", c.task.bars_noise);
        tr.read("bars_seed", c.task.bars_seed);
        tr.read("image_width", c.task.image_width);
        tr.read("image_height", c.task.image_height);
    }
    c.validate();
    return c;
}

EvolutionConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": malformed JSON: " + e.what());
    }
    try {
        return config_from_json(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json history_to_json(const HistoryArchive& h) {
    json generations = json::array();
    for (const auto& report : h.generations) {
        json species = json::array();
        for (const auto& s : report.species) {
            json entry{{"id", s.id},
                       {"size", s.size},
                       {"best_fitness", number(s.best_fitness, "fitness")},
                       {"best_fitness_ever", number(s.best_fitness_ever, "fitness")},
                       {"stagnation", s.stagnation},
                       {"representative", genome_to_json(s.representative)},
                       {"champion", genome_to_json(s.champion)}};
            if (h.members_included) {
                json members = json::array();
                for (const auto& m : s.members) {
                    members.push_back(genome_to_json(m));
                }
                entry["members"] = std::move(members);
            }
            species.push_back(std::move(entry));
        }
        generations.push_back(json{{"generation", report.generation},
                                   {"species", std::move(species)},
                                   {"champion", genome_to_json(report.champion)},
                                   {"champion_species", report.champion_species},
                                   {"fitness", stats_to_json(report.fitness)},
                                   {"best_fitness_ever", number(report.best_fitness_ever, "fitness")}});
    }
    return json{{"format_version", h.format_version},
                {"config", config_to_json(h.config)},
                {"task",
                 {{"name", h.task.name},
                  {"input_width", h.task.input_shape.width},
                  {"input_height", h.task.input_shape.height},
                  {"output_count", h.task.output_count},
                  {"fitness_target", h.task.fitness_target ? json(*h.task.fitness_target) : json(nullptr)}}},
                {"population_size", h.config.population_size},
                {"members_included", h.members_included},
                {"generations", std::move(generations)}};
}

HistoryArchive history_from_json(const json& doc) {
    check_version(doc);
    validate_history_document(doc);

    HistoryArchive h;
    h.format_version = doc["format_version"].get<int>();
    try {
        h.config = config_from_json(doc["config"]);
    } catch (const ConfigError& e) {
        throw ParseError("/config", e.what());
    }
    if (doc["population_size"].get<std::size_t>() != h.config.population_size) {
        throw ParseError("/population_size", "does not match config.population_size");
    }
    const auto& task = doc["task"];
    h.task.name = task["name"].get<std::string>();
    h.task.input_shape = {task["input_height"].get<std::size_t>(), task["input_width"].get<std::size_t>()};
    h.task.output_count = task["output_count"].get<std::size_t>();
    if (!task["fitness_target"].is_null()) {
        h.task.fitness_target = task["fitness_target"].get<double>();
    }
    h.members_included = doc["members_included"].get<bool>();

    const auto& generations = doc["generations"];
    for (std::size_t gi = 0; gi < generations.size(); ++gi) {
        const auto& g = generations[gi];
        const std::string gpath = "/generations/" + std::to_string(gi);
        GenerationReport report;
        report.generation = g["generation"].get<std::size_t>();
        if (report.generation != gi) {
            throw ParseError(gpath + "/generation", "generations must be contiguous from 0");
        }
        std::size_t total = 0;
        const auto& species = g["species"];
        for (std::size_t si = 0; si < species.size(); ++si) {
            const auto& s = species[si];
            const std::string spath = gpath + "/species/" + std::to_string(si);
            SpeciesSnapshot snap;
            snap.id = s["id"].get<std::uint32_t>();
            snap.size = s["size"].get<std::size_t>();
            snap.best_fitness = s["best_fitness"].get<double>();
            snap.best_fitness_ever = s["best_fitness_ever"].get<double>();
            snap.stagnation = s["stagnation"].get<std::size_t>();
            snap.representative = genome_from_checked(s["representative"], spath + "/representative");
            snap.champion = genome_from_checked(s["champion"], spath + "/champion");
            if (auto members = s.find("members"); members != s.end()) {
                if (!h.members_included) {
                    throw ParseError(spath + "/members", "members present although members_included is false");
                }
                if (members->size() != snap.size) {
                    throw ParseError(spath + "/members", "member count does not match size");
                }
                for (std::size_t mi = 0; mi < members->size(); ++mi) {
                    snap.members.push_back(
                        genome_from_checked((*members)[mi], spath + "/members/" + std::to_string(mi)));
                }
            } else if (h.members_included) {
                throw ParseError(spath + "/members", "missing required field 'members'");
            }
            total += snap.size;
            report.species.push_back(std::move(snap));
        }
        if (total != h.config.population_size) {
            throw ParseError(gpath + "/species", "species sizes sum to " + std::to_string(total) +
                                                     ", expected population_size " +
                                                     std::to_string(h.config.population_size));
        }
        report.champion = genome_from_checked(g["champion"], gpath + "/champion");
        report.champion_species = g["champion_species"].get<std::uint32_t>();
        report.fitness = {g["fitness"]["min"].get<double>(), g["fitness"]["mean"].get<double>(),
                          g["fitness"]["max"].get<double>()};
        report.best_fitness_ever = g["best_fitness_ever"].get<double>();
        if (gi > 0 && report.best_fitness_ever < h.generations.back().best_fitness_ever) {
            throw ParseError(gpath + "/best_fitness_ever", "best fitness ever decreased");
        }
        h.generations.push_back(std::move(report));
    }
    return h;
}

std::string serialize_history(const HistoryArchive& history) {
    return history_to_json(history).dump() + "\n";
}

HistoryArchive parse_history(std::string_view text) {
    return history_from_json(parse_text(text));
}

void export_history(const HistoryArchive& history, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_history(history));
}

HistoryArchive import_history(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return parse_history(text);
    } catch (const ParseError& e) {
        throw ParseError(e.path(), path.string() + ": " + e.message());
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError(path.string() + ": cannot open for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.close();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError(path.string() + ": write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(path.string() + ": cannot replace file: " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace neuroevo
