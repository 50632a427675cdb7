#include "neuroevo/genome.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_map>

#include "neuroevo/error.hpp"

namespace neuroevo {

std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
    case NodeKind::input:
        return "input";
    case NodeKind::bias:
        return "bias";
    case NodeKind::hidden:
        return "hidden";
    case NodeKind::output:
        return "output";
    }
    return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view name) noexcept {
    for (auto kind : {NodeKind::input, NodeKind::bias, NodeKind::hidden, NodeKind::output}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

std::optional<Shape> stage_output_shape(const ConvStageGene& stage, Shape input) noexcept {
    auto shape = convolved_shape(input, stage.kernel.shape(), stage.stride);
    if (shape && stage.pooler != PoolerKind::none) {
        shape = pooled_shape(*shape, stage.pool_window);
    }
    return shape;
}

std::optional<Shape> pipeline_output_shape(std::span<const ConvStageGene> stages, Shape input) noexcept {
    std::optional<Shape> shape = input;
    for (const auto& stage : stages) {
        shape = stage_output_shape(stage, *shape);
        if (!shape) {
            return std::nullopt;
        }
    }
    if (shape->height == 0 || shape->width == 0) {
        return std::nullopt;
    }
    return shape;
}

namespace {

bool allowed_kernel_extent(std::size_t n) {
    return std::ranges::find(kAllowedKernelSizes, n) != std::end(kAllowedKernelSizes);
}

std::optional<std::string> conv_stage_violation(std::span<const ConvStageGene> stages, Shape input) {
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        const std::string where = "conv stage " + std::to_string(i);
        if (s.stage_index != i) {
            return where + ": stage_index " + std::to_string(s.stage_index) + " breaks the contiguous range";
        }
        if (!allowed_kernel_extent(s.kernel.rows) || !allowed_kernel_extent(s.kernel.cols)) {
            return where + ": kernel extents must be 1, 3 or 5";
        }
        if (s.kernel.values.size() != s.kernel.rows * s.kernel.cols) {
            return where + ": kernel value count does not match its shape";
        }
        for (double v : s.kernel.values) {
            if (!std::isfinite(v)) {
                return where + ": non-finite kernel value";
            }
        }
        if (s.stride == 0) {
            return where + ": stride must be positive";
        }
        if (s.pooler != PoolerKind::none && s.pool_window < 2) {
            return where + ": pool_window must be >= 2 when pooling";
        }
        if (s.pool_window == 0) {
            return where + ": pool_window must be positive";
        }
    }
    if (!pipeline_output_shape(stages, input)) {
        return "conv pipeline does not fit input " + std::to_string(input.height) + "x" +
               std::to_string(input.width);
    }
    return std::nullopt;
}

std::size_t flattened_inputs(std::span<const ConvStageGene> stages, Shape input) {
    const auto shape = pipeline_output_shape(stages, input);
    return shape ? shape->size() : 0;
}

void sort_genes(Genome& g) {
    std::ranges::sort(g.nodes, {}, [](const NodeGene& n) { return raw(n.id); });
    std::ranges::sort(g.connections, {}, [](const ConnectionGene& c) { return raw(c.innovation); });
}

// Dense adjacency over all connections (enabled or not). Acyclicity is kept
// on the full graph so that crossover re-enabling a gene can never close a
// cycle.
struct Graph {
    std::unordered_map<std::uint32_t, std::size_t> index;
    std::vector<std::vector<std::size_t>> out;

    explicit Graph(const Genome& g) : out(g.nodes.size()) {
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            index.emplace(raw(g.nodes[i].id), i);
        }
        for (const auto& c : g.connections) {
            out[index.at(raw(c.from))].push_back(index.at(raw(c.to)));
        }
    }

    bool reaches(std::size_t from, std::size_t target) const {
        std::vector<char> seen(out.size(), 0);
        std::vector<std::size_t> stack{from};
        while (!stack.empty()) {
            const auto n = stack.back();
            stack.pop_back();
            if (n == target) {
                return true;
            }
            if (seen[n]) {
                continue;
            }
            seen[n] = 1;
            for (auto m : out[n]) {
                stack.push_back(m);
            }
        }
        return false;
    }
};

bool is_acyclic(const Genome& g) {
    std::unordered_map<std::uint32_t, std::size_t> indegree;
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> out;
    for (const auto& n : g.nodes) {
        indegree[raw(n.id)] = 0;
    }
    for (const auto& c : g.connections) {
        ++indegree[raw(c.to)];
        out[raw(c.from)].push_back(raw(c.to));
    }
    std::vector<std::uint32_t> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) {
            ready.push_back(id);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto id = ready.back();
        ready.pop_back();
        ++visited;
        for (auto to : out[id]) {
            if (--indegree[to] == 0) {
                ready.push_back(to);
            }
        }
    }
    return visited == indegree.size();
}

void insert_connection(Genome& g, ConnectionGene c) {
    auto pos = std::ranges::lower_bound(g.connections, raw(c.innovation), {},
                                        [](const ConnectionGene& x) { return raw(x.innovation); });
    g.connections.insert(pos, c);
}

void insert_node(Genome& g, NodeGene n) {
    auto pos = std::ranges::lower_bound(g.nodes, raw(n.id), {}, [](const NodeGene& x) { return raw(x.id); });
    g.nodes.insert(pos, n);
}

} // namespace

std::size_t Genome::input_count() const noexcept {
    return static_cast<std::size_t>(
        std::ranges::count_if(nodes, [](const NodeGene& n) { return n.kind == NodeKind::input; }));
}

std::size_t Genome::output_count() const noexcept {
    return static_cast<std::size_t>(
        std::ranges::count_if(nodes, [](const NodeGene& n) { return n.kind == NodeKind::output; }));
}

const NodeGene* Genome::find_node(NodeId id) const noexcept {
    auto it = std::ranges::lower_bound(nodes, raw(id), {}, [](const NodeGene& n) { return raw(n.id); });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
}

const ConnectionGene* Genome::find_connection(NodeId from, NodeId to) const noexcept {
    auto it = std::ranges::find_if(connections, [&](const ConnectionGene& c) { return c.from == from && c.to == to; });
    return it != connections.end() ? &*it : nullptr;
}

bool structurally_equal(const Genome& a, const Genome& b) noexcept {
    return a.input_shape == b.input_shape && a.conv_stages == b.conv_stages && a.nodes == b.nodes &&
           a.connections == b.connections;
}

std::optional<std::string> find_invariant_violation(const Genome& g) {
    if (auto v = conv_stage_violation(g.conv_stages, g.input_shape)) {
        return v;
    }
    std::size_t inputs = 0;
    std::size_t biases = 0;
    std::size_t outputs = 0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto& n = g.nodes[i];
        if (raw(n.id) == 0) {
            return std::string("node id 0 is reserved");
        }
        if (i > 0 && raw(g.nodes[i - 1].id) >= raw(n.id)) {
            return "node ids not strictly increasing at id " + std::to_string(raw(n.id));
        }
        inputs += n.kind == NodeKind::input;
        biases += n.kind == NodeKind::bias;
        outputs += n.kind == NodeKind::output;
    }
    if (biases != 1) {
        return "expected exactly one bias node, found " + std::to_string(biases);
    }
    if (outputs == 0) {
        return std::string("genome has no output nodes");
    }
    const auto expected_inputs = flattened_inputs(g.conv_stages, g.input_shape);
    if (inputs != expected_inputs) {
        return "input node count " + std::to_string(inputs) + " does not match conv output size " +
               std::to_string(expected_inputs);
    }

    std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::size_t i = 0; i < g.connections.size(); ++i) {
        const auto& c = g.connections[i];
        const std::string where = "connection " + std::to_string(raw(c.innovation));
        if (raw(c.innovation) == 0) {
            return std::string("innovation 0 is reserved");
        }
        if (i > 0 && raw(g.connections[i - 1].innovation) >= raw(c.innovation)) {
            return where + ": innovations not strictly increasing";
        }
        const auto* from = g.find_node(c.from);
        const auto* to = g.find_node(c.to);
        if (from == nullptr || to == nullptr) {
            return where + ": references a missing node";
        }
        if (to->kind == NodeKind::input || to->kind == NodeKind::bias) {
            return where + ": targets an input or bias node";
        }
        if (c.from == c.to) {
            return where + ": self loop";
        }
        if (!pairs.emplace(raw(c.from), raw(c.to)).second) {
            return where + ": duplicate (from, to) pair";
        }
        if (!std::isfinite(c.weight) || std::abs(c.weight) > kWeightLimit) {
            return where + ": weight out of range";
        }
    }
    if (!is_acyclic(g)) {
        return std::string("connection graph contains a cycle");
    }
    return std::nullopt;
}

void validate_genome(const Genome& g) {
    if (auto violation = find_invariant_violation(g)) {
        throw StructureError(*violation);
    }
}

void InnovationRegistry::reserve_nodes(std::uint32_t count) {
    next_node_id_ = std::max(next_node_id_, count + 1);
}

Innovation InnovationRegistry::connection_innovation(NodeId from, NodeId to) {
    auto [it, inserted] = connection_innovations_.try_emplace({from, to}, Innovation{next_innovation_});
    if (inserted) {
        ++next_innovation_;
    }
    return it->second;
}

std::optional<Innovation> InnovationRegistry::find_connection(NodeId from, NodeId to) const {
    auto it = connection_innovations_.find({from, to});
    if (it == connection_innovations_.end()) {
        return std::nullopt;
    }
    return it->second;
}

InnovationRegistry::SplitRecord InnovationRegistry::split(const ConnectionGene& connection, const Genome& genome) {
    auto& records = split_records_[connection.innovation];
    for (const auto& record : records) {
        if (genome.find_node(record.node) == nullptr) {
            return record;
        }
    }
    SplitRecord record;
    record.node = NodeId{next_node_id_++};
    record.in_connection = connection_innovation(connection.from, record.node);
    record.out_connection = connection_innovation(record.node, connection.to);
    records.push_back(record);
    return record;
}

std::vector<ConvStageGene> make_conv_stages(std::span<const ConvStageSpec> specs, Rng& rng) {
    std::vector<ConvStageGene> stages;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        ConvStageGene stage;
        stage.stage_index = i;
        if (spec.kernel) {
            stage.kernel = Matrix(spec.kernel_height, spec.kernel_width, *spec.kernel);
        } else {
            stage.kernel = Matrix(spec.kernel_height, spec.kernel_width);
            for (double& v : stage.kernel.values) {
                v = rng.uniform(-1.0, 1.0);
            }
        }
        stage.stride = spec.stride;
        stage.pooler = spec.pooler;
        stage.pool_window = spec.pool_window;
        stage.activation = spec.activation;
        stages.push_back(std::move(stage));
    }
    return stages;
}

Genome new_minimal_genome(Shape input_shape, std::size_t num_outputs, std::span<const ConvStageGene> conv_seed,
                          InnovationRegistry& registry, Rng& rng, const NodeDefaults& defaults) {
    if (num_outputs == 0) {
        throw ConfigError("genome needs at least one output");
    }
    if (input_shape.size() == 0) {
        throw ConfigError("input shape must be at least 1x1");
    }
    if (auto violation = conv_stage_violation(conv_seed, input_shape)) {
        throw ConfigError(*violation);
    }

    Genome g;
    g.input_shape = input_shape;
    g.conv_stages.assign(conv_seed.begin(), conv_seed.end());

    const auto num_inputs = static_cast<std::uint32_t>(flattened_inputs(conv_seed, input_shape));
    const auto outputs = static_cast<std::uint32_t>(num_outputs);
    std::uint32_t id = 1;
    for (std::uint32_t i = 0; i < num_inputs; ++i) {
        g.nodes.push_back({NodeId{id++}, NodeKind::input, ActivationKind::linear});
    }
    g.nodes.push_back({NodeId{id++}, NodeKind::bias, ActivationKind::linear});
    for (std::uint32_t i = 0; i < outputs; ++i) {
        g.nodes.push_back({NodeId{id++}, NodeKind::output, defaults.output});
    }
    registry.reserve_nodes(id - 1);

    for (std::uint32_t source = 1; source <= num_inputs + 1; ++source) {
        for (std::uint32_t o = 0; o < outputs; ++o) {
            const NodeId target{num_inputs + 2 + o};
            const NodeId from{source};
            g.connections.push_back(
                {registry.connection_innovation(from, target), from, target, rng.uniform(-1.0, 1.0), true});
        }
    }
    sort_genes(g);
    return g;
}

double compatibility_distance(const Genome& a, const Genome& b, const CompatibilityCoefficients& coeffs) {
    const auto& ca = a.connections;
    const auto& cb = b.connections;
    const std::uint32_t max_a = ca.empty() ? 0 : raw(ca.back().innovation);
    const std::uint32_t max_b = cb.empty() ? 0 : raw(cb.back().innovation);
    const std::uint32_t excess_cut = std::min(max_a, max_b);

    std::size_t excess = 0;
    std::size_t disjoint = 0;
    std::size_t matched = 0;
    double weight_diff = 0.0;

    auto unmatched = [&](Innovation inn) {
        if (raw(inn) > excess_cut) {
            ++excess;
        } else {
            ++disjoint;
        }
    };

    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ca.size() || j < cb.size()) {
        if (j == cb.size() || (i < ca.size() && raw(ca[i].innovation) < raw(cb[j].innovation))) {
            unmatched(ca[i++].innovation);
        } else if (i == ca.size() || raw(cb[j].innovation) < raw(ca[i].innovation)) {
            unmatched(cb[j++].innovation);
        } else {
            weight_diff += std::abs(ca[i].weight - cb[j].weight);
            ++matched;
            ++i;
            ++j;
        }
    }

    // Conv stages pair up by stage index; a matched stage contributes its
    // mean absolute kernel difference as one more matched gene.
    const auto& sa = a.conv_stages;
    const auto& sb = b.conv_stages;
    const std::size_t common = std::min(sa.size(), sb.size());
    for (std::size_t s = 0; s < common; ++s) {
        if (sa[s].kernel.shape() != sb[s].kernel.shape()) {
            disjoint += 2;
            continue;
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < sa[s].kernel.values.size(); ++k) {
            diff += std::abs(sa[s].kernel.values[k] - sb[s].kernel.values[k]);
        }
        weight_diff += diff / static_cast<double>(sa[s].kernel.values.size());
        ++matched;
    }
    disjoint += std::max(sa.size(), sb.size()) - common;

    const std::size_t size_a = ca.size() + sa.size();
    const std::size_t size_b = cb.size() + sb.size();
    double n = static_cast<double>(std::max(size_a, size_b));
    if ((size_a < coeffs.n_floor && size_b < coeffs.n_floor) || n == 0.0) {
        n = 1.0;
    }
    const double mean_diff = matched > 0 ? weight_diff / static_cast<double>(matched) : 0.0;
    return coeffs.c1 * static_cast<double>(excess) / n + coeffs.c2 * static_cast<double>(disjoint) / n +
           coeffs.c3 * mean_diff;
}

Genome crossover(const Genome& fitter, const Genome& other, Rng& rng, double disable_prob) {
    const bool tie = fitter.fitness && other.fitness && *fitter.fitness == *other.fitness;

    Genome child;
    child.input_shape = fitter.input_shape;
    child.nodes = fitter.nodes;

    for (const auto& stage : fitter.conv_stages) {
        const ConvStageGene* match = stage.stage_index < other.conv_stages.size()
                                         ? &other.conv_stages[stage.stage_index]
                                         : nullptr;
        const bool compatible = match != nullptr && match->kernel.shape() == stage.kernel.shape() &&
                                stage_output_shape(*match, child.input_shape) ==
                                    stage_output_shape(stage, child.input_shape);
        if (compatible && rng.bernoulli(0.5)) {
            child.conv_stages.push_back(*match);
        } else {
            child.conv_stages.push_back(stage);
        }
    }

    auto inherit = [&](const ConnectionGene& chosen, bool disabled_in_parent) {
        ConnectionGene gene = chosen;
        if (disabled_in_parent && rng.bernoulli(disable_prob)) {
            gene.enabled = false;
        }
        return gene;
    };

    std::vector<const ConnectionGene*> other_only;
    const auto& ca = fitter.connections;
    const auto& cb = other.connections;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ca.size() || j < cb.size()) {
        if (j == cb.size() || (i < ca.size() && raw(ca[i].innovation) < raw(cb[j].innovation))) {
            child.connections.push_back(inherit(ca[i], !ca[i].enabled));
            ++i;
        } else if (i == ca.size() || raw(cb[j].innovation) < raw(ca[i].innovation)) {
            other_only.push_back(&cb[j]);
            ++j;
        } else {
            const auto& chosen = rng.bernoulli(0.5) ? ca[i] : cb[j];
            child.connections.push_back(inherit(chosen, !ca[i].enabled || !cb[j].enabled));
            ++i;
            ++j;
        }
    }

    if (tie) {
        // Equal fitness: take the other parent's unmatched genes too, skipping
        // any that would duplicate a pair or close a cycle.
        for (const auto* c : other_only) {
            if (child.find_connection(c->from, c->to) != nullptr) {
                continue;
            }
            for (NodeId id : {c->from, c->to}) {
                if (child.find_node(id) == nullptr) {
                    insert_node(child, *other.find_node(id));
                }
            }
            Graph graph(child);
            if (graph.reaches(graph.index.at(raw(c->to)), graph.index.at(raw(c->from)))) {
                continue;
            }
            insert_connection(child, inherit(*c, !c->enabled));
        }
        // Drop hidden nodes pulled in only for rejected genes.
        std::erase_if(child.nodes, [&](const NodeGene& n) {
            if (n.kind != NodeKind::hidden || fitter.find_node(n.id) != nullptr) {
                return false;
            }
            return std::ranges::none_of(child.connections,
                                        [&](const ConnectionGene& c) { return c.from == n.id || c.to == n.id; });
        });
    }
    return child;
}

Genome mutate_add_connection(const Genome& g, InnovationRegistry& registry, Rng& rng) {
    const Graph graph(g);
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t t = 0; t < g.nodes.size(); ++t) {
        const auto kind = g.nodes[t].kind;
        if (kind != NodeKind::hidden && kind != NodeKind::output) {
            continue;
        }
        std::vector<char> downstream(g.nodes.size(), 0);
        std::vector<std::size_t> stack{t};
        while (!stack.empty()) {
            const auto n = stack.back();
            stack.pop_back();
            if (downstream[n]) {
                continue;
            }
            downstream[n] = 1;
            for (auto m : graph.out[n]) {
                stack.push_back(m);
            }
        }
        for (std::size_t s = 0; s < g.nodes.size(); ++s) {
            if (downstream[s] || g.nodes[s].kind == NodeKind::output) {
                continue;
            }
            if (g.find_connection(g.nodes[s].id, g.nodes[t].id) != nullptr) {
                continue;
            }
            candidates.emplace_back(s, t);
        }
    }
    if (candidates.empty()) {
        return g;
    }
    const auto [s, t] = candidates[rng.index(candidates.size())];
    Genome child = g;
    const NodeId from = g.nodes[s].id;
    const NodeId to = g.nodes[t].id;
    insert_connection(child, {registry.connection_innovation(from, to), from, to, rng.uniform(-1.0, 1.0), true});
    return child;
}

Genome mutate_add_node(const Genome& g, InnovationRegistry& registry, Rng& rng, ActivationKind hidden_activation) {
    std::vector<std::size_t> enabled;
    for (std::size_t i = 0; i < g.connections.size(); ++i) {
        if (g.connections[i].enabled) {
            enabled.push_back(i);
        }
    }
    if (enabled.empty()) {
        return g;
    }
    Genome child = g;
    auto& split = child.connections[enabled[rng.index(enabled.size())]];
    split.enabled = false;
    const ConnectionGene original = split;
    const auto record = registry.split(original, g);

    insert_node(child, {record.node, NodeKind::hidden, hidden_activation});
    insert_connection(child, {record.in_connection, original.from, record.node, 1.0, true});
    insert_connection(child, {record.out_connection, record.node, original.to, original.weight, true});
    return child;
}

double clamp_weight(double w) noexcept {
    return std::clamp(w, -kWeightLimit, kWeightLimit);
}

Genome mutate_weights(const Genome& g, const WeightMutation& params, Rng& rng) {
    Genome child = g;
    for (auto& c : child.connections) {
        const double u = rng.uniform();
        if (u < params.perturb_prob) {
            c.weight = clamp_weight(c.weight + rng.normal(0.0, params.perturb_sigma));
        } else if (u < params.perturb_prob + params.reset_prob) {
            c.weight = rng.uniform(-1.0, 1.0);
        }
    }
    return child;
}

Genome mutate_conv(const Genome& g, const ConvMutation& params, Rng& rng) {
    if (g.conv_stages.empty()) {
        return g;
    }
    Genome child = g;
    for (auto& stage : child.conv_stages) {
        for (double& k : stage.kernel.values) {
            k = clamp_weight(k + rng.normal(0.0, params.kernel_sigma));
        }
    }

    const auto keeps_shape = [&](const Genome& candidate) {
        return flattened_inputs(candidate.conv_stages, candidate.input_shape) == g.input_count();
    };

    if (rng.bernoulli(params.swap_pooler_prob)) {
        const auto s = rng.index(child.conv_stages.size());
        const auto previous = child.conv_stages[s];
        auto& stage = child.conv_stages[s];
        stage.pooler = kAllPoolers[rng.index(std::size(kAllPoolers))];
        if (stage.pooler != PoolerKind::none && stage.pool_window < 2) {
            stage.pool_window = 2;
        }
        if (!keeps_shape(child)) {
            stage = previous;
        }
    }
    if (rng.bernoulli(params.swap_activation_prob)) {
        auto& stage = child.conv_stages[rng.index(child.conv_stages.size())];
        stage.activation = kAllActivations[rng.index(kAllActivations.size())];
    }
    return child;
}

} // namespace neuroevo
