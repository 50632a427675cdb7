#include "neuroevo/phenotype.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <string>
#include <unordered_map>

#include "neuroevo/error.hpp"

namespace neuroevo {

namespace {

std::string dims(Shape s) {
    return std::to_string(s.width) + "x" + std::to_string(s.height);
}

} // namespace

ImageMatrix::ImageMatrix(std::size_t width, std::size_t height, std::vector<double> pixels)
    : pixels_(height, width, std::move(pixels)) {
    if (width == 0 || height == 0) {
        throw ShapeError("image must be at least 1x1");
    }
    for (double v : pixels_.values) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ShapeError("image pixel values must lie in [0, 1]");
        }
    }
}

Phenotype compile(const Genome& g, std::size_t input_width, std::size_t input_height) {
    Phenotype p;
    p.input_shape_ = {input_height, input_width};
    p.stages_ = g.conv_stages;

    const auto features = pipeline_output_shape(g.conv_stages, p.input_shape_);
    const auto inputs = g.input_count();
    if (!features || features->size() != inputs) {
        throw ConfigError("conv pipeline output " + (features ? dims(*features) : std::string("(invalid)")) +
                          " for input " + dims(p.input_shape_) + " does not match " + std::to_string(inputs) +
                          " input nodes");
    }
    p.input_count_ = inputs;

    std::unordered_map<std::uint32_t, std::size_t> slot;
    std::size_t next_input = 0;
    std::size_t next_slot = inputs + 1;
    std::vector<const NodeGene*> computed;
    for (const auto& n : g.nodes) {
        switch (n.kind) {
        case NodeKind::input:
            slot[raw(n.id)] = next_input++;
            break;
        case NodeKind::bias:
            slot[raw(n.id)] = inputs;
            break;
        case NodeKind::hidden:
        case NodeKind::output:
            slot[raw(n.id)] = next_slot++;
            computed.push_back(&n);
            break;
        }
    }
    p.slot_count_ = next_slot;

    // Kahn's algorithm over enabled edges; ties broken by smallest node id so
    // the order is a pure function of the genome.
    std::unordered_map<std::uint32_t, std::vector<Phenotype::Incoming>> incoming;
    std::unordered_map<std::uint32_t, std::size_t> pending;
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> dependents;
    for (const auto* n : computed) {
        pending[raw(n->id)] = 0;
    }
    for (const auto& c : g.connections) {
        if (!c.enabled) {
            continue;
        }
        const auto from = slot.find(raw(c.from));
        if (from == slot.end() || !pending.contains(raw(c.to))) {
            throw StructureError("connection " + std::to_string(raw(c.innovation)) + " has an invalid endpoint");
        }
        incoming[raw(c.to)].push_back({from->second, c.weight});
        if (pending.contains(raw(c.from))) {
            ++pending[raw(c.to)];
            dependents[raw(c.from)].push_back(raw(c.to));
        }
    }

    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
    for (const auto& [id, count] : pending) {
        if (count == 0) {
            ready.push(id);
        }
    }
    while (!ready.empty()) {
        const auto id = ready.top();
        ready.pop();
        const auto* node = g.find_node(NodeId{id});
        p.neurons_.push_back({node->id, slot.at(id), node->activation, std::move(incoming[id])});
        for (auto dep : dependents[id]) {
            if (--pending[dep] == 0) {
                ready.push(dep);
            }
        }
    }
    if (p.neurons_.size() != computed.size()) {
        throw StructureError("enabled connections contain a cycle");
    }

    for (const auto* n : computed) {
        if (n->kind == NodeKind::output) {
            p.output_slots_.push_back(slot.at(raw(n->id)));
        }
    }
    return p;
}

std::vector<NodeId> Phenotype::eval_order() const {
    std::vector<NodeId> order;
    order.reserve(neurons_.size());
    for (const auto& n : neurons_) {
        order.push_back(n.id);
    }
    return order;
}

std::vector<double> Phenotype::extract_features(const ImageMatrix& image) const {
    if (image.shape() != input_shape_) {
        throw ShapeError("image is " + dims(image.shape()) + " but the network expects " + dims(input_shape_));
    }
    Matrix map = image.matrix();
    for (const auto& stage : stages_) {
        map = convolve(map, stage.kernel, stage.stride);
        map = pool(map, stage.pooler, stage.pool_window);
        activate_inplace(map, stage.activation);
    }
    return std::move(map.values);
}

std::vector<double> Phenotype::forward(const ImageMatrix& image) const {
    const auto features = extract_features(image);
    return forward_flat(features);
}

std::vector<double> Phenotype::forward_flat(std::span<const double> inputs) const {
    if (inputs.size() != input_count_) {
        throw ShapeError("expected " + std::to_string(input_count_) + " inputs, got " +
                         std::to_string(inputs.size()));
    }
    std::vector<double> values(slot_count_, 0.0);
    std::ranges::copy(inputs, values.begin());
    values[input_count_] = 1.0;
    for (const auto& neuron : neurons_) {
        double sum = 0.0;
        for (const auto& in : neuron.incoming) {
            sum += in.weight * values[in.source];
        }
        values[neuron.slot] = activate(sum, neuron.activation);
    }
    std::vector<double> out;
    out.reserve(output_slots_.size());
    for (auto s : output_slots_) {
        out.push_back(values[s]);
    }
    return out;
}

} // namespace neuroevo
