#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neuroevo/activation.hpp"
#include "neuroevo/conv.hpp"
#include "neuroevo/rng.hpp"

namespace neuroevo {

enum class NodeId : std::uint32_t {};
enum class Innovation : std::uint32_t {};

constexpr std::uint32_t raw(NodeId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t raw(Innovation i) noexcept { return static_cast<std::uint32_t>(i); }

enum class NodeKind { input, bias, hidden, output };

std::string_view to_string(NodeKind kind) noexcept;
std::optional<NodeKind> parse_node_kind(std::string_view name) noexcept;

struct NodeGene {
    NodeId id{};
    NodeKind kind = NodeKind::hidden;
    // Ignored for input and bias nodes.
    ActivationKind activation = ActivationKind::sigmoid_steepened;

    friend bool operator==(const NodeGene&, const NodeGene&) = default;
};

struct ConnectionGene {
    Innovation innovation{};
    NodeId from{};
    NodeId to{};
    double weight = 0.0;
    bool enabled = true;

    friend bool operator==(const ConnectionGene&, const ConnectionGene&) = default;
};

inline constexpr std::size_t kAllowedKernelSizes[] = {1, 3, 5};
inline constexpr double kWeightLimit = 8.0;

struct ConvStageGene {
    std::size_t stage_index = 0;
    Matrix kernel;
    std::size_t stride = 1;
    PoolerKind pooler = PoolerKind::none;
    std::size_t pool_window = 1;
    ActivationKind activation = ActivationKind::linear;

    friend bool operator==(const ConvStageGene&, const ConvStageGene&) = default;
};

// Output shape of a single stage, or nullopt if it cannot be applied.
std::optional<Shape> stage_output_shape(const ConvStageGene& stage, Shape input) noexcept;
// Output shape after all stages; nullopt when any stage fails or the final
// map would be smaller than 1x1.
std::optional<Shape> pipeline_output_shape(std::span<const ConvStageGene> stages, Shape input) noexcept;

// Stage layout without kernel values; used by configs and tasks to describe
// the conv pipeline every genome of a run starts from.
struct ConvStageSpec {
    std::size_t kernel_height = 3;
    std::size_t kernel_width = 3;
    std::size_t stride = 1;
    PoolerKind pooler = PoolerKind::none;
    std::size_t pool_window = 1;
    ActivationKind activation = ActivationKind::linear;
    // Fixed initial kernel (row-major); drawn uniform in [-1, 1] when absent.
    std::optional<std::vector<double>> kernel;

    friend bool operator==(const ConvStageSpec&, const ConvStageSpec&) = default;
};

std::vector<ConvStageGene> make_conv_stages(std::span<const ConvStageSpec> specs, Rng& rng);

struct Genome {
    // Image dimensions the conv pipeline was validated against.
    Shape input_shape;
    std::vector<ConvStageGene> conv_stages;
    // Sorted by id.
    std::vector<NodeGene> nodes;
    // Sorted by innovation.
    std::vector<ConnectionGene> connections;
    std::optional<double> fitness;
    double adjusted_fitness = 0.0;

    std::size_t input_count() const noexcept;
    std::size_t output_count() const noexcept;
    const NodeGene* find_node(NodeId id) const noexcept;
    const ConnectionGene* find_connection(NodeId from, NodeId to) const noexcept;
};

// Genes only; fitness bookkeeping is ignored.
bool structurally_equal(const Genome& a, const Genome& b) noexcept;

// Returns a description of the first violated invariant, if any.
std::optional<std::string> find_invariant_violation(const Genome& g);
// Throws StructureError with the description from find_invariant_violation.
void validate_genome(const Genome& g);

// Historical markings. One registry is shared by the whole population; the
// same structural change always receives the same numbers, so innovations
// are stable across genomes and across generations.
class InnovationRegistry {
public:
    struct SplitRecord {
        NodeId node{};
        Innovation in_connection{};
        Innovation out_connection{};
    };

    // Makes ids 1..count available as fixed input/bias/output ids.
    void reserve_nodes(std::uint32_t count);

    Innovation connection_innovation(NodeId from, NodeId to);
    std::optional<Innovation> find_connection(NodeId from, NodeId to) const;

    // Split record for `connection`, reusing an existing one unless its node
    // is already present in `genome` (possible after crossover).
    SplitRecord split(const ConnectionGene& connection, const Genome& genome);

    std::uint32_t next_innovation() const noexcept { return next_innovation_; }
    std::uint32_t next_node_id() const noexcept { return next_node_id_; }

private:
    std::uint32_t next_innovation_ = 1;
    std::uint32_t next_node_id_ = 1;
    std::map<std::pair<NodeId, NodeId>, Innovation> connection_innovations_;
    std::map<Innovation, std::vector<SplitRecord>> split_records_;
};

struct CompatibilityCoefficients {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 0.4;
    std::size_t n_floor = 20;
    double threshold = 3.0;
};

struct NodeDefaults {
    ActivationKind hidden = ActivationKind::sigmoid_steepened;
    ActivationKind output = ActivationKind::sigmoid_steepened;
};

// Inputs + bias fully connected to outputs. Node ids: inputs 1..n, bias n+1,
// outputs after that. The input count is the flattened conv output size.
Genome new_minimal_genome(Shape input_shape, std::size_t num_outputs, std::span<const ConvStageGene> conv_seed,
                          InnovationRegistry& registry, Rng& rng, const NodeDefaults& defaults = {});

double compatibility_distance(const Genome& a, const Genome& b, const CompatibilityCoefficients& coeffs);

Genome crossover(const Genome& fitter, const Genome& other, Rng& rng, double disable_prob = 0.75);

Genome mutate_add_connection(const Genome& g, InnovationRegistry& registry, Rng& rng);
Genome mutate_add_node(const Genome& g, InnovationRegistry& registry, Rng& rng,
                       ActivationKind hidden_activation = ActivationKind::sigmoid_steepened);

struct WeightMutation {
    double perturb_prob = 0.9;
    double perturb_sigma = 1.0;
    double reset_prob = 0.1;
};

double clamp_weight(double w) noexcept;
Genome mutate_weights(const Genome& g, const WeightMutation& params, Rng& rng);

struct ConvMutation {
    double kernel_sigma = 0.05;
    double swap_pooler_prob = 0.01;
    double swap_activation_prob = 0.01;
};

Genome mutate_conv(const Genome& g, const ConvMutation& params, Rng& rng);

} // namespace neuroevo
