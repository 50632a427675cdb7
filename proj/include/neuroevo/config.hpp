#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "neuroevo/genome.hpp"

namespace neuroevo {

struct MutationRates {
    // Probability that an offspring's connection weights are mutated at all;
    // `weights` then applies per connection.
    double weight_mutation_rate = 0.8;
    WeightMutation weights;
    double add_connection_rate = 0.05;
    double add_node_rate = 0.03;
    double conv_mutation_rate = 0.8;
    ConvMutation conv;
    // Chance a gene disabled in either parent stays disabled in the child.
    double disable_inherited_prob = 0.75;
};

// Task-specific knobs used by the CLI to build a FitnessTask.
struct TaskSettings {
    std::size_t bars_size = 16;
    std::size_t bars_samples_per_class = 40;
    double bars_noise = 0.2;
    std::uint64_t bars_seed = 1;
    std::size_t image_width = 32;
    std::size_t image_height = 32;
};

struct EvolutionConfig {
    std::size_t population_size = 150;
    CompatibilityCoefficients compatibility;
    MutationRates mutation;
    std::size_t elitism_count = 1;
    // Per-species elites are only kept for species at least this large. The
    // overall champion is always kept when elitism_count >= 1.
    std::size_t elitism_min_species_size = 5;
    std::size_t stagnation_limit = 15;
    double interspecies_mating_prob = 0.001;
    double survival_fraction = 0.2;
    std::size_t max_generations = 150;
    // Overrides the task's own target when set.
    std::optional<double> fitness_target;
    std::uint64_t seed = 1;
    NodeDefaults activations;
    // Overrides the task's conv layout when set.
    std::optional<std::vector<ConvStageSpec>> conv_stages;
    // Member genomes are archived only while population_size *
    // (max_generations + 1) stays within this many entries.
    std::size_t archive_member_cap = 50000;
    TaskSettings task;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

} // namespace neuroevo
