#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "neuroevo/config.hpp"
#include "neuroevo/genome.hpp"

namespace neuroevo {

struct FitnessStats {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;

    friend bool operator==(const FitnessStats&, const FitnessStats&) = default;
};

struct SpeciesSnapshot {
    std::uint32_t id = 0;
    std::size_t size = 0;
    double best_fitness = 0.0;
    double best_fitness_ever = 0.0;
    std::size_t stagnation = 0;
    Genome representative;
    Genome champion;
    // Empty when the archive is size-gated.
    std::vector<Genome> members;
};

struct GenerationReport {
    std::size_t generation = 0;
    std::vector<SpeciesSnapshot> species;
    Genome champion;
    std::uint32_t champion_species = 0;
    FitnessStats fitness;
    double best_fitness_ever = 0.0;
};

struct TaskInfo {
    std::string name;
    Shape input_shape;
    std::size_t output_count = 1;
    std::optional<double> fitness_target;
};

inline constexpr int kFormatVersion = 1;

struct HistoryArchive {
    int format_version = kFormatVersion;
    EvolutionConfig config;
    TaskInfo task;
    bool members_included = false;
    std::vector<GenerationReport> generations;
};

} // namespace neuroevo
