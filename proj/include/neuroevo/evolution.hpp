#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "neuroevo/config.hpp"
#include "neuroevo/genome.hpp"
#include "neuroevo/history.hpp"
#include "neuroevo/tasks.hpp"

namespace neuroevo {

struct Species {
    std::uint32_t id = 0;
    Genome representative;
    std::vector<Genome> members;
    double best_fitness_ever = -std::numeric_limits<double>::infinity();
    std::size_t stagnation = 0;

    // Highest member fitness (unevaluated members count as 0).
    double best_fitness() const;
    std::size_t best_member() const;
};

// Each genome joins the first species (ascending id, previous generation's
// species first) whose representative lies within the threshold, otherwise
// founds a new one. Empty species are dropped. New ids come from
// `next_species_id`, which is advanced.
std::vector<Species> speciate(std::vector<Genome> population, const std::vector<Species>& previous,
                              const CompatibilityCoefficients& coeffs, std::uint32_t& next_species_id);

// Updates best_fitness_ever / stagnation from the members' fitness.
void update_stagnation(std::vector<Species>& species);

// adjusted_fitness = fitness / species size. Throws UsageError if a member
// has not been evaluated.
void share_fitness(std::vector<Species>& species);

// Offspring count per species, summing to population_size. Stagnant species
// get nothing unless they hold the best genome; if every species is stagnant
// only the champion's species survives and its stagnation is reset.
std::vector<std::size_t> allocate_offspring(std::vector<Species>& species, std::size_t population_size,
                                            std::size_t stagnation_limit = std::numeric_limits<std::size_t>::max());

std::vector<Genome> reproduce(const std::vector<Species>& species, const std::vector<std::size_t>& allocation,
                              InnovationRegistry& registry, const EvolutionConfig& config, Rng& rng);

void choose_representatives(std::vector<Species>& species, Rng& rng);

// Evaluates every genome (in parallel when workers > 1). Throws
// EvaluationError naming the first failing genome by index.
void evaluate_population(std::vector<Genome>& population, const FitnessTask& task, std::size_t workers,
                         std::size_t generation = 0);

struct RunOptions {
    // 0 selects std::thread::hardware_concurrency().
    std::size_t workers = 0;
    std::function<void(const GenerationReport&)> on_generation;
};

struct RunResult {
    Genome champion;
    HistoryArchive history;
    bool target_reached = false;
};

RunResult evolve(const FitnessTask& task, const EvolutionConfig& config, const RunOptions& options = {});

} // namespace neuroevo
