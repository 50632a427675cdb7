#include "neuroevo/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "neuroevo/error.hpp"
#include "neuroevo/phenotype.hpp"

namespace neuroevo {

namespace {

double fitness_of(const Genome& g) {
    return g.fitness.value_or(0.0);
}

// Member indices by descending raw fitness, ties in population order.
std::vector<std::size_t> rank_members(const Species& s) {
    std::vector<std::size_t> order(s.members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
        return fitness_of(s.members[a]) > fitness_of(s.members[b]);
    });
    return order;
}

std::size_t parent_pool_size(const Species& s, double survival_fraction) {
    const auto n = static_cast<std::size_t>(std::ceil(survival_fraction * static_cast<double>(s.members.size())));
    return std::clamp<std::size_t>(n, 1, s.members.size());
}

// Species holding the highest-fitness genome; first in order on ties.
std::size_t champion_species_index(const std::vector<Species>& species) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < species.size(); ++i) {
        if (species[i].best_fitness() > species[best].best_fitness()) {
            best = i;
        }
    }
    return best;
}

Genome mutate_offspring(Genome child, InnovationRegistry& registry, const EvolutionConfig& config, Rng& rng) {
    const auto& m = config.mutation;
    if (rng.bernoulli(m.weight_mutation_rate)) {
        child = mutate_weights(child, m.weights, rng);
    }
    if (rng.bernoulli(m.conv_mutation_rate)) {
        child = mutate_conv(child, m.conv, rng);
    }
    if (rng.bernoulli(m.add_node_rate)) {
        child = mutate_add_node(child, registry, rng, config.activations.hidden);
    }
    if (rng.bernoulli(m.add_connection_rate)) {
        child = mutate_add_connection(child, registry, rng);
    }
    return child;
}

FitnessStats fitness_stats(const std::vector<Genome>& population) {
    FitnessStats stats{fitness_of(population.front()), 0.0, fitness_of(population.front())};
    double sum = 0.0;
    for (const auto& g : population) {
        const double f = fitness_of(g);
        stats.min = std::min(stats.min, f);
        stats.max = std::max(stats.max, f);
        sum += f;
    }
    stats.mean = sum / static_cast<double>(population.size());
    return stats;
}

} // namespace

double Species::best_fitness() const {
    double best = 0.0;
    for (const auto& m : members) {
        best = std::max(best, fitness_of(m));
    }
    return best;
}

std::size_t Species::best_member() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (fitness_of(members[i]) > fitness_of(members[best])) {
            best = i;
        }
    }
    return best;
}

std::vector<Species> speciate(std::vector<Genome> population, const std::vector<Species>& previous,
                              const CompatibilityCoefficients& coeffs, std::uint32_t& next_species_id) {
    std::vector<Species> species;
    species.reserve(previous.size());
    for (const auto& p : previous) {
        Species s;
        s.id = p.id;
        s.representative = p.representative;
        s.best_fitness_ever = p.best_fitness_ever;
        s.stagnation = p.stagnation;
        species.push_back(std::move(s));
    }
    std::ranges::sort(species, {}, &Species::id);
    for (const auto& s : species) {
        next_species_id = std::max(next_species_id, s.id + 1);
    }

    for (auto& genome : population) {
        Species* home = nullptr;
        for (auto& s : species) {
            if (compatibility_distance(genome, s.representative, coeffs) < coeffs.threshold) {
                home = &s;
                break;
            }
        }
        if (home == nullptr) {
            Species founded;
            founded.id = next_species_id++;
            founded.representative = genome;
            species.push_back(std::move(founded));
            home = &species.back();
        }
        home->members.push_back(std::move(genome));
    }
    std::erase_if(species, [](const Species& s) { return s.members.empty(); });
    return species;
}

void update_stagnation(std::vector<Species>& species) {
    for (auto& s : species) {
        const double best = s.best_fitness();
        if (best > s.best_fitness_ever) {
            s.best_fitness_ever = best;
            s.stagnation = 0;
        } else {
            ++s.stagnation;
        }
    }
}

void share_fitness(std::vector<Species>& species) {
    for (auto& s : species) {
        const auto size = static_cast<double>(s.members.size());
        for (auto& m : s.members) {
            if (!m.fitness) {
                throw UsageError("species " + std::to_string(s.id) + " has an unevaluated member");
            }
            m.adjusted_fitness = *m.fitness / size;
        }
    }
}

std::vector<std::size_t> allocate_offspring(std::vector<Species>& species, std::size_t population_size,
                                            std::size_t stagnation_limit) {
    std::vector<std::size_t> counts(species.size(), 0);
    if (species.empty()) {
        return counts;
    }
    const std::size_t champion = champion_species_index(species);

    std::vector<char> eligible(species.size(), 0);
    bool any_fresh = false;
    for (std::size_t i = 0; i < species.size(); ++i) {
        const bool fresh = species[i].stagnation < stagnation_limit;
        any_fresh = any_fresh || fresh;
        eligible[i] = fresh || i == champion;
    }
    if (!any_fresh) {
        std::ranges::fill(eligible, 0);
        eligible[champion] = 1;
        species[champion].stagnation = 0;
    }

    // Each species' share is the sum of its adjusted fitness, i.e. its mean
    // raw fitness.
    std::vector<double> share(species.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < species.size(); ++i) {
        if (!eligible[i]) {
            continue;
        }
        for (const auto& m : species[i].members) {
            share[i] += m.adjusted_fitness;
        }
        total += share[i];
    }
    if (!(total > 0.0)) {
        for (std::size_t i = 0; i < species.size(); ++i) {
            share[i] = eligible[i] ? 1.0 : 0.0;
        }
        total = static_cast<double>(std::ranges::count(eligible, 1));
    }

    std::size_t assigned = 0;
    for (std::size_t i = 0; i < species.size(); ++i) {
        if (eligible[i]) {
            counts[i] = static_cast<std::size_t>(std::llround(static_cast<double>(population_size) * (share[i] / total)));
            assigned += counts[i];
        }
    }

    // Repair order: highest share first, lower index on ties.
    std::vector<std::size_t> order(species.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return share[a] > share[b]; });

    if (counts[champion] == 0 && population_size > 0) {
        counts[champion] = 1;
        ++assigned;
    }
    while (assigned < population_size) {
        ++counts[order.front()];
        ++assigned;
    }
    while (assigned > population_size) {
        for (auto i : order) {
            const std::size_t floor = i == champion ? 1 : 0;
            if (counts[i] > floor) {
                --counts[i];
                --assigned;
                break;
            }
        }
    }
    return counts;
}

std::vector<Genome> reproduce(const std::vector<Species>& species, const std::vector<std::size_t>& allocation,
                              InnovationRegistry& registry, const EvolutionConfig& config, Rng& rng) {
    std::vector<Genome> next;
    next.reserve(config.population_size);
    if (species.empty()) {
        return next;
    }
    const std::size_t champion = champion_species_index(species);

    std::vector<std::vector<std::size_t>> ranked;
    ranked.reserve(species.size());
    for (const auto& s : species) {
        ranked.push_back(rank_members(s));
    }

    for (std::size_t si = 0; si < species.size(); ++si) {
        const auto& s = species[si];
        const std::size_t quota = allocation[si];
        if (quota == 0) {
            continue;
        }
        std::vector<std::size_t> elites;
        if (config.elitism_count >= 1 && si == champion) {
            elites.push_back(ranked[si].front());
        }
        if (s.members.size() >= config.elitism_min_species_size) {
            for (std::size_t k = 0; k < std::min(config.elitism_count, s.members.size()); ++k) {
                if (std::ranges::find(elites, ranked[si][k]) == elites.end()) {
                    elites.push_back(ranked[si][k]);
                }
            }
        }
        std::size_t produced = 0;
        for (auto e : elites) {
            if (produced == quota) {
                break;
            }
            next.push_back(s.members[e]);
            ++produced;
        }

        const std::size_t pool = parent_pool_size(s, config.survival_fraction);
        while (produced < quota) {
            const Genome* a = &s.members[ranked[si][rng.index(pool)]];
            const Genome* b = nullptr;
            if (species.size() > 1 && rng.bernoulli(config.interspecies_mating_prob)) {
                std::size_t other = rng.index(species.size() - 1);
                if (other >= si) {
                    ++other;
                }
                const auto other_pool = parent_pool_size(species[other], config.survival_fraction);
                b = &species[other].members[ranked[other][rng.index(other_pool)]];
            } else {
                b = &s.members[ranked[si][rng.index(pool)]];
            }
            if (fitness_of(*b) > fitness_of(*a)) {
                std::swap(a, b);
            }
            Genome child = crossover(*a, *b, rng, config.mutation.disable_inherited_prob);
            child = mutate_offspring(std::move(child), registry, config, rng);
            child.fitness.reset();
            child.adjusted_fitness = 0.0;
            next.push_back(std::move(child));
            ++produced;
        }
    }
    return next;
}

void choose_representatives(std::vector<Species>& species, Rng& rng) {
    for (auto& s : species) {
        s.representative = s.members[rng.index(s.members.size())];
    }
}

void evaluate_population(std::vector<Genome>& population, const FitnessTask& task, std::size_t workers,
                         std::size_t generation) {
    std::vector<std::exception_ptr> errors(population.size());
    std::atomic<std::size_t> cursor{0};

    auto work = [&] {
        for (std::size_t i = cursor++; i < population.size(); i = cursor++) {
            try {
                const auto phenotype = compile(population[i], task.input_shape.width, task.input_shape.height);
                const double f = task.fitness(phenotype);
                if (!std::isfinite(f) || f < 0.0) {
                    throw EvaluationError("fitness " + std::to_string(f) + " is not a finite non-negative value");
                }
                population[i].fitness = f;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = std::min(workers, population.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) {
            continue;
        }
        const std::string who = "generation " + std::to_string(generation) + ", genome #" + std::to_string(i);
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw EvaluationError(who + ": " + e.what());
        }
    }
}

RunResult evolve(const FitnessTask& task, const EvolutionConfig& config, const RunOptions& options) {
    config.validate();
    if (!task.fitness) {
        throw ConfigError("task '" + task.name + "' has no fitness function");
    }
    const auto target = config.fitness_target ? config.fitness_target : task.fitness_target;
    const auto& layout = config.conv_stages ? *config.conv_stages : task.conv_layout;

    Rng rng(config.seed);
    InnovationRegistry registry;
    std::vector<Genome> population;
    population.reserve(config.population_size);
    for (std::size_t i = 0; i < config.population_size; ++i) {
        const auto stages = make_conv_stages(layout, rng);
        population.push_back(
            new_minimal_genome(task.input_shape, task.output_count, stages, registry, rng, config.activations));
    }

    RunResult result;
    auto& history = result.history;
    history.config = config;
    history.task = {task.name, task.input_shape, task.output_count, target};
    history.members_included =
        config.population_size * (config.max_generations + 1) <= config.archive_member_cap;

    std::vector<Species> species;
    std::uint32_t next_species_id = 1;
    std::optional<Genome> best_ever;

    for (std::size_t generation = 0;; ++generation) {
        evaluate_population(population, task, options.workers, generation);

        std::size_t champion_index = 0;
        for (std::size_t i = 1; i < population.size(); ++i) {
            if (fitness_of(population[i]) > fitness_of(population[champion_index])) {
                champion_index = i;
            }
        }
        if (!best_ever || fitness_of(population[champion_index]) > fitness_of(*best_ever)) {
            best_ever = population[champion_index];
        }
        const auto stats = fitness_stats(population);
        const Genome generation_champion = population[champion_index];

        species = speciate(std::move(population), species, config.compatibility, next_species_id);
        update_stagnation(species);

        GenerationReport report;
        report.generation = generation;
        report.champion = generation_champion;
        report.fitness = stats;
        report.best_fitness_ever = fitness_of(*best_ever);
        for (const auto& s : species) {
            SpeciesSnapshot snap;
            snap.id = s.id;
            snap.size = s.members.size();
            snap.best_fitness = s.best_fitness();
            snap.best_fitness_ever = s.best_fitness_ever;
            snap.stagnation = s.stagnation;
            snap.representative = s.representative;
            snap.champion = s.members[s.best_member()];
            if (history.members_included) {
                snap.members = s.members;
            }
            if (report.champion_species == 0 && structurally_equal(snap.champion, generation_champion) &&
                fitness_of(snap.champion) == stats.max) {
                report.champion_species = s.id;
            }
            report.species.push_back(std::move(snap));
        }
        if (options.on_generation) {
            options.on_generation(report);
        }
        history.generations.push_back(std::move(report));

        if (target && stats.max >= *target) {
            result.target_reached = true;
            break;
        }
        if (generation >= config.max_generations) {
            break;
        }

        share_fitness(species);
        const auto allocation = allocate_offspring(species, config.population_size, config.stagnation_limit);
        population = reproduce(species, allocation, registry, config, rng);

        std::vector<Species> surviving;
        for (std::size_t i = 0; i < species.size(); ++i) {
            if (allocation[i] > 0) {
                surviving.push_back(std::move(species[i]));
            }
        }
        species = std::move(surviving);
        choose_representatives(species, rng);
    }

    result.champion = *best_ever;
    return result;
}

} // namespace neuroevo
