#include "neuroevo/config.hpp"

#include <cmath>
#include <string>

#include "neuroevo/error.hpp"

namespace neuroevo {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) {
        throw ConfigError(std::string(field) + ": " + what);
    }
}

bool probability(double p) {
    return std::isfinite(p) && p >= 0.0 && p <= 1.0;
}

} // namespace

void EvolutionConfig::validate() const {
    require(population_size >= 2, "population_size", "must be >= 2");
    require(std::isfinite(compatibility.c1) && compatibility.c1 >= 0.0, "compatibility.c1", "must be >= 0");
    require(std::isfinite(compatibility.c2) && compatibility.c2 >= 0.0, "compatibility.c2", "must be >= 0");
    require(std::isfinite(compatibility.c3) && compatibility.c3 >= 0.0, "compatibility.c3", "must be >= 0");
    require(std::isfinite(compatibility.threshold) && compatibility.threshold > 0.0, "compatibility.threshold",
            "must be > 0");

    const auto& m = mutation;
    require(probability(m.weight_mutation_rate), "mutation.weight_mutation_rate", "must be a probability");
    require(probability(m.weights.perturb_prob), "mutation.weight_perturb_prob", "must be a probability");
    require(probability(m.weights.reset_prob), "mutation.weight_reset_prob", "must be a probability");
    require(m.weights.perturb_prob + m.weights.reset_prob <= 1.0 + 1e-12, "mutation.weight_reset_prob",
            "perturb and reset probabilities must sum to at most 1");
    require(std::isfinite(m.weights.perturb_sigma) && m.weights.perturb_sigma >= 0.0,
            "mutation.weight_perturb_sigma", "must be >= 0");
    require(probability(m.add_connection_rate), "mutation.add_connection_rate", "must be a probability");
    require(probability(m.add_node_rate), "mutation.add_node_rate", "must be a probability");
    require(probability(m.conv_mutation_rate), "mutation.conv_mutation_rate", "must be a probability");
    require(std::isfinite(m.conv.kernel_sigma) && m.conv.kernel_sigma >= 0.0, "mutation.kernel_sigma",
            "must be >= 0");
    require(probability(m.conv.swap_pooler_prob), "mutation.swap_pooler_prob", "must be a probability");
    require(probability(m.conv.swap_activation_prob), "mutation.swap_activation_prob", "must be a probability");
    require(probability(m.disable_inherited_prob), "mutation.disable_inherited_prob", "must be a probability");

    require(probability(interspecies_mating_prob), "interspecies_mating_prob", "must be a probability");
    require(survival_fraction > 0.0 && survival_fraction <= 1.0, "survival_fraction", "must lie in (0, 1]");
    require(stagnation_limit >= 1, "stagnation_limit", "must be >= 1");
    require(!fitness_target || std::isfinite(*fitness_target), "fitness_target", "must be finite");

    require(task.bars_size >= 4, "task.bars_size", "must be >= 4");
    require(task.bars_samples_per_class >= 1, "task.bars_samples_per_class", "must be >= 1");
    require(task.bars_noise >= 0.0 && task.bars_noise <= 0.5, "task.bars_noise", "must lie in [0, 0.5]");
    require(task.image_width >= 1 && task.image_height >= 1, "task.image_width", "image size must be >= 1");
}

} // namespace neuroevo
