#include <doctest.h>

#include <cmath>
#include <thread>

#include "neuroevo/error.hpp"
#include "neuroevo/phenotype.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace neuroevo;

namespace {

oracle::Grid grid_of(const ImageMatrix& img) {
    return oracle::to_grid(img.matrix());
}

Genome single_input(ActivationKind out_activation) {
    Genome g;
    g.input_shape = {1, 1};
    g.nodes = {{NodeId{1}, NodeKind::input, ActivationKind::linear},
               {NodeId{2}, NodeKind::bias, ActivationKind::linear},
               {NodeId{3}, NodeKind::output, out_activation}};
    return g;
}

} // namespace

TEST_SUITE("phenotype") {

TEST_CASE("evaluation order") {
    InnovationRegistry reg;
    Rng rng(1);
    const Genome minimal = new_minimal_genome({1, 2}, 1, {}, reg, rng);
    CHECK(compile(minimal).eval_order() == std::vector<NodeId>{NodeId{4}});

    Genome g = single_input(ActivationKind::sigmoid_steepened);
    g.nodes.push_back({NodeId{4}, NodeKind::hidden, ActivationKind::sigmoid_steepened});
    g.connections = {{Innovation{1}, NodeId{1}, NodeId{4}, 1.0, true}, {Innovation{2}, NodeId{4}, NodeId{3}, 1.0, true}};
    CHECK(compile(g).eval_order() == std::vector<NodeId>{NodeId{4}, NodeId{3}});
}

TEST_CASE("zero weights give one half on a sigmoid output") {
    Rng rng(2);
    InnovationRegistry reg;
    Genome g = new_minimal_genome({4, 4}, 1, {}, reg, rng);
    for (auto& c : g.connections) {
        c.weight = 0.0;
    }
    const auto p = compile(g);
    for (int i = 0; i < 20; ++i) {
        CHECK(p.forward(gen::image(rng, {4, 4}))[0] == 0.5);
    }
}

TEST_CASE("identity stage passes the pixel through") {
    Genome g = single_input(ActivationKind::linear);
    ConvStageGene identity;
    identity.kernel = Matrix(1, 1, 1.0);
    g.conv_stages = {identity};
    g.connections = {{Innovation{1}, NodeId{1}, NodeId{3}, 1.0, true}, {Innovation{2}, NodeId{2}, NodeId{3}, 0.0, true}};
    const auto p = compile(g);
    for (double v : {0.0, 0.25, 0.5019607843137255, 1.0}) {
        CHECK(p.forward(ImageMatrix(1, 1, {v}))[0] == v);
    }
}

TEST_CASE("disabled connections do not contribute") {
    Genome g = single_input(ActivationKind::linear);
    g.connections = {{Innovation{1}, NodeId{1}, NodeId{3}, 2.0, false}, {Innovation{2}, NodeId{2}, NodeId{3}, 0.25, true}};
    CHECK(compile(g).forward(ImageMatrix(1, 1, {1.0}))[0] == 0.25);
}

TEST_CASE("shape and structure errors") {
    Rng rng(3);
    InnovationRegistry reg;
    const Genome g = new_minimal_genome({3, 3}, 1, {}, reg, rng);
    CHECK_THROWS_AS(compile(g, 4, 4), ConfigError);
    const auto p = compile(g);
    try {
        p.forward(gen::image(rng, {3, 4}));
        FAIL("expected a shape error");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("4x3") != std::string::npos);
        CHECK(msg.find("3x3") != std::string::npos);
    }
    CHECK_THROWS_AS(ImageMatrix(1, 1, {1.5}), ShapeError);

    Genome cyc = single_input(ActivationKind::linear);
    cyc.nodes.push_back({NodeId{4}, NodeKind::hidden, ActivationKind::linear});
    cyc.nodes.push_back({NodeId{5}, NodeKind::hidden, ActivationKind::linear});
    cyc.connections = {{Innovation{1}, NodeId{4}, NodeId{5}, 1.0, true}, {Innovation{2}, NodeId{5}, NodeId{4}, 1.0, true}};
    CHECK_THROWS_AS(compile(cyc), StructureError);
}

TEST_CASE("twenty-node genome matches the relaxation oracle") {
    Rng rng(20);
    InnovationRegistry reg;
    int checked = 0;
    while (checked < 25) {
        gen::GenomeOptions options;
        options.structural_steps = 60;
        Genome g = gen::genome(rng, reg, options);
        while (g.nodes.size() < 20) {
            g = mutate_add_node(g, reg, rng, kAllActivations[rng.index(kAllActivations.size())]);
            g = mutate_add_connection(g, reg, rng);
        }
        const auto p = compile(g);
        const auto img = gen::image(rng, g.input_shape);
        const auto got = p.forward(img);
        const auto want = oracle::forward(g, grid_of(img));
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(std::abs(got[i] - want[i]) <= 1e-12);
        }
        ++checked;
    }
}

TEST_CASE("forward matches the oracle on random genomes and images") {
    Rng rng(1000);
    InnovationRegistry reg;
    for (int i = 0; i < 300; ++i) {
        const Genome g = gen::genome(rng, reg);
        const auto p = compile(g);
        REQUIRE(p.input_count() == g.input_count());
        const auto img = gen::image(rng, g.input_shape);
        const auto got = p.forward(img);
        const auto want = oracle::forward(g, grid_of(img));
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            REQUIRE(std::abs(got[k] - want[k]) <= 1e-9);
        }
    }
}

TEST_CASE("forward is pure across calls and threads") {
    Rng rng(55);
    InnovationRegistry reg;
    gen::GenomeOptions options;
    options.structural_steps = 30;
    const Genome g = gen::genome(rng, reg, options);
    const auto p = compile(g);
    const auto img = gen::image(rng, g.input_shape);
    const auto first = p.forward(img);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(p.forward(img) == first);
    }
    std::vector<std::vector<double>> results(4);
    {
        std::vector<std::jthread> threads;
        for (auto& r : results) {
            threads.emplace_back([&] {
                for (int i = 0; i < 50; ++i) {
                    r = p.forward(img);
                }
            });
        }
    }
    for (const auto& r : results) {
        CHECK(r == first);
    }
}

}
