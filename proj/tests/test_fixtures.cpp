#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "neuroevo/cli.hpp"
#include "neuroevo/persistence.hpp"
#include "support/generators.hpp"

using namespace neuroevo;

namespace {

const std::filesystem::path kFixtures = NEUROEVO_SOURCE_DIR "/fixtures";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void check_fixture(const std::string& name, const std::string& task, std::size_t generations) {
    const auto dir = kFixtures / name;
    const std::string history_text = slurp(dir / "history.json");
    REQUIRE_FALSE(history_text.empty());
    CHECK_NOTHROW(validate_history_document(nlohmann::json::parse(history_text)));
    const auto history = import_history(dir / "history.json");
    CHECK(history.generations.size() == generations);
    CHECK(history.members_included);
    CHECK(serialize_history(history) == history_text);
    CHECK(serialize_genome(load_genome(dir / "champion.json")) == slurp(dir / "champion.json"));

    // The fixture must stay reproducible from its config with the current engine.
    gen::TempDir out("fixture-" + name);
    const std::string config = (dir / "config.json").string();
    const std::string out_dir = out.path().string();
    std::vector<const char*> argv{"neuroevo", "train", "--config", config.c_str(), "--task", task.c_str(),
                                  "--out", out_dir.c_str(), "--workers", "1"};
    std::ostringstream sink;
    ::setenv("NEUROEVO_LOG", "quiet", 1);
    cli::run(static_cast<int>(argv.size()), argv.data(), sink, sink);
    CHECK(slurp(out / "history.json") == history_text);
    CHECK(slurp(out / "champion.json") == slurp(dir / "champion.json"));
}

} // namespace

TEST_SUITE("fixtures") {

TEST_CASE("xor golden archive") {
    check_fixture("golden", "xor", 10);
}

TEST_CASE("bars golden archive with a conv stage") {
    check_fixture("golden-bars", "bars", 6);
    const auto history = import_history(kFixtures / "golden-bars" / "history.json");
    CHECK(history.generations.front().champion.conv_stages.size() == 1);
    CHECK(history.task.input_shape == Shape{8, 8});
}

}
