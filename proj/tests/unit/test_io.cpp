#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "form/io.hpp"
#include "form/rng.hpp"

using namespace form;

#ifndef FORM_SOURCE_DIR
#define FORM_SOURCE_DIR "."
#endif

namespace {

SceneFile sample_scene_file() {
    SceneFile f;
    f.scene.table = {1.8, 1.0};
    f.scene.instruction = "Could you please arrange a dining table for two people?";
    f.scene.objects = {{"serving_plate_1", "serving_plate", 0.27, 0.27},
                       {"fork_1", "fork", 0.03, 0.19},
                       {"knife_1", "knife", 0.025, 0.21}};
    Rng rng(3);
    std::vector<Pose> poses;
    for (int i = 0; i < 3; ++i) poses.push_back({uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, -kPi, kPi)});
    f.scene.poses = poses;
    f.family = TaskFamily::dining_table;
    GroundGraph g;
    g.add({RelationId::left_of, {"fork_1", "serving_plate_1"}});
    g.add({RelationId::near_front_edge, {"serving_plate_1"}});
    f.reference = g;
    return f;
}

}  // namespace

TEST_CASE("scene files round-trip exactly") {
    const SceneFile f = sample_scene_file();
    const std::string text = serialize_scene(f);
    const SceneFile g = parse_scene(text);
    CHECK(g.scene.table.length == f.scene.table.length);
    CHECK(g.scene.table.width == f.scene.table.width);
    CHECK(g.scene.instruction == f.scene.instruction);
    CHECK(g.family == f.family);
    CHECK(g.reference == f.reference);
    REQUIRE(g.scene.objects.size() == f.scene.objects.size());
    for (size_t i = 0; i < f.scene.objects.size(); ++i) {
        CHECK(g.scene.objects[i].name == f.scene.objects[i].name);
        CHECK(g.scene.objects[i].category == f.scene.objects[i].category);
        CHECK(g.scene.objects[i].length == f.scene.objects[i].length);
        CHECK(g.scene.objects[i].width == f.scene.objects[i].width);
    }
    CHECK(g.scene.poses == f.scene.poses);
    CHECK(serialize_scene(g) == text);
}

TEST_CASE("scene validation") {
    const std::string table = R"("table": {"length": 1.0, "width": 1.0})";
    CHECK_THROWS_AS(parse_scene("{"), InvalidInput);
    CHECK_THROWS_AS(parse_scene(R"({"objects": []})"), InvalidInput);
    // Poses must be present for every object or for none.
    CHECK_THROWS_AS(parse_scene("{" + table +
                                R"(, "objects": [{"name": "a", "length": 0.1, "width": 0.1, "pose": {"x": 0.5, "y": 0.5, "theta": 0}},
                                                 {"name": "b", "length": 0.1, "width": 0.1}]})"),
                    InvalidInput);
    CHECK_THROWS_AS(parse_scene("{" + table +
                                R"(, "objects": [{"name": "a", "length": 0.1, "width": 0.1},
                                                 {"name": "a", "length": 0.1, "width": 0.1}]})"),
                    InvalidInput);
    CHECK_THROWS_AS(parse_scene("{" + table + R"(, "objects": [{"name": "a", "length": -0.1, "width": 0.1}]})"),
                    InvalidInput);
    CHECK_THROWS_AS(parse_scene("{" + table + R"(, "objects": [], "colour": "red"})"), InvalidInput);
    CHECK_THROWS_AS(parse_scene("{" + table + R"(, "objects": [], "family": "kitchen"})"), InvalidInput);
    CHECK_THROWS_AS(parse_scene("{" + table +
                                R"(, "objects": [{"name": "a", "length": 0.1, "width": 0.1}],
                                   "reference_graph": [["left_of", "a", "ghost"]]})"),
                    InvalidInput);
    const SceneFile ok = parse_scene("{" + table + R"(, "objects": [{"name": "cup_2", "length": 0.1, "width": 0.1}]})");
    CHECK(ok.scene.objects[0].category == "cup");
    CHECK_FALSE(ok.scene.poses.has_value());
}

TEST_CASE("graph files round-trip") {
    GroundGraph g;
    g.add({RelationId::left_of, {"a", "b"}});
    g.add({RelationId::regular_grid, {"a", "b", "c", "d"}});
    g.add({RelationId::vertical_line_symmetry, {"c", "a", "b"}});
    const std::string text = serialize_graph(g);
    CHECK(parse_graph(text) == g);
    CHECK(serialize_graph(parse_graph(text)) == text);
    CHECK(parse_graph("[]").empty());
    CHECK(parse_graph(R"([["central_table", "a"]])").atoms()[0].relation == RelationId::centered_table);
    CHECK_THROWS_AS(parse_graph(R"([["floats_above", "a"]])"), InvalidInput);
    CHECK_THROWS_AS(parse_graph(R"([["left_of"]])"), InvalidInput);
    CHECK_THROWS_AS(parse_graph(R"({"a": 1})"), InvalidInput);
}

TEST_CASE("result files round-trip and keep the best mark") {
    SolveResult r;
    r.names = {"a", "b"};
    r.samples = {{{{0.1, 0.2, 0.3}, {0.4, 0.5, -0.6}}, 0.5, 1.0}, {{{1.0 / 3, 0.25, kPi}, {0.7, 0.8, 0.0}}, 1.0, 0.5}};
    r.best = select_best(r.samples);
    r.warnings = {"note"};
    CHECK(r.best == 1);
    const std::string text = serialize_result(r);
    const SolveResult back = parse_result(text);
    CHECK(back.names == r.names);
    CHECK(back.best == r.best);
    CHECK(back.warnings == r.warnings);
    REQUIRE(back.samples.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(back.samples[i].poses == r.samples[i].poses);
        CHECK(back.samples[i].feasibility == r.samples[i].feasibility);
        CHECK(back.samples[i].satisfaction == r.samples[i].satisfaction);
    }
    CHECK(serialize_result(back) == text);
    CHECK_THROWS_AS(parse_result(R"({"objects": ["a"], "samples": [], "best": 0})"), InvalidInput);
}

TEST_CASE("best sample is chosen lexicographically with ties to the first") {
    auto s = [](double f, double sat) { return ScoredSample{{}, f, sat}; };
    CHECK(select_best({s(0.9, 1.0), s(1.0, 0.1)}) == 1);
    CHECK(select_best({s(1.0, 0.5), s(1.0, 0.8), s(0.9, 1.0)}) == 1);
    CHECK(select_best({s(1.0, 0.8), s(1.0, 0.8)}) == 0);
}

TEST_CASE("configuration parsing") {
    const Config c = parse_config(R"(
# comment
[thresholds]
edge_near = 0.12
[schedule]
steps = 150
posterior_variance = beta
[sampler]
mcmc_steps = 7
samples = 3
seed = 42
scene_terms = false
[analytic]
stiffness = 10
[training]
epochs = 5
batch = 32
lr = 0.01
optimizer = sgd
[llm]
url = http://localhost:9/v1/chat/completions
attempts = 2
max_iterations = 2
)");
    CHECK(c.thresholds.edge_near == 0.12);
    CHECK(c.analytic.thresholds.edge_near == 0.12);
    CHECK(c.schedule_steps == 150);
    CHECK(c.variance == PosteriorVariance::beta);
    CHECK(c.sampler.variance == PosteriorVariance::beta);
    CHECK(c.sampler.mcmc_steps == 7);
    CHECK(c.sampler.samples == 3);
    CHECK(c.sampler.seed == 42);
    CHECK_FALSE(c.sampler.scene_terms);
    CHECK(c.analytic.stiffness == 10);
    CHECK(c.training.epochs == 5);
    CHECK(c.training.batch_size == 32);
    CHECK(c.training.learning_rate == 0.01);
    CHECK(c.training.optimizer == Optimizer::sgd);
    CHECK(c.llm.url == "http://localhost:9/v1/chat/completions");
    CHECK(c.llm.attempts == 2);
    CHECK(c.reflection_iterations == 2);

    CHECK_THROWS_AS(parse_config("[sampler]\nmcmc_stepz = 3\n"), InvalidInput);
    CHECK_THROWS_AS(parse_config("[render]\nwidth = 3\n"), InvalidInput);
    CHECK_THROWS_AS(parse_config("[sampler]\nmcmc_steps = three\n"), InvalidInput);
    CHECK_THROWS_AS(parse_config("[sampler]\nmcmc_steps = 0\n"), InvalidInput);
    CHECK_THROWS_AS(parse_config("mcmc_steps = 3\n"), InvalidInput);
    CHECK_THROWS_AS(parse_config("[sampler\n"), InvalidInput);
    CHECK_THROWS_AS(parse_config("[sampler]\njust words\n"), InvalidInput);
    CHECK_THROWS_AS(read_config("/nonexistent/form.ini"), InvalidInput);
}

TEST_CASE("empty scene renders the table only") {
    Scene s;
    s.table = {1.6, 0.8};
    const std::string svg = render_svg(s);
    CHECK(svg.find("class=\"table\"") != std::string::npos);
    CHECK(svg.find("class=\"object\"") == std::string::npos);
    CHECK(svg == render_svg(s));
}

TEST_CASE("rotated boxes carry theta in degrees and collisions are outlined") {
    Scene s;
    s.table = {1.0, 1.0};
    s.objects = {{"a", "box", 0.2, 0.1}, {"b", "box", 0.2, 0.1}, {"c", "box", 0.1, 0.1}};
    s.poses = std::vector<Pose>{{0.3, 0.3, kPi / 2}, {0.35, 0.3, 0.0}, {0.8, 0.8, -kPi / 4}};
    const std::string svg = render_svg(s);
    CHECK(svg.find("rotate(90.000)") != std::string::npos);
    CHECK(svg.find("rotate(-45.000)") != std::string::npos);
    CHECK(svg.find(">a</text>") != std::string::npos);
    size_t red = 0;
    for (size_t pos = svg.find("#d62728"); pos != std::string::npos; pos = svg.find("#d62728", pos + 1)) ++red;
    CHECK(red == 2);
    CHECK(svg == render_svg(s));
}

TEST_CASE("render matches the frozen golden file") {
    const std::string dir = FORM_SOURCE_DIR;
    const SceneFile f = read_scene(dir + "/fixtures/dining_table/train_01.json");
    const std::string golden = read_text_file(dir + "/tests/golden/dining_train_01.svg");
    CHECK(render_svg(f.scene) == golden);
}

TEST_CASE("text files") {
    const auto path = (std::filesystem::temp_directory_path() / "form_io_test.txt").string();
    write_text_file(path, "hello\n");
    CHECK(read_text_file(path) == "hello\n");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_text_file(path), InvalidInput);
}
