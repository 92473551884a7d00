#pragma once

#include <optional>
#include <string>
#include <vector>

#include "form/factors.hpp"
#include "form/proposer.hpp"
#include "form/relations.hpp"
#include "form/sampler.hpp"

namespace form {

/// Scene plus the optional task metadata carried by scene files.
struct SceneFile {
    Scene scene;
    std::optional<TaskFamily> family;
    std::optional<GroundGraph> reference;
};

/// Parses a scene document. Either every object has a pose or none does.
/// Throws InvalidInput on schema violations.
SceneFile parse_scene(const std::string& text);
std::string serialize_scene(const SceneFile& file);
SceneFile read_scene(const std::string& path);
void write_scene(const std::string& path, const SceneFile& file);

/// Graph documents are lists of string lists: [["left_of", "a", "b"], ...].
GroundGraph parse_graph(const std::string& text);
std::string serialize_graph(const GroundGraph& graph);
GroundGraph read_graph(const std::string& path);
void write_graph(const std::string& path, const GroundGraph& graph);

struct ScoredSample {
    std::vector<Pose> poses;
    double feasibility = 0.0;
    double satisfaction = 0.0;
};

struct SolveResult {
    std::vector<std::string> names;  // scene object order
    std::vector<ScoredSample> samples;
    size_t best = 0;
    std::vector<std::string> warnings;
};

/// Index of the best sample by (feasibility, satisfaction), first on ties.
size_t select_best(const std::vector<ScoredSample>& samples);

SolveResult parse_result(const std::string& text);
std::string serialize_result(const SolveResult& result);
SolveResult read_result(const std::string& path);
void write_result(const std::string& path, const SolveResult& result);

/// Settings read from the sectioned key = value configuration file.
struct Config {
    Thresholds thresholds;
    size_t schedule_steps = 300;
    PosteriorVariance variance = PosteriorVariance::beta_tilde;
    SamplerConfig sampler;
    AnalyticOptions analytic;
    TrainConfig training;
    LlmSettings llm;
    size_t reflection_iterations = 3;

    Config();
};

/// Unknown sections or keys and malformed values throw InvalidInput.
Config parse_config(const std::string& text);
Config read_config(const std::string& path);

/// Deterministic SVG of the table and the posed objects; colliding objects
/// are outlined in red. Objects without poses are omitted.
std::string render_svg(const Scene& scene);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace form
