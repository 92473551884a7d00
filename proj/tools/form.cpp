#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "form/eval.hpp"
#include "form/io.hpp"
#include "form/proposer.hpp"
#include "form/sampler.hpp"
#include "form/synthgen.hpp"

using namespace form;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

Config load_config(const std::string& path) { return path.empty() ? Config{} : read_config(path); }

// ---------------------------------------------------------------------------

struct GenDataArgs {
    std::string relation, out;
    size_t n = 1000;
    uint64_t seed = 0;
    size_t min_arity = 0, max_arity = 0;
};

int gen_data(const GenDataArgs& a, const Config& cfg) {
    const RelationId rel = parse_relation(a.relation);
    auto range = default_arity_range(rel);
    if (a.min_arity) range.first = a.min_arity;
    if (a.max_arity) range.second = a.max_arity;
    if (range.first > range.second) throw InvalidInput("min arity exceeds max arity");
    const auto data = gen_dataset(rel, a.n, ShapeDistribution{}, range, a.seed, cfg.thresholds, cfg.sampler.threads);
    size_t positive = 0;
    for (const auto& s : data) {
        const Scene scene = unit_scene(s.shapes, s.poses);
        positive += classify(unit_atom(rel, s.shapes.size()), scene, cfg.thresholds);
    }
    write_dataset(a.out, data);
    std::printf("records %zu\nclassifier-positive %.1f%%\n", data.size(),
                data.empty() ? 100.0 : 100.0 * static_cast<double>(positive) / static_cast<double>(data.size()));
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string relation, data, out;
    std::optional<size_t> epochs;
    std::optional<uint64_t> seed;
};

int train_cmd(const TrainArgs& a, const Config& cfg) {
    const RelationId rel = parse_relation(a.relation);
    if (!std::filesystem::exists(a.data)) throw InvalidInput("no such data file: " + a.data);
    const auto data = read_dataset(a.data);
    for (const auto& s : data) {
        if (s.relation != rel) {
            throw InvalidInput("data file holds " + std::string(relation_name(s.relation)) + " records, expected " +
                               a.relation);
        }
    }
    TrainConfig tc = cfg.training;
    if (a.epochs) tc.epochs = *a.epochs;
    if (a.seed) tc.seed = *a.seed;
    const auto r = train(rel, data, tc);
    nlohmann::ordered_json meta{{"relation", std::string(relation_name(rel))},
                                {"records", data.size()},
                                {"epochs", tc.epochs},
                                {"seed", tc.seed},
                                {"final_loss", r.final_loss}};
    r.network->save(a.out, meta.dump());
    std::printf("initial loss %.6f\nfinal loss %.6f\n", r.initial_loss, r.final_loss);
    return 0;
}

// ---------------------------------------------------------------------------

struct ProposeArgs {
    std::string scene, backend = "program", out, family, instruction;
    std::vector<std::string> examples;
    std::optional<size_t> iterations;
};

TaskFamily resolve_family(const SceneFile& f, const std::string& flag) {
    if (!flag.empty()) return parse_family(flag);
    if (!f.family) throw InvalidInput("scene has no family; pass --family");
    return *f.family;
}

int propose_cmd(const ProposeArgs& a, const Config& cfg) {
    const SceneFile f = read_scene(a.scene);
    const TaskFamily family = resolve_family(f, a.family);
    const std::string instruction = !a.instruction.empty() ? a.instruction : f.scene.instruction.value_or("");
    Scene scene = f.scene;
    scene.instruction = instruction;
    ProposerBackend backend;
    backend.max_iterations = a.iterations.value_or(cfg.reflection_iterations);
    std::vector<std::string> warnings;
    GroundGraph graph;
    if (a.backend == "program") {
        graph = propose_program(scene, family);
    } else if (a.backend == "llm") {
        backend.kind = ProposerBackend::Kind::llm;
        backend.llm = cfg.llm;
        const LlmSettings env = LlmSettings::from_environment();
        if (!env.url.empty()) backend.llm.url = env.url;
        if (!env.api_key.empty()) backend.llm.api_key = env.api_key;
        for (const auto& path : a.examples) backend.examples.push_back(read_scene(path).scene);
        Proposal p = propose_llm(scene, instruction, family, backend);
        graph = std::move(p.graph);
        warnings = std::move(p.warnings);
    } else {
        throw InvalidInput("backend must be program or llm");
    }
    const auto refl = self_reflect(graph, scene, backend, backend.max_iterations, family, instruction);
    warnings.insert(warnings.end(), refl.warnings.begin(), refl.warnings.end());
    write_graph(a.out, refl.graph);
    std::printf("atoms %zu\nreflection iterations %zu\nconflict-free and complete: %s\n", refl.graph.size(),
                refl.iterations, refl.clean ? "yes" : "no");
    for (const auto& r : refl.residual) std::printf("issue: %s\n", r.c_str());
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
    std::string scene, graph, backend = "analytic", out, checkpoint_dir;
    std::vector<std::string> checkpoints;
    std::optional<size_t> samples, mcmc_steps, steps;
    std::optional<uint64_t> seed;
};

ModelMap learned_models(const GroundGraph& graph, const SolveArgs& a) {
    ModelMap models;
    auto add = [&](const std::string& path) {
        auto [net, meta] = MlpDenoiser::load(path);
        const auto j = nlohmann::json::parse(meta);
        if (!j.contains("relation")) throw InvalidInput("checkpoint without relation metadata: " + path);
        const RelationId rel = parse_relation(j["relation"].get<std::string>());
        models[rel] = make_learned_factor(rel, net);
    };
    for (const auto& p : a.checkpoints) add(p);
    for (const auto& atom : graph.atoms()) {
        if (models.contains(atom.relation)) continue;
        const auto path =
            std::filesystem::path(a.checkpoint_dir) / (std::string(relation_name(atom.relation)) + ".ckpt");
        if (a.checkpoint_dir.empty() || !std::filesystem::exists(path)) {
            throw InvalidInput("missing checkpoint for relation " + std::string(relation_name(atom.relation)));
        }
        add(path.string());
    }
    return models;
}

int solve_cmd(const SolveArgs& a, const Config& cfg) {
    const SceneFile f = read_scene(a.scene);
    const GroundGraph graph = read_graph(a.graph);
    for (const auto& atom : graph.atoms()) validate_atom(atom, f.scene);
    SamplerConfig sc = cfg.sampler;
    if (a.samples) sc.samples = *a.samples;
    if (a.seed) sc.seed = *a.seed;
    if (a.mcmc_steps) sc.mcmc_steps = *a.mcmc_steps;
    if (sc.samples == 0) throw InvalidInput("--samples must be at least 1");
    const size_t steps = a.steps.value_or(cfg.schedule_steps);
    if (steps == 0) throw InvalidInput("--steps must be at least 1");
    ModelMap models;
    if (a.backend == "analytic") models = analytic_models(cfg.analytic);
    else if (a.backend == "learned") models = learned_models(graph, a);
    else throw InvalidInput("backend must be analytic or learned");

    Scene scene = f.scene;
    scene.poses.reset();
    const auto r = sample(graph, scene, models, NoiseSchedule::cosine(steps), sc);
    SolveResult out;
    for (const auto& o : scene.objects) out.names.push_back(o.name);
    for (const auto& poses : r.poses) {
        Scene posed = scene;
        posed.poses = poses;
        out.samples.push_back({poses, feasibility(posed),
                               graph.empty() ? 1.0 : satisfaction(posed, graph, cfg.thresholds)});
    }
    out.best = select_best(out.samples);
    out.warnings = r.warnings;
    write_result(a.out, out);
    const auto& best = out.samples[out.best];
    std::printf("samples %zu\nbest %zu\nfeasibility %.4f\nsatisfaction %.4f\n", out.samples.size(), out.best,
                best.feasibility, best.satisfaction);
    for (const auto& w : out.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

// ---------------------------------------------------------------------------

/// Scene with the poses of the result's best sample, or its own poses.
Scene posed_scene(const SceneFile& f, const std::string& result_path) {
    Scene scene = f.scene;
    if (result_path.empty()) {
        if (!scene.poses) throw InvalidInput("scene has no poses; pass --result");
        return scene;
    }
    const SolveResult r = read_result(result_path);
    if (r.names.size() != scene.objects.size()) {
        throw InvalidInput("result has " + std::to_string(r.names.size()) + " objects, scene has " +
                           std::to_string(scene.objects.size()));
    }
    for (size_t i = 0; i < r.names.size(); ++i) {
        if (r.names[i] != scene.objects[i].name) throw InvalidInput("result object order differs from the scene");
    }
    scene.poses = r.samples[r.best].poses;
    return scene;
}

struct EvalArgs {
    std::string scene, result, reference, graph, record;
};

int eval_cmd(const EvalArgs& a, const Config& cfg) {
    const SceneFile f = read_scene(a.scene);
    const Scene scene = posed_scene(f, a.result);
    std::optional<GroundGraph> reference = f.reference;
    if (!a.reference.empty()) reference = read_graph(a.reference);
    std::optional<GroundGraph> proposed;
    if (!a.graph.empty()) proposed = read_graph(a.graph);
    const EvalReport r = evaluate(scene, proposed ? &*proposed : nullptr, reference ? &*reference : nullptr,
                                  cfg.thresholds);
    std::cout << format_report(r);
    if (!a.record.empty()) {
        nlohmann::ordered_json j{{"feasibility", r.feasibility}};
        if (r.functionality) j["functionality"] = *r.functionality;
        if (r.satisfaction) j["satisfaction"] = *r.satisfaction;
        nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
        for (const auto& [atom, ok] : r.per_atom) atoms.push_back({atom.to_string(), ok});
        j["per_atom"] = atoms;
        nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
        for (const auto& [x, y] : r.colliding_pairs) pairs.push_back({x, y});
        j["colliding_pairs"] = pairs;
        write_text_file(a.record, j.dump() + "\n");
    }
    return 0;
}

struct RenderArgs {
    std::string scene, result, out;
};

int render_cmd(const RenderArgs& a) {
    const SceneFile f = read_scene(a.scene);
    Scene scene = f.scene;
    if (!a.result.empty() || scene.poses) scene = posed_scene(f, a.result);
    write_text_file(a.out, render_svg(scene));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional tabletop arrangement: relation proposal and pose sampling"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "Sectioned key = value configuration file");

    GenDataArgs gd;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset for one relation");
    gen->add_option("--relation", gd.relation)->required();
    gen->add_option("--n", gd.n)->required();
    gen->add_option("--seed", gd.seed);
    gen->add_option("--out", gd.out)->required();
    gen->add_option("--min-arity", gd.min_arity, "Smallest group for variable-arity relations");
    gen->add_option("--max-arity", gd.max_arity, "Largest group for variable-arity relations");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train a learned factor and write a checkpoint");
    tr->add_option("--relation", ta.relation)->required();
    tr->add_option("--data", ta.data)->required();
    tr->add_option("--out", ta.out)->required();
    tr->add_option("--epochs", ta.epochs);
    tr->add_option("--seed", ta.seed);

    ProposeArgs pa;
    auto* pr = app.add_subcommand("propose", "Propose and repair a relation graph for a scene");
    pr->add_option("--scene", pa.scene)->required();
    pr->add_option("--backend", pa.backend)->check(CLI::IsMember({"program", "llm"}));
    pr->add_option("--out", pa.out)->required();
    pr->add_option("--family", pa.family, "study_desk, coffee_table or dining_table");
    pr->add_option("--instruction", pa.instruction, "Overrides the scene instruction");
    pr->add_option("--example", pa.examples, "Posed scene used as a prompt example (llm backend)");
    pr->add_option("--iterations", pa.iterations, "Self-reflection rounds");

    SolveArgs sa;
    auto* so = app.add_subcommand("solve", "Sample poses satisfying a relation graph");
    so->add_option("--scene", sa.scene)->required();
    so->add_option("--graph", sa.graph)->required();
    so->add_option("--backend", sa.backend)->check(CLI::IsMember({"analytic", "learned"}));
    so->add_option("--samples", sa.samples);
    so->add_option("--seed", sa.seed);
    so->add_option("--out", sa.out)->required();
    so->add_option("--mcmc-steps", sa.mcmc_steps);
    so->add_option("--steps", sa.steps, "Diffusion steps T");
    so->add_option("--checkpoint", sa.checkpoints, "Learned factor checkpoint (repeatable)");
    so->add_option("--checkpoint-dir", sa.checkpoint_dir, "Directory of <relation>.ckpt files");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Score an arrangement");
    ev->add_option("--scene", ea.scene)->required();
    ev->add_option("--result", ea.result, "Solve result; the scene's own poses otherwise");
    ev->add_option("--reference", ea.reference, "Reference graph; the scene's embedded one otherwise");
    ev->add_option("--graph", ea.graph, "Proposed graph for the satisfaction score");
    ev->add_option("--record", ea.record, "Also write the report as a JSON line");

    RenderArgs ra;
    auto* re = app.add_subcommand("render", "Render an arrangement as SVG");
    re->add_option("--scene", ra.scene)->required();
    re->add_option("--result", ra.result);
    re->add_option("--out", ra.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const Config cfg = load_config(config_path);
        if (*gen) return gen_data(gd, cfg);
        if (*tr) return train_cmd(ta, cfg);
        if (*pr) return propose_cmd(pa, cfg);
        if (*so) return solve_cmd(sa, cfg);
        if (*ev) return eval_cmd(ea, cfg);
        if (*re) return render_cmd(ra);
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const UnsupportedRelation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeFailure;
    }
    return kUsage;
}
