// Regenerates the bundled fixture scenes under <out>/<family>/.
// Reference graphs come from the program proposer after reflection;
// training scenes get poses from the analytic sampler that satisfy their
// reference graph without collisions.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "form/eval.hpp"
#include "form/io.hpp"
#include "form/proposer.hpp"
#include "form/sampler.hpp"

using namespace form;

namespace {

struct Case {
    const char* instruction;
    const char* objects;  // comma separated
};

struct FamilyData {
    TaskFamily family;
    TableFrame table;
    std::map<std::string, std::pair<double, double>> dims;  // meters, length x width
    std::vector<Case> train;
    std::vector<Case> test;
};

std::vector<FamilyData> families() {
    FamilyData study{
        TaskFamily::study_desk,
        {1.6, 0.8},
        {{"laptop", {0.34, 0.24}},    {"book", {0.15, 0.23}},    {"lamp", {0.15, 0.15}},
         {"mouse", {0.06, 0.10}},     {"mug", {0.09, 0.09}},     {"monitor", {0.55, 0.20}},
         {"keyboard", {0.44, 0.14}},  {"notepad", {0.21, 0.28}}, {"pen", {0.015, 0.14}},
         {"tissue_box", {0.22, 0.12}}, {"glasses", {0.14, 0.05}}, {"toy", {0.10, 0.10}}},
        {
            {"Could you please set up a study desk for me? I will mainly be using it to work on my laptop. I "
             "probably need the books for quick reference.",
             "laptop, book_1, book_2, book_3, book_4, lamp, mouse"},
            {"Could you please set up a study desk for me? I need to work on a laptop connecting to an external "
             "monitor.",
             "monitor, laptop, lamp, mouse, mug"},
            {"Could you please set up a study desk for me? I need to work on a laptop connecting to an external "
             "keyboard.",
             "laptop, keyboard, lamp, mouse, mug"},
            {"Could you please set up a study desk for me? I need to work on two laptops at the same time.",
             "laptop_1, laptop_2, book_1, book_2, book_3, book_4, lamp"},
            {"Could you please set up a study desk for me? I need to work on my notepad.",
             "notepad, pen, book_1, book_2, book_3, book_4, lamp"},
        },
        {
            {"Could you please set up a study desk for me? I will mainly be using it to work on my laptop. I "
             "probably need the books for quick reference.",
             "laptop, book_1, book_2, book_3, book_4, mug"},
            {"Would you be able to set up a study desk for me that's suitable for working on my computer?",
             "monitor, keyboard, mouse, lamp, mug"},
            {"Could you set up a study desk for me that accommodates my laptop with an external monitor and "
             "keyboard connected?",
             "monitor, laptop, keyboard, mouse"},
            {"Could you please arrange a study desk for me? I predominantly use my notepad for work.",
             "notepad, pen, tissue_box, mug, lamp"},
            {"Could you please set up a study desk for me with enough space to work on two notepads at the same "
             "time? I probably need the books for quick reference.",
             "book_1, book_2, book_3, book_4, lamp, notepad_1, notepad_2, pen"},
            {"Could you please set up a study desk for me? I will mainly be using it to work on my laptop.",
             "laptop, mouse, lamp, mug, tissue_box"},
            {"Could you please arrange a study desk for me? I predominantly use my notepad for work.",
             "monitor, notepad, pen, mug, lamp"},
            {"Could you please set up a study desk for me with enough space to work on a laptop and a notepad at "
             "the same time?",
             "monitor, lamp, laptop, notepad, pen, tissue_box, toy, mug"},
            {"Could you set up a study desk for me that accommodates my laptop with an external monitor and "
             "keyboard connected?",
             "monitor, laptop, keyboard, mouse, glasses, mug, tissue_box"},
            {"Could you please set up a study desk for me with enough space to work on a laptop and a notepad at "
             "the same time? I probably need the books for quick reference.",
             "monitor, laptop, book_1, book_2, book_3, book_4, notepad, pen, mug, tissue_box"},
        }};

    FamilyData coffee{
        TaskFamily::coffee_table,
        {1.4, 0.8},
        {{"tray", {0.35, 0.25}},       {"keys", {0.08, 0.04}},        {"remote_controller", {0.05, 0.18}},
         {"vase", {0.12, 0.12}},       {"candle", {0.07, 0.07}},      {"magazine", {0.21, 0.28}},
         {"snack_bowl", {0.16, 0.16}}, {"coffee_pot", {0.15, 0.15}},  {"coffee_cup", {0.09, 0.09}},
         {"cake_plate", {0.18, 0.18}}, {"notepad", {0.15, 0.21}},     {"ashtray", {0.10, 0.10}},
         {"beverage", {0.07, 0.07}},   {"chess_board", {0.35, 0.35}}, {"notenotepad", {0.34, 0.24}},
         {"tea_pot", {0.15, 0.15}},    {"tea_cup", {0.08, 0.08}},     {"glasses", {0.14, 0.05}},
         {"laptop", {0.34, 0.24}}},
        {
            {"Could you please tidy up the coffee table?",
             "tray, keys, remote_controller, vase, candle_1, candle_2, magazine_1, magazine_2, magazine_3, "
             "magazine_4"},
            {"Could you please help me set up a coffee table for party? I have two bowls of snack to share.",
             "tray, keys, remote_controller, snack_bowl_1, snack_bowl_2"},
            {"Could you assist me in arranging a coffee table for a tea and cake session for two?",
             "coffee_pot, coffee_cup_1, coffee_cup_2, cake_plate_1, cake_plate_2, magazine_1, magazine_2, "
             "magazine_3, magazine_4"},
            {"Could you please help me make some space on the coffee table? I want to read the magazine.",
             "tray, keys, remote_controller, vase, candle_1, candle_2, magazine"},
            {"Could you please tidy up the coffee table to create more space, and make sure the tray is within "
             "easy reach so I can place my keys there?",
             "tray, keys, remote_controller, vase_1, vase_2, vase_3, magazine_1, magazine_2, magazine_3, "
             "magazine_4"},
        },
        {
            {"Could you please tidy up the coffee table.",
             "vase, candle_1, candle_2, tray, keys, glasses, remote_controller"},
            {"Could you please tidy up the coffee table to create more space, and make sure the tray is within "
             "easy reach so I can place my keys there?",
             "vase_1, vase_2, notepad_1, notepad_2, notepad_3, notepad_4, tray, keys, remote_controller"},
            {"Please set up the coffee table for the party, arranging snacks and drinks so everyone can easily "
             "access them, and ensure other items take up minimal space.",
             "ashtray, notepad_1, notepad_2, notepad_3, notepad_4, beverage_1, beverage_2, beverage_3, "
             "beverage_4, beverage_5, beverage_6, snack_bowl_1, snack_bowl_2"},
            {"Could you please arrange the coffee table for a game of Chinese chess, along with coffee for two?",
             "vase, candle_1, candle_2, chess_board, coffee_cup_1, coffee_cup_2"},
            {"Could you please clear the coffee table for me? I need to use it to work on my notenotepad.",
             "vase, notepad_1, notepad_2, notepad_3, notepad_4, notenotepad, coffee_cup"},
            {"Could you set up the coffee table for tea time for two people, please?",
             "tea_pot, tea_cup_1, tea_cup_2, tray, keys, glasses, remote_controller"},
            {"Could you please set up the coffee table for a romantic setting with candles?",
             "vase, candle_1, candle_2, candle_3, candle_4, notepad_1, notepad_2, notepad_3, notepad_4"},
            {"Could you please set the coffee table for two people to enjoy coffee?",
             "coffee_pot, coffee_cup_1, coffee_cup_2, notepad_1, notepad_2, notepad_3, notepad_4, tray, keys, "
             "glasses, remote_controller"},
            {"Please set up the coffee table with snacks for sharing and coffee for two.",
             "snack_bowl_1, snack_bowl_2, snack_bowl_3, snack_bowl_4, tea_cup_1, tea_cup_2, tray, keys, glasses, "
             "remote_controller"},
            {"Could you please clear the coffee table? I need to use it for working on my laptop.",
             "vase, laptop, notepad_1, notepad_2, notepad_3, notepad_4, tray, keys, glasses, remote_controller"},
        }};

    FamilyData dining{
        TaskFamily::dining_table,
        {1.8, 1.0},
        {{"serving_plate", {0.27, 0.27}}, {"napkin", {0.14, 0.20}},      {"fork", {0.03, 0.19}},
         {"knife", {0.025, 0.21}},        {"spoon", {0.035, 0.17}},      {"glass", {0.08, 0.08}},
         {"medium_plate", {0.20, 0.20}},  {"small_plate", {0.16, 0.16}}, {"rice_bowl", {0.12, 0.12}},
         {"chopsticks", {0.025, 0.23}},   {"ramen_bowl", {0.20, 0.20}},  {"seasoning", {0.05, 0.05}},
         {"baby_plate", {0.18, 0.18}},    {"baby_bowl", {0.12, 0.12}},   {"baby_spoon", {0.025, 0.13}},
         {"baby_cup", {0.07, 0.07}}},
        {
            {"Could you please arrange a dining table for two people?",
             "serving_plate_1, napkin_1, fork_1, knife_1, spoon_1, serving_plate_2, napkin_2, fork_2, knife_2, "
             "spoon_2"},
            {"Please prepare a Chinese-style dining table for two guests.",
             "medium_plate_1, medium_plate_2, small_plate_1, small_plate_2, rice_bowl_1, rice_bowl_2, "
             "chopsticks_1, chopsticks_2, spoon_1, spoon_2"},
            {"Could you please arrange a dining table for two? We would like to sit side by side?",
             "serving_plate_1, napkin_1, fork_1, knife_1, spoon_1, serving_plate_2, napkin_2, fork_2, knife_2, "
             "spoon_2"},
            {"Could you please set up the ramen dining table for two, ensuring that the seating accommodates one "
             "left-handed diner?",
             "ramen_bowl_1, chopsticks_1, spoon_1, glass_1, ramen_bowl_2, chopsticks_2, spoon_2, glass_2, "
             "seasoning_1, seasoning_2, seasoning_3"},
            {"Could you please set up a dining table for two, with the setup for sharing the main dishes?",
             "medium_plate_1, medium_plate_2, serving_plate_1, napkin_1, fork_1, knife_1, spoon_1, "
             "serving_plate_2, napkin_2, fork_2, knife_2, spoon_2, seasoning_1, seasoning_2, seasoning_3"},
        },
        {
            {"Could you please arrange a dining table for two people?",
             "serving_plate_1, napkin_1, fork_1, knife_1, spoon_1, glass_1, serving_plate_2, napkin_2, fork_2, "
             "knife_2, spoon_2, glass_2"},
            {"Please prepare a Chinese-style dining table for two guests.",
             "medium_plate_1, medium_plate_2, medium_plate_3, medium_plate_4, small_plate_1, small_plate_2, "
             "rice_bowl_1, rice_bowl_2, chopsticks_1, chopsticks_2, spoon_1, spoon_2"},
            {"Could you please arrange a dining table for two? We would like to sit side by side.",
             "serving_plate_1, napkin_1, fork_1, knife_1, spoon_1, glass_1, serving_plate_2, napkin_2, fork_2, "
             "knife_2, spoon_2, glass_2"},
            {"Please prepare a table for one, set up for dining on ramen.",
             "ramen_bowl, chopsticks, spoon, medium_plate_1, medium_plate_2, seasoning_1, seasoning_2, "
             "seasoning_3, seasoning_4"},
            {"Could you please arrange a dining table for a parent and a child, with seating on the same side to "
             "make it easier for me to tend to my child?",
             "serving_plate, napkin, fork, knife, spoon, glass, baby_plate, baby_bowl, baby_spoon, baby_cup, "
             "seasoning_1, seasoning_2, seasoning_3"},
            {"Could you please set up a dining table for two, ensuring that the seating accommodates one "
             "left-handed diner?",
             "serving_plate_1, napkin_1, fork_1, knife_1, spoon_1, glass_1, serving_plate_2, napkin_2, fork_2, "
             "knife_2, spoon_2, glass_2"},
            {"Could you please arrange a ramen dining table for a parent and a child, with seating on the same "
             "side to make it easier for me to tend to my child?",
             "baby_bowl, baby_spoon, baby_cup, ramen_bowl, chopsticks, spoon, medium_plate_1, medium_plate_2, "
             "glass, seasoning_1, seasoning_2, seasoning_3, seasoning_4"},
            {"Please prepare a Chinese-style dining table for two, with the arrangement made for shared main "
             "dishes.",
             "medium_plate_1, medium_plate_2, medium_plate_3, medium_plate_4, medium_plate_5, medium_plate_6, "
             "small_plate_1, small_plate_2, rice_bowl_1, rice_bowl_2, chopsticks_1, chopsticks_2, spoon_1, "
             "spoon_2"},
            {"Could you please set up a ramen dining table for two, with the setup for sharing the main dishes?",
             "medium_plate_1, medium_plate_2, medium_plate_3, medium_plate_4, ramen_bowl_1, chopsticks_1, "
             "spoon_1, glass_1, ramen_bowl_2, chopsticks_2, spoon_2, glass_2, seasoning_1, seasoning_2, "
             "seasoning_3"},
            {"Please arrange a dining table for four, with seating on two opposite sides of the table.",
             "serving_plate_1, napkin_1, fork_1, knife_1, spoon_1, glass_1, serving_plate_2, napkin_2, fork_2, "
             "knife_2, spoon_2, glass_2, serving_plate_3, napkin_3, fork_3, knife_3, spoon_3, glass_3, "
             "serving_plate_4, napkin_4, fork_4, knife_4, spoon_4, glass_4"},
        }};
    return {study, coffee, dining};
}

Scene make_scene(const FamilyData& fam, const Case& c) {
    Scene s;
    s.table = fam.table;
    s.instruction = c.instruction;
    std::stringstream ss(c.objects);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::string name;
        for (char ch : item) {
            if (!std::isspace(static_cast<unsigned char>(ch))) name.push_back(static_cast<char>(std::tolower(ch)));
        }
        if (name.empty()) continue;
        const auto& d = fam.dims.at(base_type(name));
        s.objects.push_back({name, base_type(name), d.first, d.second});
    }
    s.validate();
    return s;
}

// Collisions are acceptable only between a stacked object and its support.
bool only_stacked_collisions(const Scene& posed, const GroundGraph& graph) {
    std::set<std::pair<std::string, std::string>> stacked;
    for (const auto& a : graph.atoms()) {
        if (a.relation == RelationId::on_top_of || a.relation == RelationId::centered) {
            stacked.insert({a.args[0], a.args[1]});
            stacked.insert({a.args[1], a.args[0]});
        }
    }
    const auto report = feasibility_report(posed);
    if (!report.off_table.empty()) return false;
    return std::all_of(report.colliding_pairs.begin(), report.colliding_pairs.end(),
                       [&](const auto& p) { return stacked.count(p) > 0; });
}

struct Authored {
    std::vector<Pose> poses;
    bool accepted = false;
    double feasibility = 0.0;
    double satisfaction = 0.0;
};

// Best analytic sample over a few seeded rounds; stops at the first sample
// that satisfies every reference atom with only stacked collisions.
Authored author_poses(const Scene& scene, const GroundGraph& graph, size_t rounds) {
    const Config cfg;
    const auto models = analytic_models(cfg.analytic);
    const auto schedule = NoiseSchedule::cosine(cfg.schedule_steps);
    Authored best;
    std::tuple<bool, double, double> best_key{false, -1.0, -1.0};
    for (size_t round = 0; round < rounds; ++round) {
        SamplerConfig sc = cfg.sampler;
        sc.samples = 4;
        sc.seed = 1000 + round;
        const auto r = sample(graph, scene, models, schedule, sc);
        for (const auto& poses : r.poses) {
            Scene posed = scene;
            posed.poses = poses;
            const double sat = satisfaction(posed, graph);
            const bool accepted = sat == 1.0 && only_stacked_collisions(posed, graph);
            const std::tuple<bool, double, double> key{accepted, sat, feasibility(posed)};
            if (key > best_key) {
                best_key = key;
                best = {poses, accepted, std::get<2>(key), sat};
            }
            if (accepted) return best;
        }
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regenerate the bundled fixture scenes"};
    std::string out = "fixtures";
    size_t rounds = 10;
    app.add_option("--out", out, "Output directory");
    app.add_option("--rounds", rounds, "Sampling rounds per training scene");
    CLI11_PARSE(app, argc, argv);

    int status = 0;
    ProposerBackend backend;
    for (const auto& fam : families()) {
        const std::filesystem::path dir = std::filesystem::path(out) / std::string(family_name(fam.family));
        std::filesystem::create_directories(dir);
        auto emit = [&](const Case& c, const std::string& stem, bool pose) {
            SceneFile f;
            f.scene = make_scene(fam, c);
            f.family = fam.family;
            const GroundGraph proposed = propose_program(f.scene, fam.family);
            const auto refl = self_reflect(proposed, f.scene, backend, 3, fam.family, c.instruction);
            f.reference = refl.graph;
            std::cout << dir.string() << "/" << stem << ": " << f.scene.objects.size() << " objects, "
                      << refl.graph.size() << " atoms, reflection " << refl.iterations
                      << (refl.clean ? " clean" : " NOT CLEAN");
            if (pose) {
                const Authored a = author_poses(f.scene, refl.graph, rounds);
                f.scene.poses = a.poses;
                std::cout << ", feasibility " << a.feasibility << " satisfaction " << a.satisfaction
                          << (a.accepted ? "" : " REJECTED");
                if (!a.accepted) status = 1;
            }
            std::cout << std::endl;
            write_scene((dir / (stem + ".json")).string(), f);
        };
        auto stem = [](const char* prefix, size_t i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s_%02zu", prefix, i + 1);
            return std::string(buf);
        };
        for (size_t i = 0; i < fam.train.size(); ++i) emit(fam.train[i], stem("train", i), true);
        for (size_t i = 0; i < fam.test.size(); ++i) emit(fam.test[i], stem("test", i), false);
    }
    return status;
}
