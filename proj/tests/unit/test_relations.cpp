#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "form/relations.hpp"
#include "form/rng.hpp"
#include "form/synthgen.hpp"

using namespace form;

namespace {

Scene one_object(double length, double width, Pose p) {
    Scene s;
    s.table = {1.0, 1.0};
    s.objects = {{"o", "c", length, width}};
    s.poses = std::vector<Pose>{p};
    return s;
}

Scene random_scene(Rng& rng, size_t n) {
    Scene s;
    s.table = {uniform(rng, 0.8, 2.0), uniform(rng, 0.6, 1.5)};
    std::vector<Pose> poses;
    for (size_t i = 0; i < n; ++i) {
        s.objects.push_back({"obj" + std::to_string(i), "c", uniform(rng, 0.05, 0.3), uniform(rng, 0.05, 0.3)});
        // Snap some coordinates so that many relations fire.
        const double x = uniform(rng, 0, 1) < 0.3 ? 0.5 : uniform(rng, 0.05, 0.95);
        const double y = uniform(rng, 0, 1) < 0.3 ? 0.3 : uniform(rng, 0.05, 0.95);
        const double t = uniform(rng, 0, 1) < 0.7 ? 0.0 : uniform(rng, -0.2, 0.2);
        poses.push_back({x, y, t});
    }
    s.poses = poses;
    return s;
}

}  // namespace

TEST_CASE("relation names, arities and aliases") {
    CHECK(library_relations().size() == 24);
    CHECK(all_relations().size() == 25);
    for (auto r : all_relations()) {
        CHECK(parse_relation(relation_name(r)) == r);
    }
    CHECK(parse_relation("central_table") == RelationId::centered_table);
    CHECK(parse_relation("vertical_symmetry_about_axis_obj") == RelationId::vertical_line_symmetry);
    CHECK_THROWS_AS(parse_relation("floating_above"), UnsupportedRelation);
    CHECK(arity(RelationId::left_of) == 2);
    CHECK(arity(RelationId::vertical_line_symmetry) == 3);
    CHECK(is_variable_arity(RelationId::sorted));
}

TEST_CASE("threshold validation") {
    Thresholds th;
    CHECK_NOTHROW(th.validate());
    th.edge_near = 0.6;
    CHECK_THROWS_AS(th.validate(), InvalidInput);
    th = {};
    th.overlap_frac = 1.5;
    CHECK_THROWS_AS(th.validate(), InvalidInput);
    th = {};
    th.align_tol = 0.0;
    CHECK_THROWS_AS(th.validate(), InvalidInput);
}

TEST_CASE("classify unary examples") {
    // bottom = 0.02
    CHECK(classify({RelationId::near_front_edge, {"o"}}, one_object(0.1, 0.1, {0.5, 0.07, 0.0})));
    // right = 0.49 / 0.51
    CHECK(classify({RelationId::left_half, {"o"}}, one_object(0.1, 0.1, {0.44, 0.5, 0.0})));
    CHECK_FALSE(classify({RelationId::left_half, {"o"}}, one_object(0.1, 0.1, {0.46, 0.5, 0.0})));
    CHECK(classify({RelationId::near_back_edge, {"o"}}, one_object(0.1, 0.1, {0.5, 0.9, 0.0})));
    CHECK(classify({RelationId::centered_table, {"o"}}, one_object(0.1, 0.1, {0.52, 0.49, 0.0})));
}

TEST_CASE("classify regular_grid example") {
    Scene s;
    s.table = {1.0, 1.0};
    std::vector<Pose> poses{{0.3, 0.3, 0}, {0.7, 0.3, 0}, {0.3, 0.7, 0}, {0.7, 0.7, 0}};
    for (int i = 0; i < 4; ++i) {
        s.objects.push_back({"g" + std::to_string(i), "c", 0.1, 0.1});
    }
    s.poses = poses;
    const GroundAtom atom{RelationId::regular_grid, {"g0", "g1", "g2", "g3"}};
    CHECK(classify(atom, s));
    (*s.poses)[3].x += 0.2;
    CHECK_FALSE(classify(atom, s));
}

TEST_CASE("classify errors") {
    Scene s = one_object(0.1, 0.1, {0.5, 0.5, 0.0});
    CHECK_THROWS_AS(classify({RelationId::left_of, {"o"}}, s), InvalidInput);
    CHECK_THROWS_AS(classify({RelationId::left_half, {"missing"}}, s), InvalidInput);
    s.poses.reset();
    CHECK_THROWS_AS(classify({RelationId::left_half, {"o"}}, s), InvalidInput);
    CHECK_THROWS_AS(classify({static_cast<RelationId>(99), {"o"}}, one_object(0.1, 0.1, {0.5, 0.5, 0.0})),
                    UnsupportedRelation);
}

TEST_CASE("annotate single centered object") {
    const auto g = annotate(one_object(0.1, 0.1, {0.5, 0.5, 0.0}));
    CHECK(g.contains({RelationId::centered_table, {"o"}}));
    CHECK(g.contains({RelationId::central_row, {"o"}}));
    CHECK(g.contains({RelationId::central_column, {"o"}}));
}

TEST_CASE("annotate pairs and lines") {
    Scene s;
    s.table = {1.0, 1.0};
    s.objects = {{"a", "c", 0.1, 0.1}, {"b", "c", 0.1, 0.1}, {"c", "c", 0.1, 0.1}};
    s.poses = std::vector<Pose>{{0.2, 0.4, 0.0}, {0.5, 0.4, 0.0}, {0.8, 0.4, 0.0}};
    const auto g = annotate(s);
    CHECK(g.contains({RelationId::horizontally_aligned, {"a", "b"}}));
    CHECK(g.contains({RelationId::horizontally_aligned, {"b", "a"}}));
    CHECK(g.contains({RelationId::aligned_in_horizontal_line, {"a", "b", "c"}}));
    for (auto [x, y] : std::vector<std::pair<std::string, std::string>>{{"a", "b"}, {"a", "c"}, {"b", "c"}}) {
        CHECK(g.contains({RelationId::horizontally_aligned, {x, y}}));
    }
}

TEST_CASE("annotate equals brute force over fixed-arity relations") {
    Rng rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        const Scene s = random_scene(rng, 2 + trial % 5);
        const auto g = annotate(s);
        std::set<std::string> from_annotate;
        for (const auto& a : g.atoms()) {
            if (!is_variable_arity(a.relation)) {
                from_annotate.insert(a.to_string());
            }
        }
        std::set<std::string> brute;
        const size_t n = s.objects.size();
        for (auto rel : all_relations()) {
            const int k = arity(rel);
            for (size_t i = 0; i < n; ++i) {
                if (k == 1) {
                    GroundAtom a{rel, {s.objects[i].name}};
                    if (classify(a, s)) brute.insert(a.to_string());
                    continue;
                }
                for (size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    if (k == 2) {
                        GroundAtom a{rel, {s.objects[i].name, s.objects[j].name}};
                        if (classify(a, s)) brute.insert(a.to_string());
                        continue;
                    }
                    if (k != 3) continue;
                    for (size_t l = j + 1; l < n; ++l) {
                        if (l == i) continue;
                        GroundAtom a{rel, {s.objects[i].name, s.objects[j].name, s.objects[l].name}};
                        if (classify(a, s)) brute.insert(a.to_string());
                    }
                }
            }
        }
        CHECK(from_annotate == brute);
    }
}

TEST_CASE("left_of(A,B) iff right_of(B,A)") {
    Rng rng(5);
    int positives = 0;
    for (int i = 0; i < 2000; ++i) {
        const std::vector<ShapeDims> shapes{{uniform(rng, 0.05, 0.2), uniform(rng, 0.05, 0.2)},
                                            {uniform(rng, 0.05, 0.2), uniform(rng, 0.05, 0.2)}};
        std::vector<Pose> poses;
        if (i % 2 == 0) {
            poses = sample_relation(RelationId::left_of, shapes, static_cast<uint64_t>(i));
        } else {
            poses = {{uniform(rng, 0, 1), uniform(rng, 0, 1), 0.0}, {uniform(rng, 0, 1), uniform(rng, 0, 1), 0.0}};
        }
        const Scene s = unit_scene(shapes, poses);
        const bool l = classify({RelationId::left_of, {"o0", "o1"}}, s);
        CHECK(l == classify({RelationId::right_of, {"o1", "o0"}}, s));
        positives += l;
    }
    CHECK(positives >= 1000);
}

TEST_CASE("mirror across the vertical centerline swaps left and right") {
    Rng rng(9);
    auto subset = [](const GroundGraph& g, const std::set<RelationId>& rels) {
        std::set<std::string> out;
        for (const auto& a : g.atoms()) {
            if (rels.contains(a.relation)) out.insert(a.to_string());
        }
        return out;
    };
    auto swap_name = [](GroundAtom a) {
        static const std::vector<std::pair<RelationId, RelationId>> m{
            {RelationId::near_left_edge, RelationId::near_right_edge},
            {RelationId::left_half, RelationId::right_half},
            {RelationId::left_of, RelationId::right_of}};
        for (auto [x, y] : m) {
            if (a.relation == x) { a.relation = y; return a; }
            if (a.relation == y) { a.relation = x; return a; }
        }
        return a;
    };
    const std::set<RelationId> rels{RelationId::near_left_edge, RelationId::near_right_edge, RelationId::left_half,
                                    RelationId::right_half, RelationId::left_of, RelationId::right_of};
    for (int trial = 0; trial < 50; ++trial) {
        Scene s = random_scene(rng, 5);
        // Seed some left_of contacts.
        (*s.poses)[1].x = (*s.poses)[0].x + 0.5 * (s.objects[0].length / s.table.length + s.objects[1].length / s.table.length);
        (*s.poses)[1].y = (*s.poses)[0].y;
        Scene m = s;
        for (auto& p : *m.poses) {
            p.x = 1.0 - p.x;
            p.theta = -p.theta;
        }
        GroundGraph mapped;
        const GroundGraph original = annotate(s);
        for (const auto& a : original.atoms()) {
            if (rels.contains(a.relation)) mapped.add(swap_name(a));
        }
        CHECK(subset(mapped, rels) == subset(annotate(m), rels));
    }
}

TEST_CASE("classify is invariant under uniform rescaling") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        Scene s = random_scene(rng, 4);
        Scene big = s;
        big.table.length *= 3.7;
        big.table.width *= 3.7;
        for (auto& o : big.objects) {
            o.length *= 3.7;
            o.width *= 3.7;
        }
        CHECK(annotate(s) == annotate(big));
    }
}

TEST_CASE("check_conflicts") {
    Scene s;
    s.table = {1, 1};
    s.objects = {{"a", "c", 0.1, 0.1}, {"b", "c", 0.1, 0.1}};
    GroundGraph g1({{RelationId::left_half, {"a"}}, {RelationId::right_half, {"a"}}});
    CHECK(check_conflicts(g1, s).size() == 1);
    CHECK(check_conflicts(GroundGraph{}, s).empty());
    GroundGraph g2({{RelationId::left_of, {"a", "b"}}, {RelationId::right_of, {"a", "b"}},
                    {RelationId::near_front_edge, {"a"}}});
    const auto c2 = check_conflicts(g2, s);
    REQUIRE(c2.size() == 1);
    CHECK(c2[0].description.find("left_of(a, b)") != std::string::npos);
    CHECK(c2[0].description.find("right_of(a, b)") != std::string::npos);
    GroundGraph g3({{RelationId::left_of, {"a", "b"}}, {RelationId::left_of, {"b", "a"}},
                    {RelationId::on_top_of, {"a", "b"}}, {RelationId::on_top_of, {"b", "a"}}});
    CHECK(check_conflicts(g3, s).size() == 2);
    GroundGraph g4({{RelationId::left_half, {"a"}}, {RelationId::right_half, {"b"}}});
    CHECK(check_conflicts(g4, s).empty());
}

TEST_CASE("check_completeness") {
    Scene s;
    s.table = {1, 1};
    s.objects = {{"a", "c", 0.1, 0.1}, {"b", "c", 0.1, 0.1}, {"c", "c", 0.1, 0.1}};
    GroundGraph all({{RelationId::aligned_in_horizontal_line, {"a", "b", "c"}}});
    CHECK(check_completeness(all, s).empty());
    GroundGraph two({{RelationId::left_of, {"a", "b"}}});
    CHECK(check_completeness(two, s) == std::vector<std::string>{"c"});
}

TEST_CASE("ground graph deduplicates") {
    GroundGraph g;
    CHECK(g.add({RelationId::left_half, {"a"}}));
    CHECK_FALSE(g.add({RelationId::left_half, {"a"}}));
    CHECK(g.size() == 1);
}
