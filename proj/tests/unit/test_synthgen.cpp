#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "form/synthgen.hpp"

using namespace form;

TEST_CASE("sample_relation examples") {
    const auto p = sample_relation(RelationId::near_front_edge, {{0.1, 0.1}}, 1);
    const Scene s = unit_scene({{0.1, 0.1}}, p);
    CHECK(aabb_of(to_oriented_box(s.objects[0], p[0], s.table)).bottom < 0.1);

    const auto q = sample_relation(RelationId::horizontal_symmetry_on_table, {{0.1, 0.1}, {0.1, 0.1}}, 2);
    CHECK(std::hypot(q[0].x - q[1].x, q[0].y - (1 - q[1].y)) < 0.05);

    const std::vector<ShapeDims> six(6, ShapeDims{0.08, 0.08});
    const auto g = sample_relation(RelationId::regular_grid, six, 3);
    CHECK(classify(unit_atom(RelationId::regular_grid, 6), unit_scene(six, g)));
}

TEST_CASE("impossible samples raise") {
    CHECK_THROWS_AS(sample_relation(RelationId::on_top_of, {{0.3, 0.3}, {0.1, 0.1}}, 1), UnsatisfiableSample);
    CHECK_THROWS_AS(sample_relation(RelationId::left_of, {{0.1, 0.1}}, 1), InvalidInput);
}

TEST_CASE("every relation yields classifier-positive samples") {
    for (auto rel : all_relations()) {
        CAPTURE(relation_name(rel));
        const auto data = gen_dataset(rel, 100, ShapeDistribution{}, default_arity_range(rel), 17);
        REQUIRE(data.size() == 100);
        for (const auto& s : data) {
            CHECK(classify(unit_atom(rel, s.shapes.size()), unit_scene(s.shapes, s.poses)));
            for (const auto& p : s.poses) {
                CHECK(p.x >= 0.0);
                CHECK(p.x <= 1.0);
                CHECK(p.y >= 0.0);
                CHECK(p.y <= 1.0);
            }
        }
    }
}

TEST_CASE("gen_dataset is deterministic and thread-count independent") {
    const auto a = gen_dataset(RelationId::left_of, 200, {}, {2, 2}, 5, {}, 1);
    const auto b = gen_dataset(RelationId::left_of, 200, {}, {2, 2}, 5, {}, 4);
    CHECK(a == b);
    std::string sa, sb;
    for (const auto& s : a) sa += to_json_line(s);
    for (const auto& s : b) sb += to_json_line(s);
    CHECK(sa == sb);
    const auto c = gen_dataset(RelationId::left_of, 200, {}, {2, 2}, 6, {}, 1);
    CHECK_FALSE(a == c);
}

TEST_CASE("sorted datasets use group sizes 3..5") {
    const auto data = gen_dataset(RelationId::sorted, 300, {}, {3, 5}, 9);
    std::set<size_t> sizes;
    for (const auto& s : data) sizes.insert(s.shapes.size());
    CHECK(sizes == std::set<size_t>{3, 4, 5});
}

TEST_CASE("near_front_edge samples cover the table width") {
    const auto data = gen_dataset(RelationId::near_front_edge, 1000, {}, {1, 1}, 4);
    double lo = 1, hi = 0;
    for (const auto& s : data) {
        lo = std::min(lo, s.poses[0].x);
        hi = std::max(hi, s.poses[0].x);
    }
    CHECK(hi - lo >= 0.8);
}

TEST_CASE("dataset records round-trip") {
    const auto data = gen_dataset(RelationId::aligned_in_vertical_line, 20, {}, {3, 5}, 1);
    const std::string path = "synthgen_roundtrip.jsonl";
    write_dataset(path, data);
    CHECK(read_dataset(path) == data);
    std::remove(path.c_str());
    CHECK_THROWS_AS(sample_from_json_line("{\"relation\": \"left_of\"}"), InvalidInput);
    CHECK_THROWS_AS(sample_from_json_line("not json"), InvalidInput);
}

TEST_CASE("arity validation") {
    CHECK_THROWS_AS(gen_dataset(RelationId::left_of, 10, {}, {3, 3}, 1), InvalidInput);
    CHECK_THROWS_AS(gen_dataset(RelationId::sorted, 10, {}, {2, 4}, 1), InvalidInput);
    CHECK_THROWS_AS(gen_dataset(RelationId::sorted, 0, {}, {3, 4}, 1), InvalidInput);
}
