#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "form/eval.hpp"
#include "form/rng.hpp"

using namespace form;

namespace {

Scene boxes(const std::vector<std::array<double, 5>>& spec) {  // x, y, theta, length, width
    Scene s;
    s.table = {1.0, 1.0};
    std::vector<Pose> poses;
    for (size_t i = 0; i < spec.size(); ++i) {
        const auto& b = spec[i];
        s.objects.push_back({"o" + std::to_string(i), "box", b[3], b[4]});
        poses.push_back({b[0], b[1], b[2]});
    }
    s.poses = poses;
    return s;
}

// Independent oracle: rectangle corners from the pose, then the
// separating-axis test over the four edge normals.
using Quad = std::array<std::array<double, 2>, 4>;

Quad quad(const ObjectShape& o, const Pose& p, const TableFrame& t) {
    const double hx = o.length / t.length / 2, hy = o.width / t.width / 2;
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    Quad q;
    const double sx[4] = {1, -1, -1, 1}, sy[4] = {1, 1, -1, -1};
    for (int k = 0; k < 4; ++k) {
        q[k] = {p.x + c * sx[k] * hx - s * sy[k] * hy, p.y + s * sx[k] * hx + c * sy[k] * hy};
    }
    return q;
}

bool separated_along(const Quad& a, const Quad& b, double ax, double ay) {
    auto range = [&](const Quad& q) {
        double lo = 1e300, hi = -1e300;
        for (const auto& v : q) {
            const double d = v[0] * ax + v[1] * ay;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        return std::pair{lo, hi};
    };
    const auto [alo, ahi] = range(a);
    const auto [blo, bhi] = range(b);
    return ahi <= blo + 1e-9 || bhi <= alo + 1e-9;
}

bool oracle_overlap(const Quad& a, const Quad& b) {
    for (const Quad* q : {&a, &b}) {
        for (int k = 0; k < 2; ++k) {
            const double ex = (*q)[k + 1][0] - (*q)[k][0], ey = (*q)[k + 1][1] - (*q)[k][1];
            if (separated_along(a, b, -ey, ex)) return false;
        }
    }
    return true;
}

double oracle_feasibility(const Scene& s) {
    const size_t n = s.objects.size();
    std::vector<Quad> q;
    for (size_t i = 0; i < n; ++i) q.push_back(quad(s.objects[i], (*s.poses)[i], s.table));
    size_t ok = 0;
    for (size_t i = 0; i < n; ++i) {
        bool good = true;
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& v : q[i]) {
            xmin = std::min(xmin, v[0]);
            xmax = std::max(xmax, v[0]);
            ymin = std::min(ymin, v[1]);
            ymax = std::max(ymax, v[1]);
        }
        if (xmax < 0 || xmin > 1 || ymax < 0 || ymin > 1) good = false;
        for (size_t j = 0; j < n && good; ++j) {
            if (j != i && oracle_overlap(q[i], q[j])) good = false;
        }
        ok += good;
    }
    return static_cast<double>(ok) / static_cast<double>(n);
}

Scene clutter(uint64_t seed, size_t n) {
    Rng rng(seed);
    Scene s;
    s.table = {1.2, 0.8};
    std::vector<Pose> poses;
    for (size_t i = 0; i < n; ++i) {
        s.objects.push_back({"o" + std::to_string(i), "box", uniform(rng, 0.05, 0.3), uniform(rng, 0.05, 0.3)});
        poses.push_back({uniform(rng, -0.1, 1.1), uniform(rng, -0.1, 1.1), uniform(rng, -kPi, kPi)});
    }
    s.poses = poses;
    return s;
}

}  // namespace

TEST_CASE("feasibility of disjoint and overlapping boxes") {
    CHECK(feasibility(boxes({{0.2, 0.2, 0, 0.1, 0.1}, {0.5, 0.5, 0, 0.1, 0.1}, {0.8, 0.8, 0, 0.1, 0.1}})) == 1.0);
    const Scene s = boxes({{0.2, 0.2, 0, 0.2, 0.2}, {0.25, 0.25, 0, 0.2, 0.2}, {0.7, 0.7, 0, 0.1, 0.1},
                           {0.85, 0.2, 0, 0.1, 0.1}});
    const auto r = feasibility_report(s);
    CHECK(r.fraction == 0.5);
    REQUIRE(r.colliding_pairs.size() == 1);
    CHECK(r.colliding_pairs[0] == std::pair<std::string, std::string>{"o0", "o1"});
}

TEST_CASE("objects entirely off the table are infeasible") {
    const auto r = feasibility_report(boxes({{1.3, 0.5, 0, 0.1, 0.1}, {0.98, 0.5, 0, 0.1, 0.1}}));
    CHECK(r.fraction == 0.5);
    CHECK(r.off_table == std::vector<std::string>{"o0"});
}

TEST_CASE("feasibility matches the all-pairs oracle on random clutter") {
    for (uint64_t seed = 1; seed <= 300; ++seed) {
        const Scene s = clutter(seed, 10);
        CHECK(feasibility(s) == doctest::Approx(oracle_feasibility(s)).epsilon(1e-12));
    }
}

TEST_CASE("feasibility is invariant to object order") {
    for (uint64_t seed = 1; seed <= 50; ++seed) {
        Scene s = clutter(seed, 8);
        const double base = feasibility(s);
        std::vector<size_t> perm(8);
        for (size_t i = 0; i < 8; ++i) perm[i] = i;
        Rng rng(seed + 100);
        std::shuffle(perm.begin(), perm.end(), rng);
        Scene p = s;
        for (size_t i = 0; i < 8; ++i) {
            p.objects[i] = s.objects[perm[i]];
            (*p.poses)[i] = (*s.poses)[perm[i]];
        }
        CHECK(feasibility(p) == base);
    }
}

TEST_CASE("empty scene is fully feasible") {
    Scene s;
    s.poses = std::vector<Pose>{};
    CHECK(feasibility(s) == 1.0);
}

TEST_CASE("feasibility requires poses") {
    Scene s = boxes({{0.5, 0.5, 0, 0.1, 0.1}});
    s.poses.reset();
    CHECK_THROWS_AS(feasibility(s), InvalidInput);
}

TEST_CASE("annotated graphs are fully satisfied") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        const Scene s = clutter(seed, 6);
        const GroundGraph g = annotate(s);
        if (g.empty()) continue;
        CHECK(functionality(s, g) == 1.0);
        CHECK(satisfaction(s, g) == 1.0);
    }
}

TEST_CASE("one false atom among nine true scores 0.9") {
    const Scene s = boxes({{0.2, 0.2, 0, 0.1, 0.1}, {0.5, 0.5, 0, 0.1, 0.1}, {0.8, 0.8, 0, 0.1, 0.1},
                           {0.5, 0.9, 0, 0.1, 0.1}});
    const GroundGraph all = annotate(s);
    REQUIRE(all.size() >= 9);
    GroundGraph g;
    for (size_t i = 0; i < 9; ++i) g.add(all.atoms()[i]);
    const GroundAtom false_atom{RelationId::near_right_edge, {"o0"}};
    REQUIRE_FALSE(classify(false_atom, s));
    g.add(false_atom);
    CHECK(satisfaction(s, g) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("empty reference scores one with a warning") {
    const Scene s = boxes({{0.5, 0.5, 0, 0.1, 0.1}});
    const auto r = atom_report(s, GroundGraph{});
    CHECK(r.fraction == 1.0);
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("functionality is monotone in the reference") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        const Scene s = clutter(seed, 6);
        GroundGraph ref;
        ref.add({RelationId::near_front_edge, {"o0"}});
        ref.add({RelationId::left_of, {"o1", "o2"}});
        const double base = functionality(s, ref);
        for (const auto& atom : std::vector<GroundAtom>{{RelationId::central_row, {"o3"}},
                                                        {RelationId::right_half, {"o4"}},
                                                        {RelationId::vertically_aligned, {"o4", "o5"}}}) {
            if (ref.contains(atom)) continue;
            GroundGraph more = ref;
            more.add(atom);
            if (classify(atom, s)) CHECK(functionality(s, more) >= base);
            else CHECK(functionality(s, more) <= base);
        }
    }
}

TEST_CASE("report fractions agree with their per-item lists") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        const Scene s = clutter(seed, 7);
        GroundGraph g;
        g.add({RelationId::near_front_edge, {"o0"}});
        g.add({RelationId::left_of, {"o1", "o2"}});
        g.add({RelationId::centered_table, {"o3"}});
        const EvalReport r = evaluate(s, &g, &g);
        size_t ok = 0;
        for (const auto& [atom, v] : r.per_atom) ok += v;
        CHECK(*r.satisfaction == doctest::Approx(static_cast<double>(ok) / 3.0).epsilon(1e-12));
        CHECK(*r.functionality == *r.satisfaction);
        const auto f = feasibility_report(s);
        size_t good = 0;
        for (bool b : f.feasible) good += b;
        CHECK(r.feasibility == doctest::Approx(static_cast<double>(good) / 7.0).epsilon(1e-12));
        for (double v : {r.feasibility, *r.functionality, *r.satisfaction}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("missing reference omits functionality") {
    const Scene s = boxes({{0.5, 0.5, 0, 0.1, 0.1}});
    const EvalReport r = evaluate(s, nullptr, nullptr);
    CHECK_FALSE(r.functionality.has_value());
    CHECK_FALSE(r.satisfaction.has_value());
    CHECK(format_report(r).find("functionality") == std::string::npos);
}

TEST_CASE("atoms naming unknown objects are rejected") {
    const Scene s = boxes({{0.5, 0.5, 0, 0.1, 0.1}});
    GroundGraph g;
    g.add({RelationId::near_front_edge, {"ghost"}});
    CHECK_THROWS_AS(satisfaction(s, g), InvalidInput);
}
