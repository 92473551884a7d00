#include "form/eval.hpp"

#include <cstdio>
#include <sstream>

namespace form {

FeasibilityReport feasibility_report(const Scene& scene) {
    if (!scene.poses) throw InvalidInput("feasibility requires a scene with poses");
    scene.validate();
    const size_t n = scene.objects.size();
    FeasibilityReport r;
    r.feasible.assign(n, true);
    if (n == 0) return r;
    std::vector<OrientedBox> boxes;
    boxes.reserve(n);
    for (size_t i = 0; i < n; ++i) boxes.push_back(to_oriented_box(scene.objects[i], (*scene.poses)[i], scene.table));
    for (size_t i = 0; i < n; ++i) {
        const Aabb bb = aabb_of(boxes[i]);
        if (bb.right < 0.0 || bb.left > 1.0 || bb.top < 0.0 || bb.bottom > 1.0) {
            r.feasible[i] = false;
            r.off_table.push_back(scene.objects[i].name);
        }
        for (size_t j = i + 1; j < n; ++j) {
            if (overlap(boxes[i], boxes[j])) {
                r.feasible[i] = r.feasible[j] = false;
                r.colliding_pairs.emplace_back(scene.objects[i].name, scene.objects[j].name);
            }
        }
    }
    size_t ok = 0;
    for (bool f : r.feasible) ok += f;
    r.fraction = static_cast<double>(ok) / static_cast<double>(n);
    return r;
}

double feasibility(const Scene& scene) { return feasibility_report(scene).fraction; }

AtomReport atom_report(const Scene& scene, const GroundGraph& graph, const Thresholds& th) {
    if (!scene.poses) throw InvalidInput("scoring relations requires a scene with poses");
    AtomReport r;
    if (graph.empty()) {
        r.warnings.push_back("empty graph: score defined as 1");
        return r;
    }
    size_t ok = 0;
    for (const auto& a : graph.atoms()) {
        validate_atom(a, scene);
        const bool v = classify(a, scene, th);
        ok += v;
        r.per_atom.emplace_back(a, v);
    }
    r.fraction = static_cast<double>(ok) / static_cast<double>(graph.size());
    return r;
}

double functionality(const Scene& scene, const GroundGraph& reference, const Thresholds& th) {
    return atom_report(scene, reference, th).fraction;
}

double satisfaction(const Scene& scene, const GroundGraph& proposed, const Thresholds& th) {
    return atom_report(scene, proposed, th).fraction;
}

EvalReport evaluate(const Scene& scene, const GroundGraph* proposed, const GroundGraph* reference,
                    const Thresholds& th) {
    EvalReport r;
    const FeasibilityReport f = feasibility_report(scene);
    r.feasibility = f.fraction;
    r.colliding_pairs = f.colliding_pairs;
    for (const auto& name : f.off_table) r.warnings.push_back("off the table: " + name);
    if (reference) {
        AtomReport a = atom_report(scene, *reference, th);
        r.functionality = a.fraction;
        for (auto& w : a.warnings) r.warnings.push_back("reference: " + w);
        if (!proposed) r.per_atom = std::move(a.per_atom);
    }
    if (proposed) {
        AtomReport a = atom_report(scene, *proposed, th);
        r.satisfaction = a.fraction;
        for (auto& w : a.warnings) r.warnings.push_back("proposed: " + w);
        r.per_atom = std::move(a.per_atom);
    }
    return r;
}

std::string format_report(const EvalReport& r) {
    std::ostringstream os;
    char buf[64];
    auto line = [&](const char* name, double v) {
        std::snprintf(buf, sizeof buf, "%-14s %8.4f\n", name, v);
        os << buf;
    };
    os << "metric            value\n";
    line("feasibility", r.feasibility);
    if (r.functionality) line("functionality", *r.functionality);
    if (r.satisfaction) line("satisfaction", *r.satisfaction);
    for (const auto& [a, b] : r.colliding_pairs) os << "collision: " << a << " / " << b << "\n";
    for (const auto& [atom, ok] : r.per_atom) {
        if (!ok) os << "unsatisfied: " << atom.to_string() << "\n";
    }
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    return os.str();
}

}  // namespace form
