#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "form/relations.hpp"

namespace form {

struct FeasibilityReport {
    double fraction = 1.0;
    std::vector<bool> feasible;  // per object
    std::vector<std::pair<std::string, std::string>> colliding_pairs;
    std::vector<std::string> off_table;
};

/// Fraction of objects whose box overlaps no other box and is not entirely
/// off the table. An empty scene scores 1.
FeasibilityReport feasibility_report(const Scene& scene);
double feasibility(const Scene& scene);

struct AtomReport {
    double fraction = 1.0;
    std::vector<std::pair<GroundAtom, bool>> per_atom;
    std::vector<std::string> warnings;
};

/// Fraction of atoms that classify true. An empty graph scores 1 with a warning.
AtomReport atom_report(const Scene& scene, const GroundGraph& graph, const Thresholds& th = {});
double functionality(const Scene& scene, const GroundGraph& reference, const Thresholds& th = {});
double satisfaction(const Scene& scene, const GroundGraph& proposed, const Thresholds& th = {});

struct EvalReport {
    double feasibility = 1.0;
    std::optional<double> functionality;
    std::optional<double> satisfaction;
    std::vector<std::pair<GroundAtom, bool>> per_atom;  // proposed graph when given, else reference
    std::vector<std::pair<std::string, std::string>> colliding_pairs;
    std::vector<std::string> warnings;
};

EvalReport evaluate(const Scene& scene, const GroundGraph* proposed, const GroundGraph* reference,
                    const Thresholds& th = {});

/// Human-readable table of the report.
std::string format_report(const EvalReport& r);

}  // namespace form
