#pragma once

#include <array>
#include <utility>
#include <vector>

#include "form/geometry.hpp"
#include "form/relations.hpp"

namespace form {

/// Normalized (length, width) of an object, i.e. its extents divided by the
/// table length and width.
using ShapeDims = std::array<double, 2>;

/// Most square factorization rows x cols = n with rows <= cols, used for the
/// row-major argument layout of regular_grid.
std::pair<size_t, size_t> grid_shape(size_t n);

std::vector<ShapeDims> normalized_shapes(const std::vector<ObjectShape>& objects, const TableFrame& table);

/// Tightening applied to every hinge limit. Zero gives the classifier's own
/// boundaries; the sampler uses a positive margin so samples land strictly
/// inside the satisfied set.
struct EnergyOptions {
    double margin = 0.0;        // normalized units
    double angle_margin = 0.0;  // radians
};

struct EnergyResult {
    double value = 0.0;
    std::vector<double> grad;  // d energy / d (x0, y0, theta0, x1, ...)
};

/// Squared-hinge energy of one relation over its arguments, in normalized
/// table coordinates. Non-negative; zero on the classifier's satisfied set.
double analytic_energy(RelationId rel, const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses,
                       const Thresholds& th = {}, const EnergyOptions& opt = {});

/// Energy plus its exact gradient with respect to the flattened poses.
EnergyResult analytic_energy_grad(RelationId rel, const std::vector<ShapeDims>& shapes,
                                  const std::vector<Pose>& poses, const Thresholds& th = {},
                                  const EnergyOptions& opt = {});

/// Scene-wide soft constraints used during sampling: boxes stay on the
/// table, and every pair not listed in `exempt` is pushed apart until its
/// separating-axis gap reaches `gap`.
struct SceneTerms {
    bool keep_on_table = true;
    bool separate = true;
    double gap = 0.005;
    std::vector<std::pair<size_t, size_t>> exempt;
};

EnergyResult scene_energy_grad(const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses,
                               const SceneTerms& terms);

}  // namespace form
