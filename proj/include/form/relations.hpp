#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "form/geometry.hpp"

namespace form {

class UnsupportedRelation : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class RelationId {
    // unary
    central_column,
    central_row,
    centered_table,
    left_half,
    right_half,
    front_half,
    back_half,
    near_left_edge,
    near_right_edge,
    near_front_edge,
    near_back_edge,
    // binary
    horizontally_aligned,
    vertically_aligned,
    horizontal_symmetry_on_table,
    vertical_symmetry_on_table,
    left_of,
    right_of,
    centered,
    on_top_of,
    // ternary: (axis object, a, b)
    vertical_line_symmetry,
    horizontal_line_symmetry,
    // variable arity
    aligned_in_horizontal_line,
    aligned_in_vertical_line,
    regular_grid,
    // extension
    sorted,
};

inline constexpr int kVariableArity = -1;
inline constexpr size_t kMinGroupSize = 3;
inline constexpr size_t kRelationCount = 25;

std::string_view relation_name(RelationId id);

/// Accepts canonical names and the legacy aliases (central_table,
/// *_symmetry_about_axis_obj). Throws UnsupportedRelation otherwise.
RelationId parse_relation(std::string_view name);
std::optional<RelationId> try_parse_relation(std::string_view name);

/// Fixed arity k in {1,2,3} or kVariableArity.
int arity(RelationId id);
bool is_variable_arity(RelationId id);

/// Binary relations whose truth does not depend on argument order.
bool is_symmetric(RelationId id);

/// The 24 library relations (without the `sorted` extension).
std::span<const RelationId> library_relations();
/// Library plus extensions.
std::span<const RelationId> all_relations();

/// Classifier thresholds, all in normalized table units (angles in radians).
struct Thresholds {
    double edge_near = 0.10;
    double align_tol = 0.03;
    double angle_tol = 0.10;
    double center_tol = 0.05;
    double overlap_frac = 0.5;
    double spacing_tol = 0.03;

    void validate() const;
};

struct GroundAtom {
    RelationId relation{};
    std::vector<std::string> args;

    bool operator==(const GroundAtom&) const = default;
    std::string to_string() const;
};

/// Insertion-ordered set of atoms.
class GroundGraph {
  public:
    GroundGraph() = default;
    explicit GroundGraph(std::vector<GroundAtom> atoms);

    /// Returns false when the atom is already present.
    bool add(GroundAtom atom);
    bool contains(const GroundAtom& atom) const;
    void remove_at(size_t index);

    const std::vector<GroundAtom>& atoms() const { return atoms_; }
    size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

    bool operator==(const GroundGraph&) const = default;

  private:
    std::vector<GroundAtom> atoms_;
};

struct Scene {
    TableFrame table;
    std::vector<ObjectShape> objects;
    std::optional<std::vector<Pose>> poses;
    std::optional<std::string> instruction;

    /// Index of the named object, or nullopt.
    std::optional<size_t> find(std::string_view name) const;
    size_t index_of(std::string_view name) const;  // throws InvalidInput
    void validate() const;
};

/// Validates arity, distinctness and that every argument names a scene object.
void validate_atom(const GroundAtom& atom, const Scene& scene);

bool classify(const GroundAtom& atom, const Scene& scene, const Thresholds& th = {});

/// Every true atom in the scene: unary over objects, binary over ordered
/// pairs, ternary over (axis, unordered pair), variable-arity relations as
/// maximal groups of at least three objects.
GroundGraph annotate(const Scene& scene, const Thresholds& th = {});

struct Conflict {
    GroundAtom first;
    GroundAtom second;
    size_t first_index = 0;
    size_t second_index = 0;
    std::string description;
};

/// Violations of the mutual-exclusion table.
std::vector<Conflict> check_conflicts(const GroundGraph& graph, const Scene& scene);

/// Scene objects that appear in no atom.
std::vector<std::string> check_completeness(const GroundGraph& graph, const Scene& scene);

}  // namespace form
