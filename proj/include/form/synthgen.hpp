#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "form/energy.hpp"
#include "form/relations.hpp"
#include "form/rng.hpp"

namespace form {

class UnsatisfiableSample : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr size_t kMaxSampleAttempts = 10000;

/// One positive example: normalized shapes and poses satisfying `relation`
/// over all objects in argument order.
struct RelationSample {
    RelationId relation{};
    std::vector<ShapeDims> shapes;
    std::vector<Pose> poses;

    bool operator==(const RelationSample&) const = default;
};

struct ShapeDistribution {
    std::pair<double, double> length_range{0.05, 0.12};
    std::pair<double, double> width_range{0.05, 0.12};
    double aspect_jitter = 0.1;  // per-member multiplicative jitter for equal-shape groups

    void validate() const;
};

/// Scene on a unit table whose objects o0, o1, ... carry the given shapes.
Scene unit_scene(const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses);

/// Argument names o0, o1, ... matching unit_scene.
GroundAtom unit_atom(RelationId rel, size_t count);

/// Poses satisfying `rel` over the shapes (argument order). Direct geometric
/// construction, retried with fresh draws up to kMaxSampleAttempts.
/// Throws UnsatisfiableSample when no attempt passes the classifier.
std::vector<Pose> sample_relation(RelationId rel, const std::vector<ShapeDims>& shapes, uint64_t seed,
                                  const Thresholds& th = {});

/// Shapes for one sample of `rel` with `count` objects.
std::vector<ShapeDims> draw_shapes(RelationId rel, size_t count, const ShapeDistribution& dist, Rng& rng);

/// Default group sizes: the fixed arity, or 3..5 for variable arity.
std::pair<size_t, size_t> default_arity_range(RelationId rel);

/// n classifier-verified samples; deterministic in `seed` regardless of the
/// thread count (0 = hardware concurrency).
std::vector<RelationSample> gen_dataset(RelationId rel, size_t n, const ShapeDistribution& dist,
                                        std::pair<size_t, size_t> arity_range, uint64_t seed,
                                        const Thresholds& th = {}, unsigned threads = 0);

std::string to_json_line(const RelationSample& s);
RelationSample sample_from_json_line(const std::string& line);
void write_dataset(const std::string& path, const std::vector<RelationSample>& data);
std::vector<RelationSample> read_dataset(const std::string& path);

}  // namespace form
