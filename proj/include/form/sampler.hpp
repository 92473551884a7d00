#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "form/energy.hpp"
#include "form/factors.hpp"
#include "form/relations.hpp"
#include "form/schedule.hpp"

namespace form {

struct SamplerConfig {
    size_t samples = 1;
    size_t mcmc_steps = 5;         // M: transitions per noise level (M - 1 ULA steps, then one reverse step)
    double ula_noise_scale = 1.0;  // 1 or sqrt(2)
    bool clamp_to_unit = true;
    uint64_t seed = 0;
    PosteriorVariance variance = PosteriorVariance::beta_tilde;
    /// Per-object mean over incident factors; false gives the raw sum.
    bool average_factors = true;
    /// Scene-wide keep-on-table and non-overlap terms.
    bool scene_terms = true;
    double scene_gap = 0.005;
    double scene_stiffness = 8.0;
    /// Scene terms are scaled by alpha_bar_t^ramp so objects can pass
    /// through each other while the layout is still forming.
    double scene_ramp = 8.0;
    unsigned threads = 1;  // 0 = hardware concurrency

    void validate() const;
};

/// One factor of the graph resolved against a scene.
struct BoundFactor {
    const FactorModel* model = nullptr;
    std::vector<size_t> args;
    std::vector<ShapeDims> shapes;
};

/// Graph and scene prepared for sampling.
class CompositeScore {
  public:
    /// Throws InvalidInput when an atom names an unknown object or has no model.
    CompositeScore(const GroundGraph& graph, const Scene& scene, const ModelMap& models, const SamplerConfig& cfg);

    size_t objects() const { return shapes_.size(); }
    const std::vector<BoundFactor>& factors() const { return factors_; }
    const std::vector<ShapeDims>& shapes() const { return shapes_; }

    /// Composite noise prediction for `batch` stacked pose vectors in model
    /// coordinates.
    void eps_batch(const double* z, size_t batch, size_t t, const NoiseSchedule& schedule, double* out) const;
    PoseVector eps(const PoseVector& z, size_t t, const NoiseSchedule& schedule) const;

  private:
    std::vector<BoundFactor> factors_;
    std::vector<ShapeDims> shapes_;
    std::vector<double> degree_;
    SceneTerms terms_;
    bool average_ = true;
    bool scene_ = true;
    double scene_stiffness_ = 0.0;
    double scene_ramp_ = 0.0;
};

struct SampleResult {
    std::vector<std::vector<Pose>> poses;  // one pose list per sample, scene object order
    std::vector<std::string> warnings;
};

/// Annealed sampling from the product of the graph's factors: start from
/// N(0, I) at level T; at each level t = T..1 run M - 1 ULA steps with the
/// composite noise prediction and one reverse step to level t - 1. Poses
/// are mapped back to the table, angles wrapped and positions clamped to
/// [0, 1] when requested. Deterministic in cfg.seed for any thread count.
SampleResult sample(const GroundGraph& graph, const Scene& scene, const ModelMap& models,
                    const NoiseSchedule& schedule, const SamplerConfig& cfg);

/// Final model-coordinate state to table poses.
std::vector<Pose> finalize_poses(const PoseVector& z, bool clamp_to_unit);

}  // namespace form
