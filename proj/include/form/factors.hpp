#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "form/energy.hpp"
#include "form/mlp.hpp"
#include "form/relations.hpp"
#include "form/schedule.hpp"
#include "form/synthgen.hpp"

namespace form {

/// Sampler coordinates: x,y = 6u - 3 so that (z + 3) / 6 returns to the
/// table, theta = z / 10.
inline constexpr double kPosScale = 6.0;
inline constexpr double kPosShift = 3.0;
inline constexpr double kThetaScale = 10.0;

void encode_pose(const Pose& p, double* z);
Pose decode_pose(const double* z);
PoseVector encode_poses(const std::vector<Pose>& poses);
std::vector<Pose> decode_poses(const PoseVector& z);

/// sqrt(1 - alpha_bar_t) * grad of the relation energy (table coordinates).
PoseVector analytic_eps(RelationId rel, const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses, size_t t,
                        const NoiseSchedule& schedule, const Thresholds& th = {}, const EnergyOptions& opt = {});

enum class Backend { analytic, learned };

/// Per-relation noise predictor over the sampler coordinates of its
/// arguments.
class FactorModel {
  public:
    virtual ~FactorModel() = default;

    virtual RelationId relation() const = 0;
    virtual Backend backend() const = 0;

    /// `z` and `out` hold `batch` rows of `dim` = 3 * shapes.size() values.
    virtual void eps_batch(const double* z, size_t batch, const std::vector<ShapeDims>& shapes, size_t t,
                           const NoiseSchedule& schedule, double* out) const = 0;

    PoseVector eps(const PoseVector& z, const std::vector<ShapeDims>& shapes, size_t t,
                   const NoiseSchedule& schedule) const;
};

/// Stiffness of analytic factors: kappa_t = stiffness / (1 - alpha_bar_t + floor).
struct AnalyticOptions {
    Thresholds thresholds;
    double margin_frac = 0.3;  // hinge tightening as a fraction of align_tol / angle_tol
    double stiffness = 18.0;
    double floor = 1e-4;

    EnergyOptions energy_options() const;
    double kappa(size_t t, const NoiseSchedule& schedule) const;
};

/// Score of N(z; 0, I) * exp(-kappa_t * E(x(sqrt(alpha_bar_t) z))):
///   eps = sqrt(1 - alpha_bar_t) * z + kappa_t * sqrt(alpha_bar_t) * J^T analytic_eps(x).
class AnalyticFactor final : public FactorModel {
  public:
    AnalyticFactor(RelationId rel, AnalyticOptions opt = {});

    RelationId relation() const override { return rel_; }
    Backend backend() const override { return Backend::analytic; }
    void eps_batch(const double* z, size_t batch, const std::vector<ShapeDims>& shapes, size_t t,
                   const NoiseSchedule& schedule, double* out) const override;

    const AnalyticOptions& options() const { return opt_; }

  private:
    RelationId rel_;
    AnalyticOptions opt_;
};

/// Fixed-arity learned factor wrapping an MLP denoiser.
class LearnedFactor final : public FactorModel {
  public:
    LearnedFactor(RelationId rel, std::shared_ptr<const MlpDenoiser> net);

    RelationId relation() const override { return rel_; }
    Backend backend() const override { return Backend::learned; }
    void eps_batch(const double* z, size_t batch, const std::vector<ShapeDims>& shapes, size_t t,
                   const NoiseSchedule& schedule, double* out) const override;

    const MlpDenoiser& network() const { return *net_; }

  private:
    RelationId rel_;
    std::shared_ptr<const MlpDenoiser> net_;
};

/// Variable-arity learned factor: a two-object denoiser applied to each
/// consecutive pair of the canonical order (width-descending for `sorted`,
/// argument order otherwise). Each pair is one factor, so an object's output
/// is the sum over the pairs that contain it.
class PairChainFactor final : public FactorModel {
  public:
    PairChainFactor(RelationId rel, std::shared_ptr<const MlpDenoiser> pair_net);

    RelationId relation() const override { return rel_; }
    Backend backend() const override { return Backend::learned; }
    void eps_batch(const double* z, size_t batch, const std::vector<ShapeDims>& shapes, size_t t,
                   const NoiseSchedule& schedule, double* out) const override;

    const MlpDenoiser& network() const { return *net_; }

    /// Canonical chain order of the arguments.
    static std::vector<size_t> chain_order(RelationId rel, const std::vector<ShapeDims>& shapes);
    /// Object index pairs the factor couples, first before second in chain order.
    static std::vector<std::pair<size_t, size_t>> chain_pairs(RelationId rel, const std::vector<ShapeDims>& shapes);
    /// The coupled pairs of every sample, as two-object samples for training.
    static std::vector<RelationSample> pair_dataset(const std::vector<RelationSample>& data);

  private:
    RelationId rel_;
    std::shared_ptr<const MlpDenoiser> net_;
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
    size_t epochs = 200;
    size_t batch_size = 64;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    Optimizer optimizer = Optimizer::sgd;
    uint64_t seed = 0;
    size_t schedule_steps = 1500;
    MlpShape shape;
    /// Cosine decay of the learning rate to this fraction at the last epoch.
    double final_lr_fraction = 1.0;
    /// Decay of the weight moving average that is returned; 0 returns the
    /// last iterate.
    double ema_decay = 0.0;
    /// Independent noise draws per sample and epoch.
    size_t noise_draws = 1;
    std::function<void(size_t epoch, double loss)> on_epoch;

    void validate() const;
};

struct TrainResult {
    std::shared_ptr<MlpDenoiser> network;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> epoch_losses;
};

/// Denoising loss E||eps - eps_net(sqrt(ab_t) z + sqrt(1 - ab_t) eps, g, t)||^2
/// averaged per component, minimized by minibatch gradient descent.
/// Variable-arity relations train the two-object chain denoiser on
/// consecutive pairs.
TrainResult train(RelationId rel, const std::vector<RelationSample>& data, const TrainConfig& cfg);

/// Mean per-component denoising loss on `data` with noise drawn from `seed`.
double evaluate_loss(const MlpDenoiser& net, const std::vector<RelationSample>& data, size_t schedule_steps,
                     uint64_t seed);

/// Wraps a trained network as the factor for `rel`.
std::shared_ptr<FactorModel> make_learned_factor(RelationId rel, std::shared_ptr<const MlpDenoiser> net);

using ModelMap = std::map<RelationId, std::shared_ptr<const FactorModel>>;

/// Analytic factors for every relation.
ModelMap analytic_models(const AnalyticOptions& opt = {});

}  // namespace form
