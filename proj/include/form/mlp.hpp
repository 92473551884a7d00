#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace form {

struct MlpShape {
    size_t objects = 1;
    size_t hidden = 256;
    size_t encoder_hidden = 128;
    size_t time_dim = 256;
    size_t time_hidden = 1024;
    size_t backbone_layers = 3;

    bool operator==(const MlpShape&) const = default;
};

/// Dense layer y = W x + b with gradient and optimizer buffers.
struct Linear {
    Eigen::MatrixXf W;
    Eigen::VectorXf b;
    Eigen::MatrixXf gW, m1W, m2W;
    Eigen::VectorXf gb, m1b, m2b;

    Linear() = default;
    Linear(size_t in, size_t out);
};

/// Noise predictor: shape and pose encoders, sinusoidal time encoder,
/// SiLU backbone over the concatenated features, zero-initialized decoder.
/// Columns are batch items.
class MlpDenoiser {
  public:
    MlpDenoiser(const MlpShape& shape, uint64_t seed);

    const MlpShape& shape() const { return shape_; }
    size_t objects() const { return shape_.objects; }
    size_t parameter_count() const;

    /// shapes: 2k x B normalized (length, width); z: 3k x B sampler
    /// coordinates; tau: B diffusion times on a 0..1000 scale.
    Eigen::MatrixXf forward(const Eigen::MatrixXf& shapes, const Eigen::MatrixXf& z, const std::vector<float>& tau) const;

    /// Forward plus backward of the mean squared error against `target`,
    /// accumulating gradients. Returns the loss.
    double loss_and_grad(const Eigen::MatrixXf& shapes, const Eigen::MatrixXf& z, const std::vector<float>& tau,
                         const Eigen::MatrixXf& target);

    void zero_grad();
    std::vector<std::pair<std::string, Linear*>> layers();
    std::vector<std::pair<std::string, const Linear*>> layers() const;

    static Eigen::MatrixXf time_embedding(const std::vector<float>& tau, size_t dim);

    /// Checkpoint: "FORMCKPT", u32 version, u32-length metadata JSON, u32
    /// entry count, entries (u32-length name, u32 ndim, u64 dims, u64 byte
    /// offset), u64 data byte length, little-endian float32 data. The
    /// metadata gains an "architecture" object used to rebuild the network.
    void save(const std::string& path, const std::string& metadata_json) const;
    static std::pair<std::shared_ptr<MlpDenoiser>, std::string> load(const std::string& path);

  private:
    struct Cache;
    Eigen::MatrixXf run(const Eigen::MatrixXf& shapes, const Eigen::MatrixXf& z, const std::vector<float>& tau,
                        Cache* cache) const;

    MlpShape shape_;
    Linear shape1_, shape2_, pose1_, pose2_, time1_, time2_;
    std::vector<Linear> backbone_;
    Linear decoder_;
};

/// Input scale applied to normalized shape dimensions.
inline constexpr float kShapeFeatureScale = 6.0f;

}  // namespace form
