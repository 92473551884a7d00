#pragma once

#include <cstddef>
#include <vector>

namespace form {

enum class PosteriorVariance { beta, beta_tilde };

/// Cosine noise schedule over levels 0..T. Level 0 is clean data
/// (alpha_bar = 1); the stored arrays hold levels 1..T at index t - 1.
class NoiseSchedule {
  public:
    static NoiseSchedule cosine(size_t T, double s = 0.008);

    size_t steps() const { return beta_.size(); }

    // Array views, index i is level i + 1.
    const std::vector<double>& beta() const { return beta_; }
    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& alpha_bar() const { return alpha_bar_; }
    const std::vector<double>& beta_tilde() const { return beta_tilde_; }

    // Level accessors, t in [0, T]; level 0 gives alpha_bar = 1, beta = 0.
    double beta_at(size_t t) const;
    double alpha_at(size_t t) const;
    double alpha_bar_at(size_t t) const;
    double beta_tilde_at(size_t t) const;

    /// Reverse-kernel constants at level t in [1, T].
    struct Constants {
        double B = 0.0;  // 1 / sqrt(alpha_t)
        double C = 0.0;  // beta_t / sqrt(1 - alpha_bar_t)
        double D = 0.0;  // sqrt(var_t) * sqrt(alpha_t)
    };
    Constants constants(size_t t, PosteriorVariance var = PosteriorVariance::beta_tilde) const;

  private:
    void check_level(size_t t) const;

    std::vector<double> beta_, alpha_, alpha_bar_, beta_tilde_;
};

using PoseVector = std::vector<double>;

/// sqrt(alpha_bar_t) * p0 + sqrt(1 - alpha_bar_t) * eps.
PoseVector forward_noise(const PoseVector& p0, size_t t, const PoseVector& eps, const NoiseSchedule& schedule);

/// B_t * (p - C_t * eps_hat + D_t * noise). Level 1 adds no noise.
PoseVector reverse_step(const PoseVector& pt, size_t t, const PoseVector& eps_hat, const NoiseSchedule& schedule,
                        const PoseVector& noise, PosteriorVariance var = PosteriorVariance::beta_tilde);

/// p - C_t * eps + scale * D_t * noise, staying at level t.
PoseVector ula_step(const PoseVector& pt, size_t t, const PoseVector& composite_eps, const NoiseSchedule& schedule,
                    double noise_scale, const PoseVector& noise,
                    PosteriorVariance var = PosteriorVariance::beta_tilde);

}  // namespace form
