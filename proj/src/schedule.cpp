#include "form/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "form/geometry.hpp"

namespace form {

NoiseSchedule NoiseSchedule::cosine(size_t T, double s) {
    if (T < 2) {
        throw InvalidInput("noise schedule needs at least 2 steps");
    }
    auto f = [&](double t) {
        const double c = std::cos((t / static_cast<double>(T) + s) / (1.0 + s) * kPi / 2.0);
        return c * c;
    };
    NoiseSchedule out;
    out.beta_.resize(T);
    out.alpha_.resize(T);
    out.alpha_bar_.resize(T);
    out.beta_tilde_.resize(T);
    double prev_bar = 1.0;
    for (size_t i = 0; i < T; ++i) {
        const double t = static_cast<double>(i + 1);
        const double beta = std::min(1.0 - f(t) / f(t - 1.0), 0.999);
        out.beta_[i] = beta;
        out.alpha_[i] = 1.0 - beta;
        out.alpha_bar_[i] = prev_bar * (1.0 - beta);
        out.beta_tilde_[i] = beta * (1.0 - prev_bar) / (1.0 - out.alpha_bar_[i]);
        prev_bar = out.alpha_bar_[i];
    }
    return out;
}

void NoiseSchedule::check_level(size_t t) const {
    if (t > steps()) {
        throw std::out_of_range("noise level " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
    }
}

double NoiseSchedule::beta_at(size_t t) const {
    check_level(t);
    return t == 0 ? 0.0 : beta_[t - 1];
}

double NoiseSchedule::alpha_at(size_t t) const {
    check_level(t);
    return t == 0 ? 1.0 : alpha_[t - 1];
}

double NoiseSchedule::alpha_bar_at(size_t t) const {
    check_level(t);
    return t == 0 ? 1.0 : alpha_bar_[t - 1];
}

double NoiseSchedule::beta_tilde_at(size_t t) const {
    check_level(t);
    return t == 0 ? 0.0 : beta_tilde_[t - 1];
}

NoiseSchedule::Constants NoiseSchedule::constants(size_t t, PosteriorVariance var) const {
    check_level(t);
    if (t == 0) {
        throw std::out_of_range("reverse-kernel constants need a level >= 1");
    }
    const double a = alpha_[t - 1];
    const double b = beta_[t - 1];
    const double v = (var == PosteriorVariance::beta_tilde || t == 1) ? beta_tilde_[t - 1] : b;
    return Constants{1.0 / std::sqrt(a), b / std::sqrt(1.0 - alpha_bar_[t - 1]), std::sqrt(v) * std::sqrt(a)};
}

namespace {

void check_sizes(const PoseVector& a, const PoseVector& b) {
    if (a.size() != b.size()) {
        throw InvalidInput("pose vector sizes differ");
    }
}

}  // namespace

PoseVector forward_noise(const PoseVector& p0, size_t t, const PoseVector& eps, const NoiseSchedule& schedule) {
    check_sizes(p0, eps);
    const double ab = schedule.alpha_bar_at(t);
    const double sa = std::sqrt(ab);
    const double sn = std::sqrt(1.0 - ab);
    PoseVector out(p0.size());
    for (size_t i = 0; i < p0.size(); ++i) {
        out[i] = sa * p0[i] + sn * eps[i];
    }
    return out;
}

PoseVector reverse_step(const PoseVector& pt, size_t t, const PoseVector& eps_hat, const NoiseSchedule& schedule,
                        const PoseVector& noise, PosteriorVariance var) {
    check_sizes(pt, eps_hat);
    check_sizes(pt, noise);
    const auto k = schedule.constants(t, var);
    PoseVector out(pt.size());
    for (size_t i = 0; i < pt.size(); ++i) {
        out[i] = k.B * (pt[i] - k.C * eps_hat[i] + k.D * noise[i]);
    }
    return out;
}

PoseVector ula_step(const PoseVector& pt, size_t t, const PoseVector& composite_eps, const NoiseSchedule& schedule,
                    double noise_scale, const PoseVector& noise, PosteriorVariance var) {
    check_sizes(pt, composite_eps);
    check_sizes(pt, noise);
    const auto k = schedule.constants(t, var);
    PoseVector out(pt.size());
    for (size_t i = 0; i < pt.size(); ++i) {
        out[i] = pt[i] - k.C * composite_eps[i] + noise_scale * k.D * noise[i];
    }
    return out;
}

}  // namespace form
