#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "form/geometry.hpp"
#include "form/rng.hpp"
#include "form/schedule.hpp"

using namespace form;

TEST_CASE("cosine schedule shape") {
    const auto s = NoiseSchedule::cosine(1500);
    CHECK(s.beta().size() == 1500);
    CHECK(s.alpha_bar()[0] > 0.99);
    CHECK(s.alpha_bar()[1499] < 0.01);
    for (size_t i = 0; i < 1500; ++i) {
        CHECK(s.beta()[i] > 0.0);
        CHECK(s.beta()[i] <= 0.999);
        CHECK(s.alpha_bar()[i] > 0.0);
        CHECK(s.alpha_bar()[i] < 1.0);
        if (i > 0) {
            CHECK(s.alpha_bar()[i] < s.alpha_bar()[i - 1]);
            CHECK(s.beta()[i] >= s.beta()[i - 1]);
        }
    }
    // Closed form of the unclipped part.
    auto f = [](double t, double T) {
        const double c = std::cos((t / T + 0.008) / 1.008 * kPi / 2);
        return c * c;
    };
    CHECK(s.alpha_bar()[99] == doctest::Approx(f(100, 1500) / f(0, 1500)).epsilon(1e-10));
    CHECK_THROWS_AS(NoiseSchedule::cosine(1), InvalidInput);
}

TEST_CASE("forward_noise") {
    const auto s = NoiseSchedule::cosine(300);
    const PoseVector p{0.3, -1.2, 2.0};
    const PoseVector zero(3, 0.0);
    const auto y = forward_noise(p, 50, zero, s);
    for (int i = 0; i < 3; ++i) {
        CHECK(y[i] == std::sqrt(s.alpha_bar_at(50)) * p[i]);
    }
    const PoseVector e{1.0, -1.0, 0.5};
    const auto y0 = forward_noise(p, 0, e, s);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(y0[i] - p[i]) <= std::sqrt(1 - s.alpha_bar()[0]) * 1.5 + 1e-12);
    }
    CHECK_THROWS_AS(forward_noise(p, 301, e, s), std::out_of_range);

    // Correlation at the last level.
    Rng rng(1);
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 1000; ++i) {
        const double x0 = gaussian(rng);
        const double xt = forward_noise({x0}, 299, {gaussian(rng)}, s)[0];
        sxy += x0 * xt;
        sxx += x0 * x0;
        syy += xt * xt;
    }
    CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.15);
}

TEST_CASE("reverse_step") {
    const auto s = NoiseSchedule::cosine(300);
    const PoseVector p{0.4, -0.7, 1.1};
    const PoseVector zero(3, 0.0);
    const auto r = reverse_step(p, 100, zero, s, zero);
    for (int i = 0; i < 3; ++i) {
        CHECK(r[i] == doctest::Approx(p[i] / std::sqrt(s.alpha_at(100))));
    }
    const PoseVector e{0.3, 1.5, -0.8};
    const auto x1 = forward_noise(p, 1, e, s);
    const PoseVector big_noise{5.0, 5.0, 5.0};
    const auto back = reverse_step(x1, 1, e, s, big_noise);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(back[i] - p[i]) < 1e-6);
    }
    for (size_t t = 1; t <= 300; ++t) {
        for (auto v : {PosteriorVariance::beta, PosteriorVariance::beta_tilde}) {
            const auto k = s.constants(t, v);
            CHECK(std::isfinite(k.B));
            CHECK(k.B > 0);
            CHECK(k.C > 0);
            CHECK(std::isfinite(k.D));
            CHECK(k.D >= 0);
            if (t > 1) {
                CHECK(k.D > 0);
            }
        }
    }
}

TEST_CASE("ula_step relations to reverse_step") {
    const auto s = NoiseSchedule::cosine(300);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const size_t t = 1 + static_cast<size_t>(uniform(rng, 0, 299.99));
        PoseVector p(6), e(6), xi(6);
        for (int k = 0; k < 6; ++k) {
            p[k] = gaussian(rng);
            e[k] = gaussian(rng);
            xi[k] = gaussian(rng);
        }
        const auto u = ula_step(p, t, e, s, 1.0, xi);
        const auto r = reverse_step(p, t, e, s, xi);
        const double B = s.constants(t).B;
        for (int k = 0; k < 6; ++k) {
            CHECK(u[k] == doctest::Approx(r[k] / B).epsilon(1e-12));
        }
        // Doubling the factor doubles the drift.
        PoseVector e2 = e;
        for (auto& v : e2) v *= 2;
        const auto u1 = ula_step(p, t, e, s, 1.0, PoseVector(6, 0.0));
        const auto u2 = ula_step(p, t, e2, s, 1.0, PoseVector(6, 0.0));
        for (int k = 0; k < 6; ++k) {
            CHECK((u2[k] - p[k]) == doctest::Approx(2 * (u1[k] - p[k])).epsilon(1e-12));
        }
    }
}

TEST_CASE("ula noise scale sqrt2 doubles the variance") {
    const auto s = NoiseSchedule::cosine(300);
    Rng rng(8);
    const size_t t = 150;
    double v1 = 0, v2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double xi = gaussian(rng);
        const double a = ula_step({0.0}, t, {0.0}, s, 1.0, {xi})[0];
        const double b = ula_step({0.0}, t, {0.0}, s, std::sqrt(2.0), {gaussian(rng)})[0];
        v1 += a * a;
        v2 += b * b;
    }
    CHECK(std::sqrt(v2 / v1) == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
}
