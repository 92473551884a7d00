#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace form {

/// Forward-mode dual number with a sparse gradient. Energies touch only a few
/// pose components per term, so gradients are kept as (index, value) lists
/// sorted by index.
class Quantity {
  public:
    using Entry = std::pair<uint32_t, double>;

    Quantity() = default;
    Quantity(double v) : value_(v) {}  // NOLINT: implicit constants are convenient

    static Quantity variable(double v, uint32_t index) {
        Quantity q(v);
        q.grad_.emplace_back(index, 1.0);
        return q;
    }

    double value() const { return value_; }
    const std::vector<Entry>& grad() const { return grad_; }

    /// Adds scale * grad into a dense vector.
    void accumulate(std::vector<double>& dense, double scale = 1.0) const {
        for (const auto& [i, g] : grad_) {
            dense[i] += scale * g;
        }
    }

    friend Quantity operator+(const Quantity& a, const Quantity& b) { return combine(a, 1.0, b, 1.0, a.value_ + b.value_); }
    friend Quantity operator-(const Quantity& a, const Quantity& b) { return combine(a, 1.0, b, -1.0, a.value_ - b.value_); }
    friend Quantity operator*(const Quantity& a, const Quantity& b) {
        return combine(a, b.value_, b, a.value_, a.value_ * b.value_);
    }
    friend Quantity operator*(double s, Quantity a) {
        a.value_ *= s;
        for (auto& e : a.grad_) {
            e.second *= s;
        }
        return a;
    }
    friend Quantity operator*(const Quantity& a, double s) { return s * a; }
    friend Quantity operator-(const Quantity& a) { return -1.0 * a; }
    Quantity& operator+=(const Quantity& b) { return *this = *this + b; }

    /// Applies a scalar function with known derivative at the current value.
    Quantity chain(double new_value, double derivative) const {
        Quantity q = derivative * *this;
        q.value_ = new_value;
        return q;
    }

  private:
    static Quantity combine(const Quantity& a, double sa, const Quantity& b, double sb, double value) {
        Quantity out(value);
        out.grad_.reserve(a.grad_.size() + b.grad_.size());
        auto ia = a.grad_.begin();
        auto ib = b.grad_.begin();
        while (ia != a.grad_.end() || ib != b.grad_.end()) {
            if (ib == b.grad_.end() || (ia != a.grad_.end() && ia->first < ib->first)) {
                out.grad_.emplace_back(ia->first, sa * ia->second);
                ++ia;
            } else if (ia == a.grad_.end() || ib->first < ia->first) {
                out.grad_.emplace_back(ib->first, sb * ib->second);
                ++ib;
            } else {
                out.grad_.emplace_back(ia->first, sa * ia->second + sb * ib->second);
                ++ia;
                ++ib;
            }
        }
        return out;
    }

    double value_ = 0.0;
    std::vector<Entry> grad_;
};

inline Quantity sin(const Quantity& a) { return a.chain(std::sin(a.value()), std::cos(a.value())); }
inline Quantity cos(const Quantity& a) { return a.chain(std::cos(a.value()), -std::sin(a.value())); }
inline Quantity abs(const Quantity& a) {
    const double v = a.value();
    return a.chain(std::abs(v), v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
}
inline Quantity sqrt(const Quantity& a) {
    const double r = std::sqrt(a.value());
    return a.chain(r, r > 0.0 ? 0.5 / r : 0.0);
}
inline Quantity min(const Quantity& a, const Quantity& b) { return a.value() <= b.value() ? a : b; }
inline Quantity max(const Quantity& a, const Quantity& b) { return a.value() >= b.value() ? a : b; }

/// Euclidean norm of (a, b); gradient taken as zero at the origin.
inline Quantity hypot(const Quantity& a, const Quantity& b) { return sqrt(a * a + b * b); }

/// Squared hinge max(0, v)^2.
inline Quantity hinge2(const Quantity& v) {
    if (v.value() <= 0.0) {
        return Quantity(0.0);
    }
    return v.chain(v.value() * v.value(), 2.0 * v.value());
}

/// Wraps an angle difference to (-pi, pi]; derivative is 1 away from the cut.
inline Quantity wrap(const Quantity& a) {
    constexpr double two_pi = 6.283185307179586476925;
    double w = std::remainder(a.value(), two_pi);
    if (w <= -two_pi / 2.0) {
        w += two_pi;
    }
    return a.chain(w, 1.0);
}

}  // namespace form
