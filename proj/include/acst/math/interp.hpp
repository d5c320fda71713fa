#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

// Monotone cubic Hermite interpolation (Fritsch-Carlson limited slopes).

namespace acst {

class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  // Slopes supplied by the caller (e.g. analytic derivatives); they are
  // limited so the interpolant stays monotone.
  MonotoneCubic(std::vector<double> x, std::vector<double> y,
                std::vector<double> slopes)
      : x_(std::move(x)), y_(std::move(y)), m_(std::move(slopes)) {
    validate();
    limit_slopes();
  }

  // Slopes from the standard PCHIP construction.
  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    validate();
    pchip_slopes();
    limit_slopes();
  }

  double operator()(double xq) const {
    const std::size_t i = segment(xq);
    const double h = x_[i + 1] - x_[i];
    const double t = (xq - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
  }

  double derivative(double xq) const {
    const std::size_t i = segment(xq);
    const double h = x_[i + 1] - x_[i];
    const double t = (xq - x_[i]) / h;
    const double dh00 = 6 * t * t - 6 * t, dh10 = 3 * t * t - 4 * t + 1;
    const double dh01 = -dh00, dh11 = 3 * t * t - 2 * t;
    return (dh00 * y_[i] + dh01 * y_[i + 1]) / h + dh10 * m_[i] + dh11 * m_[i + 1];
  }

  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }
  double y_front() const { return y_.front(); }
  double y_back() const { return y_.back(); }
  std::size_t size() const { return x_.size(); }
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }

 private:
  void validate() const {
    if (x_.size() < 2 || x_.size() != y_.size())
      throw std::invalid_argument("MonotoneCubic: bad knot arrays");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
      if (!(x_[i + 1] > x_[i]))
        throw std::invalid_argument("MonotoneCubic: x not strictly increasing");
  }

  void pchip_slopes() {
    const std::size_t n = x_.size();
    m_.assign(n, 0.0);
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        const double w1 = 2 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
        const double w2 = (x_[i + 1] - x_[i]) + 2 * (x_[i] - x_[i - 1]);
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
  }

  void limit_slopes() {
    const std::size_t n = x_.size();
    if (m_.size() != n)
      throw std::invalid_argument("MonotoneCubic: slope array size mismatch");
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
      if (d == 0.0) {
        m_[i] = 0.0;
        m_[i + 1] = 0.0;
        continue;
      }
      const double a = m_[i] / d, b = m_[i + 1] / d;
      if (a < 0.0) m_[i] = 0.0;
      if (b < 0.0) m_[i + 1] = 0.0;
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        m_[i] = tau * a * d;
        m_[i + 1] = tau * b * d;
      }
    }
  }

  std::size_t segment(double xq) const {
    if (xq <= x_.front()) return 0;
    if (xq >= x_.back()) return x_.size() - 2;
    const auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace acst
