#include "brainseg/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace brainseg {

void Gmm2::canonicalize() {
  if (means[0] > means[1]) {
    std::swap(weights[0], weights[1]);
    std::swap(means[0], means[1]);
    std::swap(stds[0], stds[1]);
  }
}

namespace {

double log_density(double w, double m, double s, double v) {
  const double z = (v - m) / s;
  return std::log(w) - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
}

double log_sum_exp(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

}  // namespace

double Gmm2::posterior_high(double v) const {
  const double l0 = log_density(weights[0], means[0], stds[0], v);
  const double l1 = log_density(weights[1], means[1], stds[1], v);
  return std::exp(l1 - log_sum_exp(l0, l1));
}

ScalarVolume difference_image(const ScalarVolume& pdw, const ScalarVolume& t1w, const BrainMask& mask) {
  if (pdw.dims() != t1w.dims() || mask.dims() != t1w.dims()) {
    fail(ErrorKind::Dimension, "PDw, T1w and mask differ in size");
  }
  ScalarVolume out(t1w.dims(), t1w.spacing(), 0.0f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.inside(i)) out[i] = pdw[i] - t1w[i];
  }
  return out;
}

Gmm2 gmm2_init(std::span<const double> values) {
  if (values.size() < 10) fail(ErrorKind::Validation, "mixture fit needs at least 10 samples");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) fail(ErrorKind::Degenerate, "all samples are identical");
  const std::size_t half = sorted.size() / 2;
  Gmm2 g;
  const std::span<const double> parts[2] = {std::span<const double>(sorted).first(half),
                                            std::span<const double>(sorted).subspan(half)};
  for (int c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (double v : parts[c]) sum += v;
    const double m = sum / static_cast<double>(parts[c].size());
    double ss = 0.0;
    for (double v : parts[c]) ss += (v - m) * (v - m);
    g.means[c] = m;
    g.stds[c] = std::max(std::sqrt(ss / static_cast<double>(parts[c].size())), kStdFloor);
    g.weights[c] = static_cast<double>(parts[c].size()) / static_cast<double>(sorted.size());
  }
  return g;
}

double gmm2_log_likelihood(const Gmm2& g, std::span<const double> values) {
  double ll = 0.0;
  for (double v : values) {
    ll += log_sum_exp(log_density(g.weights[0], g.means[0], g.stds[0], v),
                      log_density(g.weights[1], g.means[1], g.stds[1], v));
  }
  return ll;
}

Gmm2 gmm2_em(std::span<const double> values, const Gmm2& init, double tol, int max_iters, double std_floor) {
  if (values.size() < 10) fail(ErrorKind::Validation, "mixture fit needs at least 10 samples");
  if (!(tol > 0.0)) fail(ErrorKind::Validation, "EM tolerance must be > 0");
  if (max_iters < 1) fail(ErrorKind::Validation, "EM needs at least one iteration");
  if (!(std_floor > 0.0)) fail(ErrorKind::Validation, "std floor must be > 0");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) fail(ErrorKind::Degenerate, "all samples are identical");
  for (int c = 0; c < 2; ++c) {
    if (!(init.weights[c] > 0.0) || !(init.stds[c] > 0.0)) {
      fail(ErrorKind::Validation, "initial weights and stds must be > 0");
    }
  }

  Gmm2 g = init;
  g.log_likelihood.clear();
  g.iterations = 0;
  for (int c = 0; c < 2; ++c) g.stds[c] = std::max(g.stds[c], std_floor);
  double ll = gmm2_log_likelihood(g, values);
  g.log_likelihood.push_back(ll);

  const double n = static_cast<double>(values.size());
  std::vector<double> resp(values.size());
  for (int it = 0; it < max_iters; ++it) {
    double r_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double l0 = log_density(g.weights[0], g.means[0], g.stds[0], values[i]);
      const double l1 = log_density(g.weights[1], g.means[1], g.stds[1], values[i]);
      resp[i] = std::exp(l1 - log_sum_exp(l0, l1));
      r_sum += resp[i];
    }
    Gmm2 next = g;
    const double mass[2] = {n - r_sum, r_sum};
    if (!(mass[0] > 0.0) || !(mass[1] > 0.0)) break;  // a component collapsed; keep the current fit
    double mean_acc[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      mean_acc[0] += (1.0 - resp[i]) * values[i];
      mean_acc[1] += resp[i] * values[i];
    }
    for (int c = 0; c < 2; ++c) next.means[c] = mean_acc[c] / mass[c];
    double var_acc[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d0 = values[i] - next.means[0];
      const double d1 = values[i] - next.means[1];
      var_acc[0] += (1.0 - resp[i]) * d0 * d0;
      var_acc[1] += resp[i] * d1 * d1;
    }
    for (int c = 0; c < 2; ++c) {
      next.weights[c] = mass[c] / n;
      next.stds[c] = std::max(std::sqrt(var_acc[c] / mass[c]), std_floor);
    }
    const double next_ll = gmm2_log_likelihood(next, values);
    // The std floor can cost likelihood; never accept a step that does.
    if (next_ll < ll) break;
    g.weights = next.weights;
    g.means = next.means;
    g.stds = next.stds;
    g.iterations = it + 1;
    g.log_likelihood.push_back(next_ll);
    const double gain = next_ll - ll;
    ll = next_ll;
    if (gain < tol) break;
  }
  g.canonicalize();
  return g;
}

double myelin_threshold(const Gmm2& model) {
  Gmm2 g = model;
  g.canonicalize();
  // log(w1 N1) - log(w0 N0) = a u^2 + b u + c
  const double v0 = g.stds[0] * g.stds[0], v1 = g.stds[1] * g.stds[1];
  const double a = 0.5 / v0 - 0.5 / v1;
  const double b = g.means[1] / v1 - g.means[0] / v0;
  const double c = std::log(g.weights[1] / g.weights[0]) - std::log(g.stds[1] / g.stds[0]) -
                   0.5 * g.means[1] * g.means[1] / v1 + 0.5 * g.means[0] * g.means[0] / v0;
  const double inf = std::numeric_limits<double>::infinity();
  const double scale = std::max({std::abs(b), std::abs(0.5 / v0), std::abs(0.5 / v1)});

  // Lower end of the uppermost interval where the high component wins, as
  // long as that interval reaches above the low-component mean.
  if (std::abs(a) <= 1e-12 * scale) {
    if (b > 0.0) return -c / b;
    return c > 0.0 ? -inf : inf;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0) return a > 0.0 ? -inf : inf;
  const double sq = std::sqrt(disc);
  // Cancellation-free quadratic roots.
  const double q = -0.5 * (b + std::copysign(sq, b));
  double r1 = q / a, r2 = c / q;
  if (r1 > r2) std::swap(r1, r2);
  if (a > 0.0) return r2;
  return r2 > g.means[0] ? r1 : inf;
}

LabelVolume classify_myelin(const ScalarVolume& diff, const BrainMask& mask, const Gmm2& model) {
  if (diff.dims() != mask.dims()) fail(ErrorKind::Dimension, "difference image and mask differ in size");
  const double tau = myelin_threshold(model);
  LabelVolume out(diff.dims(), diff.spacing(), code(Tissue::Background));
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (mask.inside(i) && static_cast<double>(diff[i]) > tau) out[i] = code(Tissue::Mwm);
  }
  return out;
}

}  // namespace brainseg
