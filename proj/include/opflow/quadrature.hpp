#pragma once

// Gauss-Hermite rules for the weight exp(-s^2) on the real line.
//
// Nodes come from the Golub-Welsch eigenproblem on the Jacobi matrix and are
// then polished by Newton steps on the orthonormal Hermite recurrence. Weights
// use w_j = 1 / (n p_{n-1}(x_j)^2), evaluated in log space so the tail weights
// underflow to zero instead of overflowing.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "opflow/error.hpp"

namespace opflow {

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

namespace detail {

struct HermiteEval {
  double ratio;       // p_n(x) / p_n'(x)
  double log_abs_pm1; // log |p_{n-1}(x)|
};

inline HermiteEval orthonormal_hermite(int n, double x)
{
  double log_scale = -0.25 * std::log(std::numbers::pi);
  double prev = 0.0;
  double cur = 1.0;  // p_0, scaled by exp(log_scale)
  double log_pm1 = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k == n - 1) log_pm1 = std::log(std::abs(cur)) + log_scale;
    const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(double(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
    const double mag = std::abs(cur);
    if (mag > 1e100) {
      prev /= mag;
      cur /= mag;
      log_scale += std::log(mag);
    }
  }
  // p_n' = sqrt(2n) p_{n-1}
  return {cur / (std::sqrt(2.0 * n) * prev), log_pm1};
}

}  // namespace detail

inline GaussHermiteRule make_gauss_hermite(int n)
{
  if (n < 1) throw Error(ErrorCode::NodesTooFew, "Gauss-Hermite rule needs at least one node");
  GaussHermiteRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {std::sqrt(std::numbers::pi)};
    return rule;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::EigFailure, "Jacobi matrix eigensolver did not converge");
  }
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    double x = es.eigenvalues()(j);
    for (int it = 0; it < 4; ++it) {
      const double step = detail::orthonormal_hermite(n, x).ratio;
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    const detail::HermiteEval h = detail::orthonormal_hermite(n, x);
    rule.nodes[j] = x;
    rule.weights[j] = std::exp(-std::log(double(n)) - 2.0 * h.log_abs_pm1);
  }
  // exact symmetry of the rule
  for (int j = 0; j < n / 2; ++j) {
    const double x = 0.5 * (rule.nodes[n - 1 - j] - rule.nodes[j]);
    const double w = 0.5 * (rule.weights[n - 1 - j] + rule.weights[j]);
    rule.nodes[j] = -x;
    rule.nodes[n - 1 - j] = x;
    rule.weights[j] = rule.weights[n - 1 - j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Memoized rule lookup; safe to call from several threads.
inline std::shared_ptr<const GaussHermiteRule> gauss_hermite(int n)
{
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const GaussHermiteRule>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  auto rule = std::make_shared<const GaussHermiteRule>(make_gauss_hermite(n));
  std::lock_guard lock(mutex);
  return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace opflow
