// Copyright 2026 The trajdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trajdp/dp_core.hpp"

#include <limits>
#include <numbers>
#include <random>

namespace trajdp {

std::string to_string(Adjacency a) { return a == Adjacency::replace_one ? "replace-one" : "add-or-remove"; }

Adjacency adjacency_from_string(const std::string& s) {
  if (s == "replace-one") return Adjacency::replace_one;
  if (s == "add-or-remove") return Adjacency::add_or_remove;
  throw std::invalid_argument("unknown adjacency relation '" + s + "'");
}

void validate(const PrivacyBudget& b) {
  if (std::isnan(b.epsilon) || b.epsilon < 0.0) throw std::invalid_argument("budget epsilon must be >= 0");
  if (!(b.delta >= 0.0 && b.delta < 1.0)) throw std::invalid_argument("budget delta must lie in [0, 1)");
}

nlohmann::json to_json(const PrivacyBudget& b) {
  nlohmann::json j;
  j["epsilon"] = b.bounded() ? nlohmann::json(b.epsilon) : nlohmann::json(nullptr);
  j["delta"] = b.delta;
  j["adjacency"] = to_string(b.adjacency);
  j["unit"] = "trajectory";
  return j;
}

PrivacyBudget budget_from_json(const nlohmann::json& j) {
  PrivacyBudget b;
  b.epsilon = j.at("epsilon").is_null() ? std::numeric_limits<double>::infinity() : j.at("epsilon").get<double>();
  b.delta = j.at("delta").get<double>();
  b.adjacency = adjacency_from_string(j.at("adjacency").get<std::string>());
  if (j.contains("unit") && j["unit"] != "trajectory") {
    throw std::invalid_argument("only trajectory-level budgets are supported");
  }
  validate(b);
  return b;
}

PrivacyBudget compose_sequential(std::span<const PrivacyBudget> parts) {
  if (parts.empty()) throw std::invalid_argument("compose_sequential: nothing to compose");
  PrivacyBudget total{0.0, 0.0, parts.front().adjacency, PrivacyUnit::trajectory};
  for (const auto& p : parts) {
    validate(p);
    if (p.adjacency != total.adjacency) {
      throw std::invalid_argument("compose_sequential: mixed adjacency relations do not compose");
    }
    total.epsilon += p.epsilon;
    total.delta += p.delta;
  }
  if (total.delta >= 1.0) throw std::invalid_argument("compose_sequential: composed delta reaches 1");
  return total;
}

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::laplace: return "laplace";
    case Mechanism::gaussian: return "gaussian";
    case Mechanism::vmf: return "vmf";
  }
  return "laplace";
}

Mechanism mechanism_from_string(const std::string& s) {
  if (s == "laplace") return Mechanism::laplace;
  if (s == "gaussian") return Mechanism::gaussian;
  if (s == "vmf") return Mechanism::vmf;
  throw std::invalid_argument("unknown mechanism '" + s + "'");
}

NormType norm_for(Mechanism m) { return m == Mechanism::laplace ? NormType::l1 : NormType::l2; }

void validate(const NoiseSpec& spec) {
  if (!(spec.scale > 0.0) || std::isnan(spec.scale)) throw std::invalid_argument("noise scale must be positive");
  if (!(spec.clip_bound > 0.0)) throw std::invalid_argument("clip bound must be positive");
  if (spec.norm_type != norm_for(spec.mechanism)) {
    throw std::invalid_argument(to_string(spec.mechanism) + " requires the " +
                                (norm_for(spec.mechanism) == NormType::l1 ? "l1" : "l2") + " norm");
  }
  if (spec.mechanism == Mechanism::vmf && spec.clip_bound != 1.0) {
    throw std::invalid_argument("vmf requires unit vectors (C = 1)");
  }
}

double laplace_scale(double clip_bound, double epsilon) {
  if (!(clip_bound > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("laplace_scale: C and eps must be > 0");
  return 2.0 * clip_bound / epsilon;
}

double laplace_sample(double scale, Rng& rng) {
  const double u = uniform01(rng) - 0.5;
  const double mag = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -mag : mag;
}

Eigen::MatrixXd laplace_sample(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  if (!(scale > 0.0)) throw std::invalid_argument("laplace_sample: scale must be positive");
  Eigen::MatrixXd out(rows, cols);
  // Fill row by row so a given seed yields the same values for any storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = laplace_sample(scale, rng);
  }
  return out;
}

double gaussian_sample(double sigma, Rng& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(rng);
}

Eigen::MatrixXd gaussian_sample(Eigen::Index rows, Eigen::Index cols, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_sample: sigma must be positive");
  std::normal_distribution<double> dist(0.0, sigma);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = dist(rng);
  }
  return out;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gaussian_privacy_curve(double sigma, double epsilon, double sensitivity) {
  const double a = sensitivity / (2.0 * sigma);
  const double b = epsilon * sigma / sensitivity;
  const double first = standard_normal_cdf(a - b);
  const double tail = standard_normal_cdf(-a - b);
  const double second = tail > 0.0 ? std::exp(epsilon + std::log(tail)) : 0.0;
  return first - second;
}

double analytic_gaussian_sigma(double epsilon, double delta, double sensitivity) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("analytic_gaussian_sigma: eps must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("analytic_gaussian_sigma: delta must be in (0,1)");
  if (!(sensitivity > 0.0)) throw std::invalid_argument("analytic_gaussian_sigma: sensitivity must be > 0");
  double lo = 1e-9;
  double hi = 1e9;
  if (gaussian_privacy_curve(hi, epsilon, sensitivity) > delta) {
    throw std::domain_error("analytic_gaussian_sigma: no sigma below 1e9 reaches the requested delta");
  }
  if (gaussian_privacy_curve(lo, epsilon, sensitivity) <= delta) return lo;
  // Invariant: curve(lo) > delta >= curve(hi).
  while (hi / lo > 1.0 + 1e-12) {
    const double mid = std::sqrt(lo * hi);
    if (gaussian_privacy_curve(mid, epsilon, sensitivity) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double classical_gaussian_sigma(double epsilon, double delta, double sensitivity) {
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double analytic_gaussian_alpha(double epsilon, double delta, double clip_bound) {
  const double sigma = analytic_gaussian_sigma(epsilon, delta, 2.0 * clip_bound);
  return sigma * std::sqrt(2.0 * epsilon) / (2.0 * clip_bound);
}

namespace {

Eigen::VectorXd uniform_on_sphere(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
    norm = v.norm();
  } while (norm < 1e-300);
  return v / norm;
}

double beta_sample(double a, Rng& rng) {
  std::gamma_distribution<double> gamma(a, 1.0);
  const double x = gamma(rng);
  const double y = gamma(rng);
  return x / (x + y);
}

}  // namespace

Eigen::VectorXd vmf_sample(const Eigen::Ref<const Eigen::VectorXd>& mu, double kappa, Rng& rng) {
  const Eigen::Index dim = mu.size();
  if (dim < 2) throw std::invalid_argument("vmf_sample: dimension must be at least 2");
  if (std::abs(mu.norm() - 1.0) > 1e-9) throw std::invalid_argument("vmf_sample: mean direction must be a unit vector");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("vmf_sample: kappa must be finite and >= 0");
  if (kappa == 0.0) return uniform_on_sphere(dim, rng);

  // Radial component w = <x, e1> by Wood's rejection step.
  const double dm1 = static_cast<double>(dim - 1);
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log1p(-x0 * x0);
  double w = 0.0;
  while (true) {
    const double z = beta_sample(0.5 * dm1, rng);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = uniform01(rng);
    if (kappa * w + dm1 * std::log1p(-x0 * w) - c >= std::log(u)) break;
  }

  Eigen::VectorXd x(dim);
  x(0) = w;
  x.tail(dim - 1) = std::sqrt(std::max(0.0, 1.0 - w * w)) * uniform_on_sphere(dim - 1, rng);

  // Householder reflection taking e1 onto mu.
  Eigen::VectorXd u = -mu;
  u(0) += 1.0;
  const double uu = u.squaredNorm();
  if (uu > 1e-24) x -= (2.0 * u.dot(x) / uu) * u;
  return x / x.norm();
}

PrivacyBudget amplify_by_subsampling(double epsilon, double delta, std::size_t m, std::size_t n) {
  if (m < 1 || m > n) throw std::invalid_argument("amplify_by_subsampling: requires 1 <= m <= n");
  if (std::isnan(epsilon) || epsilon < 0.0) throw std::invalid_argument("amplify_by_subsampling: eps must be >= 0");
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("amplify_by_subsampling: delta must be in [0,1)");
  const double rate = static_cast<double>(m) / static_cast<double>(n);
  PrivacyBudget out;
  out.adjacency = Adjacency::replace_one;
  out.delta = rate * delta;
  if (m == n) {
    out.epsilon = epsilon;
  } else if (std::isinf(epsilon)) {
    out.epsilon = epsilon;
  } else {
    out.epsilon = std::log1p(rate * std::expm1(epsilon));
  }
  return out;
}

double calibrate_base_epsilon(double target_epsilon, std::size_t m, std::size_t n) {
  if (m < 1 || m > n) throw std::invalid_argument("calibrate_base_epsilon: requires 1 <= m <= n");
  if (!(target_epsilon > 0.0)) throw std::invalid_argument("calibrate_base_epsilon: target must be > 0");
  if (m == n) return target_epsilon;
  return std::log1p(static_cast<double>(n) / static_cast<double>(m) * std::expm1(target_epsilon));
}

double default_delta(std::size_t n) {
  if (n == 0) throw std::invalid_argument("default_delta: n must be positive");
  return 1.0 / std::pow(static_cast<double>(n), 1.1);
}

}  // namespace trajdp
