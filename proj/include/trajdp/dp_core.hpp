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

// Calibrated noise primitives, norm bounding, subsampling amplification and
// privacy budget bookkeeping.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "trajdp/random.hpp"

namespace trajdp {

enum class Adjacency { add_or_remove, replace_one };
enum class PrivacyUnit { trajectory };

std::string to_string(Adjacency a);
Adjacency adjacency_from_string(const std::string& s);

/// An (epsilon, delta) guarantee under a stated adjacency relation.
///
/// epsilon == 0 is allowed and means the data was never touched (an
/// unconditional generator spends nothing on its conditional inputs).
/// epsilon == +infinity marks a release without any guarantee; such a
/// budget serializes with a null epsilon.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  Adjacency adjacency = Adjacency::replace_one;
  PrivacyUnit unit = PrivacyUnit::trajectory;

  bool bounded() const { return std::isfinite(epsilon); }
  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;
};

void validate(const PrivacyBudget& b);

nlohmann::json to_json(const PrivacyBudget& b);
PrivacyBudget budget_from_json(const nlohmann::json& j);

/// Sequential composition: epsilons and deltas add. All parts must share one
/// adjacency relation.
PrivacyBudget compose_sequential(std::span<const PrivacyBudget> parts);

enum class Mechanism { laplace, gaussian, vmf };
enum class NormType { l1, l2 };

std::string to_string(Mechanism m);
Mechanism mechanism_from_string(const std::string& s);

/// Mechanism parameters. `scale` is lambda (Laplace), sigma (Gaussian) or
/// kappa (VMF).
struct NoiseSpec {
  Mechanism mechanism = Mechanism::laplace;
  double scale = 1.0;
  NormType norm_type = NormType::l1;
  double clip_bound = 1.0;
};

/// Laplace pairs with l1; Gaussian and VMF with l2; VMF also needs C == 1.
void validate(const NoiseSpec& spec);

/// The norm type a mechanism's sensitivity is measured in.
NormType norm_for(Mechanism m);

template <typename Derived>
typename Derived::Scalar lp_norm(const Eigen::MatrixBase<Derived>& v, NormType p) {
  return p == NormType::l1 ? v.template lpNorm<1>() : v.norm();
}

/// min(1, C / ||v||_p) * v. The zero vector comes back unchanged.
template <typename Derived>
typename Derived::PlainObject clip_norm(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar bound,
                                        NormType p) {
  using Scalar = typename Derived::Scalar;
  if (!(bound > Scalar(0))) throw std::invalid_argument("clip_norm: bound must be positive");
  const Scalar norm = lp_norm(v, p);
  if (norm <= bound) return v;
  return (bound / norm) * v;
}

/// (C / ||v||_2) * v; the direction of a zero vector is undefined.
template <typename Derived>
typename Derived::PlainObject scale_to_norm(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar bound) {
  using Scalar = typename Derived::Scalar;
  if (!(bound > Scalar(0))) throw std::invalid_argument("scale_to_norm: bound must be positive");
  const Scalar norm = v.norm();
  if (!(norm > Scalar(0))) throw std::invalid_argument("scale_to_norm: zero vector has no direction");
  return (bound / norm) * v;
}

/// Replace-one scale of the Laplace compression mechanism: 2C / eps.
double laplace_scale(double clip_bound, double epsilon);

double laplace_sample(double scale, Rng& rng);
Eigen::MatrixXd laplace_sample(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng);

double gaussian_sample(double sigma, Rng& rng);
Eigen::MatrixXd gaussian_sample(Eigen::Index rows, Eigen::Index cols, double sigma, Rng& rng);

/// Standard normal CDF, computed through erfc for accuracy in the tails.
double standard_normal_cdf(double x);

/// delta(sigma) of the Gaussian mechanism with l2 sensitivity `sensitivity`:
/// Phi(D/(2s) - eps*s/D) - e^eps * Phi(-D/(2s) - eps*s/D).
double gaussian_privacy_curve(double sigma, double epsilon, double sensitivity);

/// Smallest sigma whose privacy curve stays at or below delta, found by
/// bisection in log-space over [1e-9, 1e9].
double analytic_gaussian_sigma(double epsilon, double delta, double sensitivity);

/// sigma = D * sqrt(2 ln(1.25 / delta)) / eps. Only a valid bound for eps < 1.
double classical_gaussian_sigma(double epsilon, double delta, double sensitivity);

/// The alpha of the sigma = alpha * 2C / sqrt(2 eps) parameterization.
double analytic_gaussian_alpha(double epsilon, double delta, double clip_bound);

/// One draw from the von Mises-Fisher distribution on the unit sphere in
/// R^d with mean direction `mu` and concentration `kappa` (Wood's scheme).
Eigen::VectorXd vmf_sample(const Eigen::Ref<const Eigen::VectorXd>& mu, double kappa, Rng& rng);

/// Uniform subsampling of m out of n records without replacement:
/// (log(1 + (m/n)(e^eps - 1)), (m/n) delta) under replace-one adjacency.
PrivacyBudget amplify_by_subsampling(double epsilon, double delta, std::size_t m, std::size_t n);

/// The base epsilon whose amplified value equals `target_epsilon`.
double calibrate_base_epsilon(double target_epsilon, std::size_t m, std::size_t n);

/// Conventional default delta = 1 / n^1.1.
double default_delta(std::size_t n);

}  // namespace trajdp
