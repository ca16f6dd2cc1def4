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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace trajdp {

/// Generator type threaded explicitly through every stochastic operation.
/// Each caller owns its stream; nothing in the library keeps a global one.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed);

/// Seeds from the operating system's entropy source. Deterministic seeds are
/// for reproducible experiments only; a released DP artifact must use this.
Rng make_secure_rng();

/// Mixes a base seed with a stream index (splitmix64 finalizer), so runs
/// derived from one configuration seed get decorrelated generators.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Uniform on the open interval (0, 1), 53 bits of resolution.
double uniform01(Rng& rng);

double uniform_real(Rng& rng, double lo, double hi);

/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// m distinct indices from [0, n), uniform over ordered m-subsets
/// (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, Rng& rng);

}  // namespace trajdp
