/*
 * Copyright 2026 The thingsyntax Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Diagonal-covariance Gaussian mixture over thing windows and the Fisher
// vector encoding of a things syntax against it.

#ifndef THINGSYNTAX_ENCODER_H_
#define THINGSYNTAX_ENCODER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "thingsyntax/core.h"

namespace thingsyntax {

struct GmmOptions {
  int max_iterations = 100;
  // Stop once (LL_t - LL_{t-1}) < tolerance * |LL_{t-1}|.
  double tolerance = 1e-5;
  double variance_floor = 1e-4;
  // Columns of the window vector the model is fitted on.
  PropertyMask mask;

  bool operator==(const GmmOptions&) const = default;
};

struct GmmModel {
  int components = 0;
  int dimension = 0;
  PropertyMask mask;
  std::vector<double> weights;    // K
  std::vector<double> means;      // K x D, row-major
  std::vector<double> variances;  // K x D, row-major
  std::uint64_t seed = 0;
  GmmOptions options;

  // Fit metadata.
  int iterations = 0;
  bool converged = false;
  // Log-likelihood of the training windows at each E-step.
  std::vector<double> log_likelihood_history;
  // Iterations at which an empty component was re-seeded.
  std::vector<int> reseeded_at;

  const double* mean(int k) const { return means.data() + k * dimension; }
  const double* variance(int k) const {
    return variances.data() + k * dimension;
  }
  std::size_t fisher_length() const {
    return 2 * static_cast<std::size_t>(components) * dimension;
  }
  // Throws ConfigError when the model violates its invariants.
  void validate() const;

  bool operator==(const GmmModel&) const = default;
};

// EM on the pooled holdout windows, initialized by k-means++ seeded from
// `seed`. Needs at least 10*K windows.
GmmModel fit_gmm(std::span<const SyntaxMatrix> holdout, int components,
                 std::uint64_t seed, const GmmOptions& options = {});

// Same, on pre-extracted feature rows of length options.mask.count().
GmmModel fit_gmm(std::span<const std::vector<double>> points, int components,
                 std::uint64_t seed, const GmmOptions& options = {});

// log sum_k t_k g_k(x) for one feature row.
double log_density(const GmmModel& model, std::span<const double> x);

// Sum over the windows of log_density.
double log_likelihood(const GmmModel& model,
                      std::span<const ThingWindow> windows);

std::vector<double> responsibilities(const GmmModel& model,
                                     std::span<const double> x);
std::vector<double> responsibilities(const GmmModel& model,
                                     const ThingWindow& window);

struct FvOptions {
  bool average = true;      // divide by the number of windows
  bool signed_sqrt = true;  // sign(v) * sqrt(|v|)
  bool l2 = true;           // unit Euclidean norm

  static FvOptions raw() { return {false, false, false}; }
  bool operator==(const FvOptions&) const = default;
};

struct FisherVector {
  std::vector<double> values;
  FvOptions options;

  std::size_t size() const { return values.size(); }
  bool operator==(const FisherVector&) const = default;
};

// Per component k the block [d/dmu_k (D values), d/dsigma_k (D values)] of
// the summed per-window log-likelihood gradients, followed by the normalizing
// steps enabled in `options`. An empty syntax gives the zero vector.
FisherVector encode_fv(const SyntaxMatrix& syntax, const GmmModel& model,
                       const FvOptions& options = {});
FisherVector encode_fv(std::span<const std::vector<double>> points,
                       const GmmModel& model, const FvOptions& options = {});

}  // namespace thingsyntax

#endif  // THINGSYNTAX_ENCODER_H_
