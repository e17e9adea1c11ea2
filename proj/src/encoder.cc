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

#include "thingsyntax/encoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)
// Responsibility mass below which a component counts as empty.
constexpr double kEmptyMass = 1e-10;

double log_sum_exp(std::span<const double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

// Per-component constant: log t_k - 0.5 * (D log 2pi + sum_d log var_kd).
std::vector<double> component_constants(const GmmModel& model) {
  std::vector<double> out(model.components);
  for (int k = 0; k < model.components; ++k) {
    double log_det = 0.0;
    const double* var = model.variance(k);
    for (int d = 0; d < model.dimension; ++d) log_det += std::log(var[d]);
    out[k] = std::log(model.weights[k]) -
             0.5 * (model.dimension * kLog2Pi + log_det);
  }
  return out;
}

// log(t_k g_k(x)) for every k into `out`.
void joint_log_densities(const GmmModel& model,
                         const std::vector<double>& constants,
                         const double* x, std::vector<double>& out) {
  out.resize(model.components);
  for (int k = 0; k < model.components; ++k) {
    const double* mu = model.mean(k);
    const double* var = model.variance(k);
    double quad = 0.0;
    for (int d = 0; d < model.dimension; ++d) {
      const double diff = x[d] - mu[d];
      quad += diff * diff / var[d];
    }
    out[k] = constants[k] - 0.5 * quad;
  }
}

void check_row(const GmmModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dimension) {
    throw DimensionMismatch("feature row has " + std::to_string(x.size()) +
                            " values, model expects " +
                            std::to_string(model.dimension));
  }
}

std::vector<std::vector<double>> pooled_features(
    std::span<const SyntaxMatrix> syntax, const PropertyMask& mask) {
  std::vector<std::vector<double>> points;
  for (const auto& m : syntax) {
    for (const auto& w : m.rows) points.push_back(w.features(mask));
  }
  return points;
}

double squared_distance(const double* a, const double* b, int dimension) {
  double sum = 0.0;
  for (int d = 0; d < dimension; ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return sum;
}

// k-means++ seeding followed by one hard assignment pass to get initial
// weights, means and variances.
void initialize(GmmModel& model, const std::vector<double>& data,
                std::size_t n, std::mt19937_64& rng) {
  const int k_count = model.components;
  const int dim = model.dimension;
  const double floor = model.options.variance_floor;

  std::vector<double> global_mean(dim, 0.0), global_var(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) global_mean[d] += data[i * dim + d];
  }
  for (double& m : global_mean) m /= n;
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) {
      const double diff = data[i * dim + d] - global_mean[d];
      global_var[d] += diff * diff;
    }
  }
  for (double& v : global_var) v = std::max(v / n, floor);

  std::vector<std::size_t> centers;
  centers.reserve(k_count);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(pick(rng));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k_count) {
    const double* c = &data[centers.back() * dim];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(&data[i * dim], c, dim));
      total += nearest[i];
    }
    if (!(total > 0.0)) {
      centers.push_back(pick(rng));
      continue;
    }
    const double target =
        std::uniform_real_distribution<double>(0.0, total)(rng);
    double running = 0.0;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      running += nearest[i];
      if (running >= target && nearest[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(chosen);
  }

  std::vector<double> counts(k_count, 0.0);
  std::vector<double> sums(k_count * dim, 0.0), squares(k_count * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = &data[i * dim];
    int best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_count; ++k) {
      const double dist = squared_distance(x, &data[centers[k] * dim], dim);
      if (dist < best_distance) {
        best_distance = dist;
        best = k;
      }
    }
    counts[best] += 1.0;
    for (int d = 0; d < dim; ++d) {
      sums[best * dim + d] += x[d];
      squares[best * dim + d] += x[d] * x[d];
    }
  }

  model.weights.assign(k_count, 0.0);
  model.means.assign(k_count * dim, 0.0);
  model.variances.assign(k_count * dim, 0.0);
  for (int k = 0; k < k_count; ++k) {
    model.weights[k] = (counts[k] + 1.0) / (n + k_count);
    for (int d = 0; d < dim; ++d) {
      const std::size_t j = k * dim + d;
      if (counts[k] >= 2.0) {
        const double mu = sums[j] / counts[k];
        model.means[j] = mu;
        model.variances[j] = std::max(squares[j] / counts[k] - mu * mu, floor);
      } else {
        model.means[j] = data[centers[k] * dim + d];
        model.variances[j] = global_var[d];
      }
    }
  }
}

// Moves an empty component next to the component with the largest weighted
// total variance, splitting that component's weight.
void reseed(GmmModel& model, int empty) {
  const int dim = model.dimension;
  int donor = -1;
  double best = -1.0;
  for (int k = 0; k < model.components; ++k) {
    if (k == empty) continue;
    double spread = 0.0;
    for (int d = 0; d < dim; ++d) spread += model.variance(k)[d];
    spread *= model.weights[k];
    if (spread > best) {
      best = spread;
      donor = k;
    }
  }
  if (donor < 0) return;
  int axis = 0;
  for (int d = 1; d < dim; ++d) {
    if (model.variance(donor)[d] > model.variance(donor)[axis]) axis = d;
  }
  for (int d = 0; d < dim; ++d) {
    model.means[empty * dim + d] = model.means[donor * dim + d];
    model.variances[empty * dim + d] = model.variances[donor * dim + d];
  }
  const double offset = std::sqrt(model.variances[donor * dim + axis]);
  model.means[empty * dim + axis] += offset;
  model.means[donor * dim + axis] -= offset;
  model.weights[donor] *= 0.5;
  model.weights[empty] = model.weights[donor];
}

}  // namespace

void GmmModel::validate() const {
  if (components < 1) throw ConfigError("GMM needs at least one component");
  if (dimension != mask.count()) {
    throw ConfigError("GMM dimension does not match its property mask");
  }
  const std::size_t cells = static_cast<std::size_t>(components) * dimension;
  if (weights.size() != static_cast<std::size_t>(components) ||
      means.size() != cells || variances.size() != cells) {
    throw ConfigError("GMM parameter arrays have inconsistent sizes");
  }
  double total = 0.0;
  for (double t : weights) {
    if (!(t > 0.0)) throw ConfigError("GMM weights must be positive");
    total += t;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("GMM weights must sum to one");
  }
  for (double v : variances) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("GMM variances must be positive and finite");
    }
  }
  for (double m : means) {
    if (!std::isfinite(m)) throw ConfigError("GMM means must be finite");
  }
}

GmmModel fit_gmm(std::span<const SyntaxMatrix> holdout, int components,
                 std::uint64_t seed, const GmmOptions& options) {
  const auto points = pooled_features(holdout, options.mask);
  return fit_gmm(points, components, seed, options);
}

GmmModel fit_gmm(std::span<const std::vector<double>> points, int components,
                 std::uint64_t seed, const GmmOptions& options) {
  if (components < 1) throw ConfigError("GMM needs at least one component");
  if (options.mask.empty()) throw ConfigError("property mask must not be empty");
  if (!(options.variance_floor > 0.0)) {
    throw ConfigError("variance floor must be positive");
  }
  const std::size_t n = points.size();
  if (n < 10 * static_cast<std::size_t>(components)) {
    throw InsufficientData("fit_gmm: " + std::to_string(n) + " windows for " +
                           std::to_string(components) +
                           " components (need 10 per component)");
  }
  GmmModel model;
  model.components = components;
  model.dimension = options.mask.count();
  model.mask = options.mask;
  model.seed = seed;
  model.options = options;
  const int dim = model.dimension;
  const int k_count = components;

  std::vector<double> data;
  data.reserve(n * dim);
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != dim) {
      throw DimensionMismatch("feature rows must have " + std::to_string(dim) +
                              " values");
    }
    data.insert(data.end(), p.begin(), p.end());
  }

  std::mt19937_64 rng(seed);
  initialize(model, data, n, rng);

  std::vector<double> log_joint;
  std::vector<double> mass(k_count);
  std::vector<double> sums(k_count * dim), squares(k_count * dim);
  for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
    // E-step, reduced in data order.
    const auto constants = component_constants(model);
    std::fill(mass.begin(), mass.end(), 0.0);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(squares.begin(), squares.end(), 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = &data[i * dim];
      joint_log_densities(model, constants, x, log_joint);
      const double lse = log_sum_exp(log_joint);
      ll += lse;
      for (int k = 0; k < k_count; ++k) {
        const double gamma = std::exp(log_joint[k] - lse);
        if (gamma == 0.0) continue;
        mass[k] += gamma;
        for (int d = 0; d < dim; ++d) {
          sums[k * dim + d] += gamma * x[d];
          squares[k * dim + d] += gamma * x[d] * x[d];
        }
      }
    }
    model.iterations = iteration + 1;
    const bool stalled =
        !model.log_likelihood_history.empty() &&
        ll - model.log_likelihood_history.back() <
            options.tolerance * std::abs(model.log_likelihood_history.back());
    model.log_likelihood_history.push_back(ll);
    if (stalled) {
      model.converged = true;
      break;
    }
    if (iteration + 1 == options.max_iterations) break;

    // M-step.
    std::vector<int> empty;
    for (int k = 0; k < k_count; ++k) {
      if (mass[k] <= kEmptyMass) {
        empty.push_back(k);
        continue;
      }
      model.weights[k] = mass[k] / n;
      for (int d = 0; d < dim; ++d) {
        const std::size_t j = k * dim + d;
        const double mu = sums[j] / mass[k];
        model.means[j] = mu;
        model.variances[j] =
            std::max(squares[j] / mass[k] - mu * mu, options.variance_floor);
      }
    }
    for (int k : empty) {
      model.weights[k] = 0.0;
    }
    for (int k : empty) reseed(model, k);
    if (!empty.empty()) {
      model.reseeded_at.push_back(iteration + 1);
      double total = 0.0;
      for (double t : model.weights) total += t;
      for (double& t : model.weights) t /= total;
    }
  }
  model.validate();
  return model;
}

double log_density(const GmmModel& model, std::span<const double> x) {
  check_row(model, x);
  std::vector<double> log_joint;
  joint_log_densities(model, component_constants(model), x.data(), log_joint);
  return log_sum_exp(log_joint);
}

double log_likelihood(const GmmModel& model,
                      std::span<const ThingWindow> windows) {
  const auto constants = component_constants(model);
  std::vector<double> log_joint;
  double total = 0.0;
  for (const auto& w : windows) {
    const auto x = w.features(model.mask);
    joint_log_densities(model, constants, x.data(), log_joint);
    total += log_sum_exp(log_joint);
  }
  return total;
}

std::vector<double> responsibilities(const GmmModel& model,
                                     std::span<const double> x) {
  check_row(model, x);
  std::vector<double> log_joint;
  joint_log_densities(model, component_constants(model), x.data(), log_joint);
  const double lse = log_sum_exp(log_joint);
  for (double& v : log_joint) v = std::exp(v - lse);
  return log_joint;
}

std::vector<double> responsibilities(const GmmModel& model,
                                     const ThingWindow& window) {
  return responsibilities(model, window.features(model.mask));
}

FisherVector encode_fv(const SyntaxMatrix& syntax, const GmmModel& model,
                       const FvOptions& options) {
  std::vector<std::vector<double>> points;
  points.reserve(syntax.size());
  for (const auto& w : syntax.rows) points.push_back(w.features(model.mask));
  return encode_fv(points, model, options);
}

FisherVector encode_fv(std::span<const std::vector<double>> points,
                       const GmmModel& model, const FvOptions& options) {
  const int dim = model.dimension;
  FisherVector fv;
  fv.options = options;
  fv.values.assign(model.fisher_length(), 0.0);
  if (points.empty()) return fv;

  const auto constants = component_constants(model);
  std::vector<double> sigma(model.variances.size());
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    sigma[j] = std::sqrt(model.variances[j]);
  }
  std::vector<double> log_joint;
  for (const auto& x : points) {
    check_row(model, x);
    joint_log_densities(model, constants, x.data(), log_joint);
    const double lse = log_sum_exp(log_joint);
    for (int k = 0; k < model.components; ++k) {
      const double gamma = std::exp(log_joint[k] - lse);
      if (gamma == 0.0) continue;
      double* mu_block = &fv.values[2 * k * dim];
      double* sigma_block = mu_block + dim;
      for (int d = 0; d < dim; ++d) {
        const std::size_t j = k * dim + d;
        const double diff = x[d] - model.means[j];
        const double s = sigma[j];
        mu_block[d] += gamma * (diff / model.variances[j]);
        sigma_block[d] += gamma * (diff * diff / (s * s * s) - 1.0 / s);
      }
    }
  }

  if (options.average) {
    for (double& v : fv.values) v /= static_cast<double>(points.size());
  }
  if (options.signed_sqrt) {
    for (double& v : fv.values) v = std::copysign(std::sqrt(std::abs(v)), v);
  }
  if (options.l2) {
    double norm = 0.0;
    for (double v : fv.values) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : fv.values) v /= norm;
    }
  }
  return fv;
}

}  // namespace thingsyntax
