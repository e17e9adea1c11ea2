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

#include "thingsyntax/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <future>

#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", v);
  return buffer;
}

std::vector<SyntaxMatrix> noisy_annotations(const Experiment& experiment,
                                            double sigma, NoiseTargets targets,
                                            std::uint64_t seed) {
  std::vector<SyntaxMatrix> out;
  out.reserve(experiment.annotations.size());
  for (std::size_t i = 0; i < experiment.annotations.size(); ++i) {
    const auto& record = experiment.annotations[i];
    const NoisyImage noisy =
        inject_noise(record.boxes, record.meta, sigma, cell_seed(seed, i), targets);
    out.push_back(build_syntax(noisy.boxes, noisy.meta));
  }
  return out;
}

// Models fitted once per sweep and shared by its cells.
struct FittedModels {
  std::optional<StatementModels> statements;
  std::optional<GmmModel> gmm;
};

FittedModels fit_models(const Experiment& experiment, QueryMode mode,
                        const RetrievalConfig& config) {
  FittedModels models;
  if (mode != QueryMode::kBlocks) {
    models.statements = fit_statement_models(experiment.holdout, config);
  }
  if (mode != QueryMode::kStatements) {
    models.gmm = fit_block_model(experiment.holdout, config);
  }
  return models;
}

double retrieval_map(const Experiment& experiment, QueryMode mode,
                     const RetrievalConfig& config, const FittedModels& models,
                     double sigma, NoiseTargets targets, std::uint64_t seed) {
  const auto annotations = noisy_annotations(experiment, sigma, targets, seed);
  SceneScores statement_scores, block_scores;
  if (mode != QueryMode::kBlocks) {
    const auto statements = statements_from_annotations(
        annotations, experiment.labels, models.statements->boundaries);
    const auto profiles = statement_profiles(statements, config.bins, config.mask);
    statement_scores =
        score_statements(experiment.test, profiles, *models.statements, config);
  }
  if (mode != QueryMode::kStatements) {
    const auto profiles = block_profiles_from_annotations(
        annotations, experiment.labels, *models.gmm, config.fv);
    block_scores = score_blocks(experiment.test, profiles, *models.gmm, config);
  }
  SceneRankings rankings;
  switch (mode) {
    case QueryMode::kStatements:
      rankings = rank_scenes(statement_scores);
      break;
    case QueryMode::kBlocks:
      rankings = rank_scenes(block_scores);
      break;
    case QueryMode::kFused:
      rankings = fuse_scenes(statement_scores, block_scores, config.fusion);
      break;
  }
  return evaluate(rankings, experiment.labels).map;
}

RetrievalConfig with_overrides(const RetrievalConfig& base, int bins,
                               int components, const PropertyMask& mask) {
  RetrievalConfig config = base;
  config.bins = bins;
  config.components = components;
  config.mask = mask;
  return config;
}

// Runs `cell(i)` for i in [0, n) concurrently and returns results in order.
template <typename F>
std::vector<SweepRow> run_cells(std::size_t n, F cell) {
  std::vector<std::future<SweepRow>> futures;
  futures.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    futures.push_back(std::async(std::launch::async, cell, i));
  }
  std::vector<SweepRow> rows;
  rows.reserve(n);
  for (auto& f : futures) rows.push_back(f.get());
  return rows;
}

}  // namespace

std::string_view query_mode_name(QueryMode mode) {
  switch (mode) {
    case QueryMode::kStatements:
      return "statements";
    case QueryMode::kBlocks:
      return "blocks";
    case QueryMode::kFused:
      return "fused";
  }
  return "statements";
}

QueryMode query_mode_from_name(std::string_view name) {
  if (name == "statements") return QueryMode::kStatements;
  if (name == "blocks") return QueryMode::kBlocks;
  if (name == "fused") return QueryMode::kFused;
  throw ConfigError("unknown query mode '" + std::string(name) +
                    "' (statements|blocks|fused)");
}

double mean_color_feature(std::span<const SyntaxMatrix> holdout) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : holdout) {
    for (const auto& w : m.rows) {
      sum += color_feature(w.color);
      ++n;
    }
  }
  return n == 0 ? 0.5 : sum / static_cast<double>(n);
}

StatementModels fit_statement_models(std::span<const SyntaxMatrix> holdout,
                                     const RetrievalConfig& config) {
  StatementModels models;
  models.boundaries = fit_boundaries(holdout, config.bins);
  StatementHistogram pooled(config.bins, config.mask);
  for (const auto& m : holdout) {
    const auto h = histogram_from_syntax(m, models.boundaries, config.mask);
    for (std::size_t i = 0; i < h.counts.size(); ++i) pooled.counts[i] += h.counts[i];
  }
  models.prior = estimate_prior(pooled, config.alpha);
  return models;
}

GmmModel fit_block_model(std::span<const SyntaxMatrix> holdout,
                         const RetrievalConfig& config) {
  GmmOptions options = config.gmm;
  options.mask = config.mask;
  return fit_gmm(holdout, config.components, config.seed, options);
}

SceneScores score_statements(std::span<const SyntaxMatrix> images,
                             std::span<const SceneProfile> profiles,
                             const StatementModels& models,
                             const RetrievalConfig& config) {
  std::vector<StatementHistogram> histograms;
  histograms.reserve(images.size());
  for (const auto& image : images) {
    histograms.push_back(histogram_from_syntax(image, models.boundaries, config.mask));
  }
  SceneScores scores;
  for (const auto& profile : profiles) {
    ScoreMap& s = scores[profile.scene_id];
    for (std::size_t i = 0; i < images.size(); ++i) {
      s[images[i].image_id] =
          dap_score(histograms[i], profile, models.prior, config.dap);
    }
  }
  return scores;
}

SceneScores score_blocks(std::span<const SyntaxMatrix> images,
                         std::span<const SceneProfile> profiles,
                         const GmmModel& model, const RetrievalConfig& config) {
  std::vector<FisherVector> encoded;
  encoded.reserve(images.size());
  for (const auto& image : images) encoded.push_back(encode_fv(image, model, config.fv));
  SceneScores scores;
  for (const auto& profile : profiles) {
    ScoreMap& s = scores[profile.scene_id];
    for (std::size_t i = 0; i < images.size(); ++i) {
      s[images[i].image_id] = fv_distance_score(encoded[i], profile);
    }
  }
  return scores;
}

SceneRankings rank_scenes(const SceneScores& scores) {
  SceneRankings out;
  for (const auto& [scene, s] : scores) out[scene] = rank_images(s);
  return out;
}

SceneRankings fuse_scenes(const SceneScores& a, const SceneScores& b,
                          FusionMethod method) {
  SceneRankings out;
  for (const auto& [scene, s] : a) {
    const auto it = b.find(scene);
    if (it == b.end()) {
      throw InvalidInput("scene '" + scene + "' has no block-query scores to fuse");
    }
    out[scene] = fuse_rankings(s, it->second, method);
  }
  return out;
}

std::map<std::string, std::vector<std::string>> statements_from_annotations(
    std::span<const SyntaxMatrix> annotations,
    const std::map<std::string, std::string>& labels,
    const BinBoundaries& boundaries) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& m : annotations) {
    const auto it = labels.find(m.image_id);
    if (it == labels.end()) continue;
    auto rendered = render_syntax(m, boundaries);
    auto& target = out[it->second];
    target.insert(target.end(), rendered.begin(), rendered.end());
  }
  return out;
}

std::vector<SceneProfile> statement_profiles(
    const std::map<std::string, std::vector<std::string>>& statements, int bins,
    const PropertyMask& mask) {
  std::vector<SceneProfile> out;
  for (const auto& [scene, texts] : statements) {
    out.push_back(build_statement_profile(scene, texts, bins, mask));
  }
  return out;
}

std::vector<SceneProfile> block_profiles(
    const std::map<std::string, std::vector<BlockIllustration>>& illustrations,
    const GmmModel& model, const FvOptions& options, double any_color_feature) {
  std::vector<SceneProfile> out;
  for (const auto& [scene, list] : illustrations) {
    out.push_back(build_block_profile(scene, list, model, options, any_color_feature));
  }
  return out;
}

std::vector<SceneProfile> block_profiles_from_annotations(
    std::span<const SyntaxMatrix> annotations,
    const std::map<std::string, std::string>& labels, const GmmModel& model,
    const FvOptions& options) {
  std::map<std::string, SyntaxMatrix> merged;
  for (const auto& m : annotations) {
    const auto it = labels.find(m.image_id);
    if (it == labels.end()) continue;
    auto& target = merged[it->second];
    target.image_id = it->second;
    target.rows.insert(target.rows.end(), m.rows.begin(), m.rows.end());
  }
  std::vector<SceneProfile> out;
  for (const auto& [scene, syntax] : merged) {
    if (syntax.empty()) {
      throw InvalidInput("scene '" + scene + "' has no annotated windows");
    }
    SceneProfile profile;
    profile.scene_id = scene;
    profile.kind = ProfileKind::kFisherVector;
    profile.fisher = encode_fv(syntax, model, options);
    profile.components = model.components;
    out.push_back(std::move(profile));
  }
  return out;
}

Experiment Experiment::from_records(std::span<const WindowsRecord> holdout,
                                    std::span<const WindowsRecord> test,
                                    std::span<const WindowsRecord> annotations,
                                    const RetrievalConfig& config) {
  Experiment e;
  e.holdout = syntax_from_records(holdout);
  e.test = syntax_from_records(test);
  e.labels = scene_labels(test);
  for (const auto& [id, scene] : scene_labels(annotations)) e.labels[id] = scene;
  e.annotations.assign(annotations.begin(), annotations.end());
  e.config = config;
  return e;
}

double annotation_retrieval_map(const Experiment& experiment, QueryMode mode,
                                int bins, int components, const PropertyMask& mask,
                                double sigma, NoiseTargets targets,
                                std::uint64_t seed) {
  const RetrievalConfig config =
      with_overrides(experiment.config, bins, components, mask);
  const FittedModels models = fit_models(experiment, mode, config);
  return retrieval_map(experiment, mode, config, models, sigma, targets, seed);
}

std::vector<SweepRow> sweep_bins(const Experiment& experiment,
                                 std::span<const int> bin_counts) {
  const auto& base = experiment.config;
  return run_cells(bin_counts.size(), [&](std::size_t i) {
    SweepRow row{"bins", "statements", base.mask.to_string(), "none",
                 bin_counts[i], base.components, 0.0, "label", 0.0};
    row.map = annotation_retrieval_map(experiment, QueryMode::kStatements,
                                       bin_counts[i], base.components, base.mask,
                                       0.0, NoiseTargets::none(),
                                       cell_seed(base.seed, i));
    return row;
  });
}

std::vector<SweepRow> sweep_components(const Experiment& experiment,
                                       std::span<const int> component_counts) {
  const auto& base = experiment.config;
  return run_cells(component_counts.size(), [&](std::size_t i) {
    SweepRow row{"gmm", "blocks", base.mask.to_string(), "none", base.bins,
                 component_counts[i], 0.0, "label", 0.0};
    row.map = annotation_retrieval_map(experiment, QueryMode::kBlocks, base.bins,
                                       component_counts[i], base.mask, 0.0,
                                       NoiseTargets::none(),
                                       cell_seed(base.seed, i));
    return row;
  });
}

std::vector<SweepRow> sweep_noise(const Experiment& experiment, QueryMode mode,
                                  std::span<const double> sigmas,
                                  std::span<const NoiseTargets> targets) {
  const auto& config = experiment.config;
  const FittedModels models = fit_models(experiment, mode, config);
  const std::size_t cells = sigmas.size() * targets.size();
  return run_cells(cells, [&](std::size_t i) {
    const double sigma = sigmas[i / targets.size()];
    const NoiseTargets target = targets[i % targets.size()];
    SweepRow row{"noise", std::string(query_mode_name(mode)), config.mask.to_string(),
                 target.to_string(), config.bins, config.components, sigma,
                 "label", 0.0};
    row.map = retrieval_map(experiment, mode, config, models, sigma, target,
                            cell_seed(config.seed, i));
    return row;
  });
}

std::vector<SweepRow> sweep_properties(const Experiment& experiment,
                                       QueryMode mode) {
  const auto& base = experiment.config;
  std::vector<PropertyMask> masks;
  for (Property p : kAllProperties) masks.push_back(PropertyMask::only(p));
  masks.push_back(PropertyMask::all());
  return run_cells(masks.size(), [&](std::size_t i) {
    SweepRow row{"property", std::string(query_mode_name(mode)),
                 masks[i].to_string(), "none", base.bins, base.components, 0.0,
                 "label", 0.0};
    row.map = annotation_retrieval_map(experiment, mode, base.bins, base.components,
                                       masks[i], 0.0, NoiseTargets::none(),
                                       cell_seed(base.seed, i));
    return row;
  });
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "sweep,mode,property,targets,B,K,sigma,color_source,MAP\n";
  for (const auto& r : rows) {
    std::string property = r.property;
    std::replace(property.begin(), property.end(), ',', '+');
    std::string targets = r.targets;
    std::replace(targets.begin(), targets.end(), ',', '+');
    out += r.sweep + "," + r.mode + "," + property + "," + targets + "," +
           std::to_string(r.bins) + "," + std::to_string(r.components) + "," +
           format_double(r.sigma) + "," + r.color_source + "," +
           format_double(r.map) + "\n";
  }
  return out;
}

}  // namespace thingsyntax
