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

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "thingsyntax/analysis.h"
#include "thingsyntax/errors.h"
#include "thingsyntax/io.h"
#include "thingsyntax/pipeline.h"
#include "thingsyntax/service.h"

namespace thingsyntax::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

// Values settable from flags, a JSON config file, or defaults, in that order
// of precedence.
struct Settings {
  fs::path workdir = "run";
  int bins = 3;
  int components = 1024;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  std::string mask = "all";
  std::string dap = "soft";
  std::string fusion = "minmax";
  std::size_t box_cap = 200;

  RetrievalConfig retrieval() const {
    RetrievalConfig config;
    config.bins = bins;
    config.components = components;
    config.seed = seed;
    config.alpha = alpha;
    config.mask = PropertyMask::parse(mask);
    if (dap == "soft") {
      config.dap = DapVariant::kSoft;
    } else if (dap == "binary") {
      config.dap = DapVariant::kBinary;
    } else {
      throw ConfigError("--dap must be soft or binary");
    }
    if (fusion == "minmax") {
      config.fusion = FusionMethod::kMinMaxAverage;
    } else if (fusion == "rrf") {
      config.fusion = FusionMethod::kReciprocalRank;
    } else {
      throw ConfigError("--fusion must be minmax or rrf");
    }
    if (bins < 2) throw ConfigError("B must be at least 2");
    if (components < 1) throw ConfigError("K must be at least 1");
    return config;
  }

  json to_json() const {
    return json{{"workdir", workdir.string()}, {"B", bins},     {"K", components},
                {"seed", seed},                {"alpha", alpha}, {"mask", mask},
                {"dap", dap},                  {"fusion", fusion}, {"box_cap", box_cap}};
  }
};

// Artifacts written by the running command. They are removed when the
// command fails.
class Run {
 public:
  Run(std::string command, Settings settings, std::vector<std::string> args,
      std::ostream& out, std::ostream& err)
      : command_(std::move(command)),
        settings_(std::move(settings)),
        args_(std::move(args)),
        out_(out),
        err_(err) {}

  const Settings& settings() const { return settings_; }
  fs::path path(const std::string& name) const { return settings_.workdir / name; }
  std::ostream& out() { return out_; }

  void input(const fs::path& p) { inputs_[p.string()] = file_digest(p); }

  void write(const fs::path& p, std::string_view contents) {
    write_file(p, contents);
    outputs_.push_back(p);
  }

  void warn_all(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) err_ << "warning: " << w << "\n";
  }

  std::vector<WindowsRecord> windows(const fs::path& p) {
    input(p);
    std::vector<std::string> warnings;
    LoadOptions options;
    options.box_cap = settings_.box_cap;
    auto records = load_windows(p, options, &warnings);
    warn_all(warnings);
    return records;
  }

  void finish(json extra = json::object()) {
    json manifest{{"command", command_},
                  {"tool_version", kToolVersion},
                  {"arguments", args_},
                  {"config", settings_.to_json()},
                  {"inputs", inputs_}};
    json outputs = json::array();
    for (const auto& p : outputs_) outputs.push_back(p.string());
    manifest["outputs"] = outputs;
    for (auto& [k, v] : extra.items()) manifest[k] = v;
    write(path("manifest-" + command_ + ".json"), manifest.dump(2) + "\n");
  }

  void rollback() {
    for (const auto& p : outputs_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    outputs_.clear();
  }

 private:
  std::string command_;
  Settings settings_;
  std::vector<std::string> args_;
  std::ostream& out_;
  std::ostream& err_;
  std::map<std::string, std::string> inputs_;
  std::vector<fs::path> outputs_;
};

std::vector<std::string> split(const std::string& text, char separator) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, separator)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "3..11" or "3,5,7".
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  try {
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
      const int lo = std::stoi(text.substr(0, dots));
      const int hi = std::stoi(text.substr(dots + 2));
      if (hi < lo) throw ConfigError("empty range '" + text + "'");
      for (int v = lo; v <= hi; ++v) out.push_back(v);
      return out;
    }
    for (const auto& item : split(text, ',')) out.push_back(std::stoi(item));
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse integer list '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  try {
    for (const auto& item : split(text, ',')) out.push_back(std::stod(item));
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse number list '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

std::string require_models_message(const char* what, const char* command) {
  return std::string("missing ") + what + "; run '" + command + "' first";
}

StatementModels load_statement_models(Run& run) {
  const auto b = run.path("boundaries.json");
  const auto p = run.path("prior.json");
  if (!fs::exists(b) || !fs::exists(p)) {
    throw ConfigError(require_models_message("boundaries/prior", "fit-bins"));
  }
  run.input(b);
  run.input(p);
  StatementModels models{load_boundaries(b), load_prior(p)};
  if (models.prior.bins != models.boundaries.bins) {
    throw ConfigError("prior.json and boundaries.json disagree on B");
  }
  return models;
}

GmmModel load_block_model(Run& run) {
  const auto g = run.path("gmm.json");
  if (!fs::exists(g)) throw ConfigError(require_models_message("gmm.json", "fit-gmm"));
  run.input(g);
  return load_gmm(g);
}

double any_color_from_holdout(Run& run, const fs::path& holdout) {
  if (!fs::exists(holdout)) return 0.5;
  const auto records = run.windows(holdout);
  return mean_color_feature(syntax_from_records(records));
}

std::string rankings_jsonl(const SceneRankings& rankings) {
  std::string out;
  for (const auto& [scene, ranked] : rankings) {
    json list = json::array();
    for (const auto& item : ranked) {
      list.push_back(json{{"image_id", item.image_id}, {"score", item.score}});
    }
    out += json{{"scene", scene}, {"ranking", list}}.dump() + "\n";
  }
  return out;
}

SceneRankings parse_rankings(const std::string& text) {
  SceneRankings out;
  std::stringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      RankedList ranked;
      for (const auto& item : j.at("ranking")) {
        ranked.push_back({item.at("image_id").get<std::string>(),
                          item.at("score").get<double>()});
      }
      out[j.at("scene").get<std::string>()] = std::move(ranked);
    } catch (const json::exception& e) {
      throw FormatError("rankings line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ----- commands -----

struct SynthArgs {
  std::size_t per_class = 100;
  std::size_t holdout_per_class = 20;
  std::size_t annotations_per_class = 5;
  std::string archetypes = "corridor,shelfscape";
};

void cmd_synth(Run& run, const SynthArgs& a) {
  const auto names = split(a.archetypes, ',');
  const auto seed = run.settings().seed;
  const auto test = generate_synthetic(names, a.per_class, seed);
  const auto holdout = generate_synthetic(names, a.holdout_per_class, seed + 1);
  const auto annotations = generate_synthetic(names, a.annotations_per_class, seed + 2);
  run.write(run.path("windows.jsonl"), windows_to_jsonl(test));
  run.write(run.path("holdout.jsonl"), windows_to_jsonl(holdout));
  run.write(run.path("annotations.jsonl"), windows_to_jsonl(annotations));
  std::map<std::string, std::vector<std::string>> statements;
  std::map<std::string, std::vector<BlockIllustration>> blocks;
  for (const auto& name : names) {
    statements[name] = archetype(name).statements;
    blocks[name] = archetype(name).illustrations;
  }
  run.write(run.path("statements.tsv"), statement_queries_text(statements));
  run.write(run.path("blocks.jsonl"), block_queries_text(blocks));
  run.out() << "synthesized " << test.size() << " test, " << holdout.size()
            << " holdout and " << annotations.size() << " annotation images\n";
}

void cmd_fit_bins(Run& run, const std::string& holdout_arg) {
  const auto holdout_path = or_default(holdout_arg, run.path("holdout.jsonl"));
  const auto holdout = syntax_from_records(run.windows(holdout_path));
  const auto config = run.settings().retrieval();
  const auto models = fit_statement_models(holdout, config);
  run.write(run.path("boundaries.json"),
            seal_model("boundaries", boundaries_to_json(models.boundaries)));
  run.write(run.path("prior.json"), seal_model("prior", prior_to_json(models.prior)));
  run.out() << "fitted B=" << config.bins << " boundaries and statement prior\n";
}

void cmd_fit_gmm(Run& run, const std::string& holdout_arg) {
  const auto holdout_path = or_default(holdout_arg, run.path("holdout.jsonl"));
  const auto holdout = syntax_from_records(run.windows(holdout_path));
  const auto model = fit_block_model(holdout, run.settings().retrieval());
  run.write(run.path("gmm.json"), seal_model("gmm", gmm_to_json(model)));
  run.out() << "fitted K=" << model.components << " GMM in " << model.iterations
            << " iterations\n";
}

struct QueryArgs {
  std::string by = "statements";
  std::string statements;
  std::string blocks;
  std::string windows;
  std::string holdout;
  std::string profiles;
};

std::vector<SceneProfile> load_profiles(Run& run, const fs::path& dir,
                                        ProfileKind kind) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SceneProfile> out;
  for (const auto& f : files) {
    auto profile = load_profile(f);
    if (profile.kind != kind) continue;
    run.input(f);
    out.push_back(std::move(profile));
  }
  if (out.empty()) {
    throw ConfigError("no " + std::string(profile_kind_name(kind)) +
                      " profiles in " + dir.string());
  }
  return out;
}

std::vector<SceneProfile> statement_query_profiles(Run& run, const QueryArgs& a,
                                                   const RetrievalConfig& config) {
  if (!a.profiles.empty()) {
    return load_profiles(run, a.profiles, ProfileKind::kStatementHistogram);
  }
  const auto path = or_default(a.statements, run.path("statements.tsv"));
  run.input(path);
  return statement_profiles(parse_statement_queries(read_file(path)), config.bins,
                            config.mask);
}

std::vector<SceneProfile> block_query_profiles(Run& run, const QueryArgs& a,
                                               const GmmModel& model,
                                               const RetrievalConfig& config) {
  if (!a.profiles.empty()) {
    return load_profiles(run, a.profiles, ProfileKind::kFisherVector);
  }
  const auto path = or_default(a.blocks, run.path("blocks.jsonl"));
  run.input(path);
  const double any_color =
      any_color_from_holdout(run, or_default(a.holdout, run.path("holdout.jsonl")));
  return block_profiles(parse_block_queries(read_file(path)), model, config.fv,
                        any_color);
}

void cmd_profile(Run& run, const QueryArgs& a) {
  const auto config = run.settings().retrieval();
  const QueryMode mode = query_mode_from_name(a.by);
  std::vector<SceneProfile> profiles;
  if (mode == QueryMode::kStatements) {
    profiles = statement_query_profiles(run, a, config);
  } else if (mode == QueryMode::kBlocks) {
    const GmmModel model = load_block_model(run);
    profiles = block_query_profiles(run, a, model, config);
  } else {
    throw ConfigError("profile --by must be statements or blocks");
  }
  for (const auto& p : profiles) {
    const std::string suffix =
        p.kind == ProfileKind::kStatementHistogram ? "statements" : "blocks";
    run.write(run.path("profiles/" + p.scene_id + "." + suffix + ".json"),
              seal_model("profile", profile_to_json(p)));
  }
  run.out() << "wrote " << profiles.size() << " scene profiles\n";
}

void cmd_query(Run& run, const QueryArgs& a) {
  const auto config = run.settings().retrieval();
  const QueryMode mode = query_mode_from_name(a.by);
  const auto images =
      syntax_from_records(run.windows(or_default(a.windows, run.path("windows.jsonl"))));
  SceneScores statement_scores, block_scores;
  if (mode != QueryMode::kBlocks) {
    const auto models = load_statement_models(run);
    RetrievalConfig c = config;
    c.bins = models.boundaries.bins;
    c.mask = models.prior.mask;
    QueryArgs sa = a;
    if (mode == QueryMode::kFused) sa.profiles.clear();
    statement_scores =
        score_statements(images, statement_query_profiles(run, sa, c), models, c);
  }
  if (mode != QueryMode::kStatements) {
    const GmmModel model = load_block_model(run);
    QueryArgs ba = a;
    if (mode == QueryMode::kFused) ba.profiles.clear();
    block_scores =
        score_blocks(images, block_query_profiles(run, ba, model, config), model, config);
  }
  SceneRankings rankings;
  if (mode == QueryMode::kStatements) {
    rankings = rank_scenes(statement_scores);
  } else if (mode == QueryMode::kBlocks) {
    rankings = rank_scenes(block_scores);
  } else {
    rankings = fuse_scenes(statement_scores, block_scores, config.fusion);
  }
  const std::string name = "rankings-" + std::string(query_mode_name(mode)) + ".jsonl";
  run.write(run.path(name), rankings_jsonl(rankings));
  run.out() << "ranked " << images.size() << " images for " << rankings.size()
            << " scenes -> " << run.path(name).string() << "\n";
}

struct EvalArgs {
  std::string by = "statements";
  std::string rankings;
  std::string windows;
  std::string pool;
};

void cmd_eval(Run& run, const EvalArgs& a) {
  const QueryMode mode = query_mode_from_name(a.by);
  const auto rankings_path = or_default(
      a.rankings, run.path("rankings-" + std::string(query_mode_name(mode)) + ".jsonl"));
  run.input(rankings_path);
  SceneRankings rankings = parse_rankings(read_file(rankings_path));
  const auto labels =
      scene_labels(run.windows(or_default(a.windows, run.path("windows.jsonl"))));
  if (!a.pool.empty()) {
    run.input(a.pool);
    std::set<std::string> pool;
    std::stringstream in(read_file(a.pool));
    std::string id;
    while (in >> id) pool.insert(id);
    for (auto& [scene, ranked] : rankings) {
      std::erase_if(ranked, [&](const RankedItem& item) {
        return pool.count(item.image_id) == 0;
      });
    }
  }
  const Evaluation evaluation = evaluate(rankings, labels);
  const std::string name = "map_report-" + std::string(query_mode_name(mode)) + ".csv";
  run.write(run.path(name), evaluation_csv(evaluation));
  run.out() << "MAP " << evaluation.map << " over " << evaluation.rows.size()
            << " scenes -> " << run.path(name).string() << "\n";
}

struct KlArgs {
  std::string windows;
  std::string reference;
  std::string property = "all";
  int analysis_bins = kDefaultAnalysisBins;
};

std::map<std::string, PropertyDistribution> class_distributions(
    const std::vector<WindowsRecord>& records, Property property, int bins) {
  std::map<std::string, std::vector<SyntaxMatrix>> pools;
  const auto syntax = syntax_from_records(records);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].meta.scene_label) continue;
    pools[*records[i].meta.scene_label].push_back(syntax[i]);
  }
  std::map<std::string, PropertyDistribution> out;
  for (const auto& [scene, pool] : pools) {
    out[scene] = property_distribution(pool, property, bins);
  }
  return out;
}

void cmd_kl(Run& run, const KlArgs& a) {
  const auto records = run.windows(or_default(a.windows, run.path("windows.jsonl")));
  std::vector<Property> properties;
  if (a.property == "all") {
    properties.assign(kAllProperties.begin(), kAllProperties.end());
  } else {
    properties = PropertyMask::parse(a.property).properties();
  }
  std::vector<WindowsRecord> reference;
  if (!a.reference.empty()) reference = run.windows(a.reference);
  std::string mean_csv = "property,mean_kl\n";
  for (Property p : properties) {
    const auto classes = class_distributions(records, p, a.analysis_bins);
    const KlMatrix matrix = kl_matrix(classes);
    run.write(run.path("kl/" + std::string(property_name(p)) + ".csv"),
              kl_matrix_csv(matrix));
    run.out() << property_name(p) << ": max " << matrix.max_pair.from << "->"
              << matrix.max_pair.to << " " << matrix.max_pair.value << ", min "
              << matrix.min_pair.from << "->" << matrix.min_pair.to << " "
              << matrix.min_pair.value << "\n";
    if (!reference.empty()) {
      const auto ref = class_distributions(reference, p, a.analysis_bins);
      char buffer[64];
      std::snprintf(buffer, sizeof(buffer), "%.6f", mean_kl(classes, ref));
      mean_csv += std::string(property_name(p)) + "," + buffer + "\n";
    }
  }
  if (!reference.empty()) run.write(run.path("kl/mean_kl.csv"), mean_csv);
}

struct SweepArgs {
  std::string bins;
  std::string gmm;
  std::string noise;
  bool properties = false;
  bool baseline = false;
  std::string by = "statements";
  std::vector<std::string> targets;
  std::string windows, holdout, annotations;
};

void cmd_sweep(Run& run, const SweepArgs& a) {
  if (a.bins.empty() && a.gmm.empty() && a.noise.empty() && !a.properties) {
    throw ConfigError("sweep needs --bins, --gmm, --noise or --properties");
  }
  const auto test = run.windows(or_default(a.windows, run.path("windows.jsonl")));
  const auto holdout = run.windows(or_default(a.holdout, run.path("holdout.jsonl")));
  const auto annotations =
      run.windows(or_default(a.annotations, run.path("annotations.jsonl")));
  const Experiment experiment = Experiment::from_records(
      holdout, test, annotations, run.settings().retrieval());
  const QueryMode mode = query_mode_from_name(a.by);
  auto emit = [&](const std::string& name, const std::vector<SweepRow>& rows) {
    run.write(run.path("sweep-" + name + ".csv"), sweep_csv(rows));
    for (const auto& r : rows) {
      run.out() << name << " B=" << r.bins << " K=" << r.components
                << " sigma=" << r.sigma << " property=" << r.property
                << " targets=" << r.targets << " MAP=" << r.map << "\n";
    }
  };
  if (!a.bins.empty()) emit("bins", sweep_bins(experiment, parse_int_list(a.bins)));
  if (!a.gmm.empty()) emit("gmm", sweep_components(experiment, parse_int_list(a.gmm)));
  if (!a.noise.empty()) {
    std::vector<double> sigmas;
    if (a.noise == "grid") {
      sigmas.assign(kNoiseGrid.begin(), kNoiseGrid.end());
    } else {
      sigmas = parse_double_list(a.noise);
    }
    if (a.baseline) sigmas.insert(sigmas.begin(), 0.0);
    std::vector<NoiseTargets> targets;
    for (const auto& t : a.targets) targets.push_back(NoiseTargets::parse(t));
    if (targets.empty()) targets.push_back(NoiseTargets::all());
    emit("noise", sweep_noise(experiment, mode, sigmas, targets));
  }
  if (a.properties) emit("property", sweep_properties(experiment, mode));
}

struct IndexArgs {
  std::string windows;
  std::string holdout;
  std::string index_dir;
};

void cmd_index(Run& run, const IndexArgs& a) {
  const auto records = run.windows(or_default(a.windows, run.path("windows.jsonl")));
  const auto images = syntax_from_records(records);
  const auto models = load_statement_models(run);
  std::optional<GmmModel> gmm;
  if (fs::exists(run.path("gmm.json"))) gmm = load_block_model(run);
  const double any_color =
      any_color_from_holdout(run, or_default(a.holdout, run.path("holdout.jsonl")));
  const fs::path dir = or_default(a.index_dir, run.path("index"));
  write_service_index(dir, images, scene_labels(records), models.boundaries,
                      models.prior, gmm ? &*gmm : nullptr, any_color);
  for (const char* f : {"boundaries.json", "prior.json", "gmm.json", "index.json"}) {
    if (fs::exists(dir / f)) run.input(dir / f);
  }
  run.out() << "indexed " << images.size() << " images in " << dir.string() << "\n";
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string index_dir;
  std::string thumbs_dir;
};

void cmd_serve(Run& run, const ServeArgs& a) {
  const fs::path dir = or_default(a.index_dir, run.path("index"));
  QueryService service(load_service_index(dir));
  if (!a.thumbs_dir.empty()) service.set_thumbs_dir(fs::path(a.thumbs_dir));
  run.out() << "serving " << dir.string() << " on http://" << a.host << ":" << a.port
            << "\n";
  run.out().flush();
  if (!serve(service, a.host, a.port)) {
    throw ConfigError("cannot bind " + a.host + ":" + std::to_string(a.port));
  }
}

void apply_config_file(const std::string& file, Settings& s,
                       const std::set<std::string>& given) {
  if (file.empty()) return;
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + file + ": " + e.what());
  }
  auto take = [&](const char* key, auto& target) {
    if (given.count(key) == 0 && j.contains(key)) {
      target = j[key].get<std::decay_t<decltype(target)>>();
    }
  };
  try {
    if (given.count("workdir") == 0 && j.contains("workdir")) {
      s.workdir = j["workdir"].get<std::string>();
    }
    take("B", s.bins);
    take("K", s.components);
    take("seed", s.seed);
    take("alpha", s.alpha);
    take("mask", s.mask);
    take("dap", s.dap);
    take("fusion", s.fusion);
    take("box_cap", s.box_cap);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + file + ": " + e.what());
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Example-free scene retrieval over thing windows"};
  app.name("thingsyntax");
  app.require_subcommand(1);
  Settings settings;
  std::string config_file;
  app.add_option("--workdir", settings.workdir, "Directory holding run artifacts")
      ->capture_default_str();
  app.add_option("--config", config_file, "JSON config file (flags override it)");
  app.add_option("--seed", settings.seed, "Master random seed")->capture_default_str();
  app.add_option("--B", settings.bins, "Bins per continuous property")
      ->capture_default_str();
  app.add_option("--K", settings.components, "GMM components")->capture_default_str();
  app.add_option("--alpha", settings.alpha, "Laplace smoothing")->capture_default_str();
  app.add_option("--mask", settings.mask, "Properties used, e.g. ratio,color")
      ->capture_default_str();
  app.add_option("--dap", settings.dap, "DAP variant: soft|binary")->capture_default_str();
  app.add_option("--fusion", settings.fusion, "Fusion: minmax|rrf")->capture_default_str();
  app.add_option("--box-cap", settings.box_cap, "Boxes kept per image (0 = all)")
      ->capture_default_str();
  app.fallthrough();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--per-class", synth.per_class, "Test images per class");
  synth_cmd->add_option("--holdout-per-class", synth.holdout_per_class);
  synth_cmd->add_option("--annotations-per-class", synth.annotations_per_class);
  synth_cmd->add_option("--archetypes", synth.archetypes);

  std::string holdout_arg;
  auto* bins_cmd = app.add_subcommand("fit-bins", "Fit bin boundaries and priors");
  bins_cmd->add_option("--holdout", holdout_arg, "Holdout windows file");
  auto* gmm_cmd = app.add_subcommand("fit-gmm", "Fit the window GMM");
  gmm_cmd->add_option("--holdout", holdout_arg, "Holdout windows file");

  QueryArgs query;
  auto* profile_cmd = app.add_subcommand("profile", "Build scene profiles");
  profile_cmd->add_option("--by", query.by, "statements|blocks");
  profile_cmd->add_option("--statements", query.statements, "scene<TAB>statement file");
  profile_cmd->add_option("--blocks", query.blocks, "Block illustrations JSONL");
  profile_cmd->add_option("--holdout", query.holdout);
  auto* query_cmd = app.add_subcommand("query", "Rank the corpus for every scene");
  query_cmd->add_option("--by", query.by, "statements|blocks|fused");
  query_cmd->add_option("--statements", query.statements);
  query_cmd->add_option("--blocks", query.blocks);
  query_cmd->add_option("--windows", query.windows, "Test corpus windows file");
  query_cmd->add_option("--holdout", query.holdout);
  query_cmd->add_option("--profiles", query.profiles, "Directory of profile files");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Write the MAP report");
  eval_cmd->add_option("--by", eval.by, "statements|blocks|fused");
  eval_cmd->add_option("--rankings", eval.rankings);
  eval_cmd->add_option("--windows", eval.windows);
  eval_cmd->add_option("--pool", eval.pool, "File of image ids restricting the pool");

  KlArgs kl;
  auto* kl_cmd = app.add_subcommand("kl", "Per-property KL divergence reports");
  kl_cmd->add_option("--windows", kl.windows);
  kl_cmd->add_option("--reference", kl.reference, "Windows file to average KL against");
  kl_cmd->add_option("--property", kl.property, "all or a property list");
  kl_cmd->add_option("--analysis-bins", kl.analysis_bins);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Robustness and parameter sweeps");
  sweep_cmd->add_option("--bins", sweep.bins, "e.g. 3..11");
  sweep_cmd->add_option("--gmm", sweep.gmm, "e.g. 16,32,64");
  sweep_cmd->add_option("--noise", sweep.noise, "e.g. 2,4,6,8,10,15,20 or 'grid'");
  sweep_cmd->add_flag("--properties", sweep.properties, "Per-property ablation");
  sweep_cmd->add_flag("--baseline", sweep.baseline, "Add a sigma=0 noise row");
  sweep_cmd->add_option("--by", sweep.by, "statements|blocks|fused");
  sweep_cmd->add_option("--targets", sweep.targets, "Noise targets, repeatable");
  sweep_cmd->add_option("--windows", sweep.windows);
  sweep_cmd->add_option("--holdout", sweep.holdout);
  sweep_cmd->add_option("--annotations", sweep.annotations);

  IndexArgs index;
  auto* index_cmd = app.add_subcommand("index", "Build the service index");
  index_cmd->add_option("--windows", index.windows);
  index_cmd->add_option("--holdout", index.holdout);
  index_cmd->add_option("--index-dir", index.index_dir);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP query service");
  serve_cmd->add_option("--host", serve_args.host);
  serve_cmd->add_option("--port", serve_args.port);
  serve_cmd->add_option("--index-dir", serve_args.index_dir);
  serve_cmd->add_option("--thumbs-dir", serve_args.thumbs_dir);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }

  std::set<std::string> given;
  for (const char* name : {"workdir", "seed", "B", "K", "alpha", "mask", "dap",
                           "fusion", "box_cap"}) {
    std::string flag = std::string("--") + name;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (app.count(flag) > 0) given.insert(name);
  }

  CLI::App* chosen = app.get_subcommands().front();
  std::unique_ptr<Run> run;
  try {
    apply_config_file(config_file, settings, given);
    run = std::make_unique<Run>(chosen->get_name(), settings, args, out, err);
    if (!config_file.empty()) run->input(config_file);
    const std::string name = chosen->get_name();
    if (name == "synth") {
      cmd_synth(*run, synth);
    } else if (name == "fit-bins") {
      cmd_fit_bins(*run, holdout_arg);
    } else if (name == "fit-gmm") {
      cmd_fit_gmm(*run, holdout_arg);
    } else if (name == "profile") {
      cmd_profile(*run, query);
    } else if (name == "query") {
      cmd_query(*run, query);
    } else if (name == "eval") {
      cmd_eval(*run, eval);
    } else if (name == "kl") {
      cmd_kl(*run, kl);
    } else if (name == "sweep") {
      cmd_sweep(*run, sweep);
    } else if (name == "index") {
      cmd_index(*run, index);
    } else if (name == "serve") {
      cmd_serve(*run, serve_args);
      return 0;
    }
    run->finish();
    return 0;
  } catch (const Error& e) {
    if (run) run->rollback();
    json error{{"code", e.code()}, {"message", e.what()}};
    if (const auto* parse = dynamic_cast<const ParseError*>(&e)) {
      error["token"] = parse->token();
      error["position"] = parse->position();
      error["line"] = parse->line();
    }
    err << json{{"error", error}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    if (run) run->rollback();
    err << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
}

}  // namespace thingsyntax::cli
