// Copyright 2026 The MIA Toolkit Authors
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

#include "mia/experiment.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <set>

#include "mia/density.h"
#include "mia/errors.h"
#include "mia/evaluation.h"
#include "mia/io.h"
#include "mia/rng.h"

namespace mia {

using nlohmann::json;

namespace {

void CheckKeys(const json& j, std::initializer_list<const char*> allowed,
               const std::string& where) {
  if (!j.is_object()) throw InvalidInputError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw InvalidInputError(where + ": unknown key \"" + key + "\"");
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json AdamToJson(const AdamConfig& a) {
  return {{"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}};
}

AdamConfig AdamFromJson(const json& j, AdamConfig a) {
  CheckKeys(j, {"beta1", "beta2", "epsilon"}, "adam");
  Read(j, "beta1", a.beta1);
  Read(j, "beta2", a.beta2);
  Read(j, "epsilon", a.epsilon);
  return a;
}

json TrainToJson(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"adam", AdamToJson(t.adam)},
          {"patience", t.patience},
          {"lr_decay", t.lr_decay},
          {"lr_decay_factor", t.lr_decay_factor},
          {"resample_period", t.resample_period},
          {"val_fraction", t.val_fraction},
          {"hidden_units", t.hidden_units},
          {"seed", t.seed}};
}

TrainConfig TrainFromJson(const json& j, TrainConfig t) {
  CheckKeys(j,
            {"epochs", "batch_size", "learning_rate", "adam", "patience", "lr_decay",
             "lr_decay_factor", "resample_period", "val_fraction", "hidden_units", "seed"},
            "detector");
  Read(j, "epochs", t.epochs);
  Read(j, "batch_size", t.batch_size);
  Read(j, "learning_rate", t.learning_rate);
  if (j.contains("adam")) t.adam = AdamFromJson(j["adam"], t.adam);
  Read(j, "patience", t.patience);
  Read(j, "lr_decay", t.lr_decay);
  Read(j, "lr_decay_factor", t.lr_decay_factor);
  Read(j, "resample_period", t.resample_period);
  Read(j, "val_fraction", t.val_fraction);
  Read(j, "hidden_units", t.hidden_units);
  Read(j, "seed", t.seed);
  return t;
}

json GanToJson(const GanConfig& g) {
  return {{"latent_dim", g.latent_dim},
          {"hidden_units", g.hidden_units},
          {"epochs", g.epochs},
          {"batch_size", g.batch_size},
          {"learning_rate", g.learning_rate},
          {"adam", AdamToJson(g.adam)},
          {"loss", g.loss == GeneratorLoss::kMinimax ? "minimax" : "non_saturating"},
          {"seed", g.seed}};
}

GanConfig GanFromJson(const json& j, GanConfig g) {
  CheckKeys(j,
            {"latent_dim", "hidden_units", "epochs", "batch_size", "learning_rate", "adam",
             "loss", "seed"},
            "target.gan");
  Read(j, "latent_dim", g.latent_dim);
  Read(j, "hidden_units", g.hidden_units);
  Read(j, "epochs", g.epochs);
  Read(j, "batch_size", g.batch_size);
  Read(j, "learning_rate", g.learning_rate);
  if (j.contains("adam")) g.adam = AdamFromJson(j["adam"], g.adam);
  if (j.contains("loss")) {
    const std::string loss = j["loss"].get<std::string>();
    if (loss == "minimax") {
      g.loss = GeneratorLoss::kMinimax;
    } else if (loss == "non_saturating") {
      g.loss = GeneratorLoss::kNonSaturating;
    } else {
      throw InvalidInputError("target.gan.loss must be \"non_saturating\" or \"minimax\"");
    }
  }
  Read(j, "seed", g.seed);
  return g;
}

bool SameAdam(const AdamConfig& a, const AdamConfig& b) {
  return a.beta1 == b.beta1 && a.beta2 == b.beta2 && a.epsilon == b.epsilon;
}

// Accepted per-attack parameter keys.
const std::map<std::string, std::vector<std::string>>& AttackParamKeys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"one_way", {"metric"}},
      {"two_way", {"metric"}},
      {"weighted", {"weights"}},
      {"robust_homer", {"epsilon"}},
      {"detector", {"synthetic_per_draw", "test_fraction"}},
      {"adis", {"held_out", "epochs", "pca_components", "gmm_components", "augment"}},
      {"domias", {"pca_components", "gmm_components"}},
      {"bayes_oracle", {}},
  };
  return keys;
}

std::map<Metric, double> WeightsFromJson(const json& params) {
  std::map<Metric, double> w = {{Metric::kHamming, 0.5}, {Metric::kEuclidean, 0.5}};
  if (params.contains("weights")) {
    w.clear();
    for (const auto& [name, value] : params["weights"].items()) {
      w[ParseMetric(name)] = value.get<double>();
    }
  }
  return w;
}

size_t AdisHeldOut(const json& params, size_t reference_size) {
  return params.value("held_out", std::min<size_t>(300, reference_size / 2));
}

}  // namespace

bool TargetConfig::operator==(const TargetConfig& o) const {
  return kind == o.kind && beta == o.beta && gan.latent_dim == o.gan.latent_dim &&
         gan.hidden_units == o.gan.hidden_units && gan.epochs == o.gan.epochs &&
         gan.batch_size == o.gan.batch_size && gan.learning_rate == o.gan.learning_rate &&
         SameAdam(gan.adam, o.gan.adam) && gan.loss == o.gan.loss && gan.seed == o.gan.seed;
}

ExperimentConfig::ExperimentConfig() {
  detector.epochs = 60;
  for (const char* name :
       {"one_way", "two_way", "weighted", "robust_homer", "detector", "adis", "domias"}) {
    attacks.push_back({name, json::object()});
  }
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return dataset == o.dataset && dimension == o.dimension &&
         subpopulations == o.subpopulations && frequency_beta_a == o.frequency_beta_a &&
         frequency_beta_b == o.frequency_beta_b && split.train_size == o.split.train_size &&
         split.reference_size == o.split.reference_size &&
         split.test_member_size == o.split.test_member_size &&
         split.test_nonmember_size == o.split.test_nonmember_size && target == o.target &&
         attacks == o.attacks && detector == o.detector && synthetic_size == o.synthetic_size &&
         fpr_grid == o.fpr_grid && n_runs == o.n_runs && master_seed == o.master_seed &&
         output_dir == o.output_dir && threads == o.threads && diagnostics == o.diagnostics;
}

const std::vector<std::string>& KnownAttackNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, keys] : AttackParamKeys()) v.push_back(name);
    return v;
  }();
  return names;
}

void ExperimentConfig::Validate() const {
  if (n_runs < 1) throw InvalidInputError("n_runs must be >= 1");
  if (dimension < 1) throw InvalidInputError("dimension must be >= 1");
  if (subpopulations < 1) throw InvalidInputError("subpopulations must be >= 1");
  if (!(frequency_beta_a > 0 && frequency_beta_b > 0)) {
    throw InvalidInputError("frequency_beta_a and frequency_beta_b must be > 0");
  }
  if (split.train_size < 1 || split.reference_size < 2 || split.test_nonmember_size < 1 ||
      split.test_member_size < 1) {
    throw InvalidInputError("split sizes must be positive (reference >= 2)");
  }
  if (split.test_member_size > split.train_size) {
    throw InvalidInputError("split.test_members cannot exceed split.train");
  }
  if (target.kind == TargetConfig::Kind::kOracle && !(target.beta >= 0 && target.beta <= 1)) {
    throw InvalidInputError("target.beta must lie in [0, 1]");
  }
  if (threads < 1) throw InvalidInputError("threads must be >= 1");
  detector.Validate();
  MakeFprGrid(fpr_grid);
  if (attacks.empty()) throw InvalidInputError("attacks must not be empty");
  std::set<std::string> seen;
  for (const AttackSpec& a : attacks) {
    const auto it = AttackParamKeys().find(a.name);
    if (it == AttackParamKeys().end()) {
      std::string valid;
      for (const auto& n : KnownAttackNames()) valid += (valid.empty() ? "" : ", ") + n;
      throw InvalidInputError("unknown attack \"" + a.name + "\"; valid attacks: " + valid);
    }
    if (!seen.insert(a.name).second) throw InvalidInputError("duplicate attack " + a.name);
    if (!a.params.is_object()) throw InvalidInputError(a.name + ": params must be an object");
    for (const auto& [key, value] : a.params.items()) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw InvalidInputError(a.name + ": unknown parameter \"" + key + "\"");
      }
    }
    try {
      if (a.params.contains("metric")) ParseMetric(a.params["metric"].get<std::string>());
      if (a.name == "weighted") {
        // Same weight checks as WeightedAttack.
        bool positive = false;
        for (const auto& [m, w] : WeightsFromJson(a.params)) {
          if (w < 0) throw InvalidInputError("weighted: weights must be >= 0");
          positive |= w > 0;
        }
        if (!positive) throw InvalidInputError("weighted: at least one weight must be > 0");
      }
    } catch (const json::exception& e) {
      throw InvalidInputError(a.name + ": " + e.what());
    }
    if (a.name == "bayes_oracle" && target.kind != TargetConfig::Kind::kOracle) {
      throw InvalidInputError("bayes_oracle requires an oracle target");
    }
    if (a.name == "adis" && AdisHeldOut(a.params, split.reference_size) + 2 > split.reference_size) {
      throw InvalidInputError("adis: held_out leaves too few reference rows");
    }
  }
}

json ConfigToJson(const ExperimentConfig& c) {
  json attacks = json::array();
  for (const AttackSpec& a : c.attacks) attacks.push_back({{"name", a.name}, {"params", a.params}});
  json target = {{"kind", c.target.kind == TargetConfig::Kind::kOracle ? "oracle" : "vanilla_gan"},
                 {"beta", c.target.beta},
                 {"gan", GanToJson(c.target.gan)}};
  return {{"dataset", c.dataset},
          {"dimension", c.dimension},
          {"subpopulations", c.subpopulations},
          {"frequency_beta_a", c.frequency_beta_a},
          {"frequency_beta_b", c.frequency_beta_b},
          {"split",
           {{"train", c.split.train_size},
            {"reference", c.split.reference_size},
            {"test_members", c.split.test_member_size},
            {"test_nonmembers", c.split.test_nonmember_size}}},
          {"target", target},
          {"attacks", attacks},
          {"detector", TrainToJson(c.detector)},
          {"synthetic_size", c.synthetic_size},
          {"fpr_grid", c.fpr_grid},
          {"n_runs", c.n_runs},
          {"master_seed", c.master_seed},
          {"output_dir", c.output_dir},
          {"threads", c.threads},
          {"diagnostics",
           {{"enabled", c.diagnostics.enabled},
            {"memorization_total", c.diagnostics.memorization_total},
            {"memorization_batch", c.diagnostics.memorization_batch},
            {"mmd_sample", c.diagnostics.mmd_sample},
            {"mmd_permutations", c.diagnostics.mmd_permutations},
            {"pca_scatter_rows", c.diagnostics.pca_scatter_rows}}}};
}

ExperimentConfig ConfigFromJson(const json& j) {
  ExperimentConfig c;
  try {
    CheckKeys(j,
              {"dataset", "dimension", "subpopulations", "frequency_beta_a", "frequency_beta_b",
               "split", "target", "attacks", "detector", "synthetic_size", "fpr_grid", "n_runs",
               "master_seed", "output_dir", "threads", "diagnostics"},
              "config");
    Read(j, "dataset", c.dataset);
    Read(j, "dimension", c.dimension);
    Read(j, "subpopulations", c.subpopulations);
    Read(j, "frequency_beta_a", c.frequency_beta_a);
    Read(j, "frequency_beta_b", c.frequency_beta_b);
    if (j.contains("split")) {
      const json& s = j["split"];
      CheckKeys(s, {"train", "reference", "test_members", "test_nonmembers"}, "split");
      Read(s, "train", c.split.train_size);
      Read(s, "reference", c.split.reference_size);
      Read(s, "test_members", c.split.test_member_size);
      Read(s, "test_nonmembers", c.split.test_nonmember_size);
    }
    if (j.contains("target")) {
      const json& t = j["target"];
      CheckKeys(t, {"kind", "beta", "gan"}, "target");
      const std::string kind = t.value("kind", "vanilla_gan");
      if (kind == "oracle") {
        c.target.kind = TargetConfig::Kind::kOracle;
      } else if (kind == "vanilla_gan") {
        c.target.kind = TargetConfig::Kind::kVanillaGan;
      } else {
        throw InvalidInputError("target.kind must be \"oracle\" or \"vanilla_gan\"");
      }
      Read(t, "beta", c.target.beta);
      if (t.contains("gan")) c.target.gan = GanFromJson(t["gan"], c.target.gan);
    }
    if (j.contains("attacks")) {
      c.attacks.clear();
      for (const json& a : j["attacks"]) {
        if (a.is_string()) {
          c.attacks.push_back({a.get<std::string>(), json::object()});
          continue;
        }
        CheckKeys(a, {"name", "params"}, "attacks[]");
        c.attacks.push_back({a.at("name").get<std::string>(), a.value("params", json::object())});
      }
    }
    if (j.contains("detector")) c.detector = TrainFromJson(j["detector"], c.detector);
    Read(j, "synthetic_size", c.synthetic_size);
    Read(j, "fpr_grid", c.fpr_grid);
    Read(j, "n_runs", c.n_runs);
    Read(j, "master_seed", c.master_seed);
    Read(j, "output_dir", c.output_dir);
    Read(j, "threads", c.threads);
    if (j.contains("diagnostics")) {
      const json& d = j["diagnostics"];
      CheckKeys(d,
                {"enabled", "memorization_total", "memorization_batch", "mmd_sample",
                 "mmd_permutations", "pca_scatter_rows"},
                "diagnostics");
      Read(d, "enabled", c.diagnostics.enabled);
      Read(d, "memorization_total", c.diagnostics.memorization_total);
      Read(d, "memorization_batch", c.diagnostics.memorization_batch);
      Read(d, "mmd_sample", c.diagnostics.mmd_sample);
      Read(d, "mmd_permutations", c.diagnostics.mmd_permutations);
      Read(d, "pca_scatter_rows", c.diagnostics.pca_scatter_rows);
    }
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("config: ") + e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw InvalidInputError("config file not found: " + path);
  }
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw InvalidInputError("config " + path + ": " + e.what());
  }
  ExperimentConfig c = ConfigFromJson(j);
  if (const char* dir = std::getenv("MIA_OUTPUT_DIR"); dir && *dir) c.output_dir = dir;
  return c;
}

json SpecToJson(const SnpDistributionSpec& spec) {
  std::vector<std::vector<double>> freq(spec.subpopulations());
  for (size_t k = 0; k < freq.size(); ++k) {
    for (size_t j = 0; j < spec.dimension; ++j) {
      freq[k].push_back(spec.frequencies(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)));
    }
  }
  std::vector<double> w(spec.mixing_weights.data(),
                        spec.mixing_weights.data() + spec.mixing_weights.size());
  return {{"format", "mia-spec"}, {"version", 1}, {"dimension", spec.dimension},
          {"frequencies", freq},  {"mixing_weights", w}, {"seed", spec.seed}};
}

SnpDistributionSpec SpecFromJson(const json& j) {
  try {
    if (j.value("format", "") != "mia-spec") throw InvalidInputError("not a mia-spec document");
    const auto freq = j.at("frequencies").get<std::vector<std::vector<double>>>();
    const auto w = j.at("mixing_weights").get<std::vector<double>>();
    const size_t d = j.at("dimension").get<size_t>();
    if (freq.empty() || freq.size() != w.size()) throw InvalidInputError("mia-spec: shape mismatch");
    Eigen::MatrixXd f(static_cast<Eigen::Index>(freq.size()), static_cast<Eigen::Index>(d));
    for (size_t k = 0; k < freq.size(); ++k) {
      if (freq[k].size() != d) throw InvalidInputError("mia-spec: ragged frequencies");
      for (size_t c = 0; c < d; ++c) {
        f(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = freq[k][c];
      }
    }
    SnpDistributionSpec spec = SnpDistributionSpec::FromParameters(
        std::move(f), Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
        j.at("seed").get<uint64_t>());
    return spec;
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("mia-spec: ") + e.what());
  }
}

uint64_t RunSeed(uint64_t master_seed, size_t run) { return DeriveSeed(master_seed, "run", run); }

std::string RunId(size_t run) { return "run_" + std::to_string(run); }

SnpDistributionSpec PopulationSpec(const ExperimentConfig& config) {
  return SnpDistributionSpec::Random(config.dimension, config.subpopulations,
                                     DeriveSeed(config.master_seed, "spec"),
                                     config.frequency_beta_a, config.frequency_beta_b);
}

DatasetSplit GenerateRunData(const ExperimentConfig& config, const SnpDistributionSpec& spec,
                             uint64_t run_seed) {
  const SplitPlan& p = config.split;
  const size_t population = p.train_size + p.reference_size + p.test_nonmember_size;
  const BitMatrix data = SampleDistribution(spec, population, DeriveSeed(run_seed, "population"));
  return SplitDataset(data, p, DeriveSeed(run_seed, "split"));
}

GeneratorHandle TrainTarget(const ExperimentConfig& config, const SnpDistributionSpec& spec,
                            const BitMatrix& train, uint64_t run_seed) {
  if (config.target.kind == TargetConfig::Kind::kOracle) {
    return OracleMixtureGenerator(config.target.beta, train, spec);
  }
  GanConfig gan = config.target.gan;
  gan.seed = DeriveSeed(run_seed, "gan", gan.seed);
  return TrainVanillaGan(train, gan);
}

std::vector<AttackScores> RunAttacks(const ExperimentConfig& config,
                                     const GeneratorHandle& target, const BitMatrix& reference,
                                     const Candidates& candidates, uint64_t run_seed,
                                     const std::string& run_id, json* failures) {
  const Sampler& sampler = AsSampler(target);
  AttackContext ctx;
  ctx.synthetic = sampler.Sample(config.effective_synthetic_size(), DeriveSeed(run_seed, "synthetic"));
  ctx.reference = reference;
  ctx.seed = DeriveSeed(run_seed, "attack_context");

  std::vector<AttackScores> out;
  for (const AttackSpec& spec : config.attacks) {
    const json& p = spec.params;
    const uint64_t seed = DeriveSeed(run_seed, spec.name);
    try {
      std::unique_ptr<MembershipScorer> scorer;
      if (spec.name == "one_way") {
        scorer = std::make_unique<OneWayAttack>(ctx, ParseMetric(p.value("metric", "hamming")));
      } else if (spec.name == "two_way") {
        scorer = std::make_unique<TwoWayAttack>(ctx, ParseMetric(p.value("metric", "hamming")));
      } else if (spec.name == "weighted") {
        scorer = std::make_unique<WeightedAttack>(ctx, WeightsFromJson(p));
      } else if (spec.name == "robust_homer") {
        AttackContext c = ctx;
        c.seed = seed;
        scorer = std::make_unique<RobustHomerAttack>(
            RobustHomerAttack::FromContext(c, p.value("epsilon", 0.0)));
      } else if (spec.name == "domias") {
        DomiasOptions o;
        o.pca_components = p.value("pca_components", size_t{0});
        o.gmm.components = p.value("gmm_components", o.gmm.components);
        o.gmm.seed = seed;
        scorer = std::make_unique<DomiasAttack>(DomiasAttack::Fit(ctx, o));
      } else if (spec.name == "detector") {
        DetectorOptions o;
        o.train = config.detector;
        o.train.seed = DeriveSeed(seed, "train", config.detector.seed);
        o.synthetic_per_draw = p.value("synthetic_per_draw", size_t{0});
        o.test_fraction = p.value("test_fraction", o.test_fraction);
        o.seed = seed;
        scorer = std::make_unique<DetectorAttack>(DetectorAttack::Train(reference, sampler, o));
      } else if (spec.name == "adis") {
        AdisOptions o;
        o.detector.train = config.detector;
        o.detector.train.epochs = p.value("epochs", size_t{20});
        o.detector.train.seed = DeriveSeed(seed, "train", config.detector.seed);
        o.detector.seed = seed;
        o.held_out = AdisHeldOut(p, reference.rows());
        o.pca_components = p.value("pca_components", size_t{0});
        o.gmm.components = p.value("gmm_components", o.gmm.components);
        o.gmm.seed = DeriveSeed(seed, "gmm");
        o.augment = p.value("augment", true);
        scorer = std::make_unique<AdisAttack>(AdisAttack::Train(reference, sampler, o));
      } else if (spec.name == "bayes_oracle") {
        const auto* oracle = std::get_if<OracleMixtureGenerator>(&target);
        if (!oracle) throw InvalidInputError("bayes_oracle requires an oracle target");
        scorer = std::make_unique<BayesOracleAttack>(*oracle);
      } else {
        throw InvalidInputError("unknown attack " + spec.name);
      }
      AttackScores s;
      s.attack = spec.name;
      s.run_id = run_id;
      s.scores = scorer->ScoreAll(candidates.rows, config.threads);
      s.labels = candidates.labels;
      s.Validate();
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      if (!failures) throw;
      failures->push_back({{"run", run_id}, {"stage", "attack:" + spec.name}, {"error", e.what()}});
    }
  }
  return out;
}

json Diagnose(const ExperimentConfig& config, const GeneratorHandle& target,
              const DatasetSplit& data, uint64_t run_seed, PcaDiagnostics* pca) {
  const Sampler& sampler = AsSampler(target);
  const DiagnosticsConfig& dc = config.diagnostics;
  json out = json::object();

  const MemorizationReport mem =
      MemorizationCheck(sampler, data.train, dc.memorization_total, dc.memorization_batch,
                        DeriveSeed(run_seed, "diag_memorization"), &data.reference);
  out["memorization"] = {{"total", mem.total},
                         {"zero_distance_count", mem.zero_distance_count},
                         {"zero_fraction", mem.zero_fraction()},
                         {"histogram", mem.histogram},
                         {"reference_histogram", mem.reference_histogram}};

  const BitMatrix synthetic =
      sampler.Sample(config.effective_synthetic_size(), DeriveSeed(run_seed, "synthetic"));
  try {
    const MreGapResult g = MreGap(synthetic, data.train, data.reference);
    out["mre_gap"] = {{"mre_train", g.mre_train}, {"mre_reference", g.mre_reference}, {"gap", g.gap}};
  } catch (const NumericalError& e) {
    out["mre_gap"] = {{"error", e.what()}};
  }

  const size_t m = std::min({dc.mmd_sample, synthetic.rows(), data.reference.rows()});
  if (m >= 2) {
    std::vector<size_t> idx(m);
    for (size_t i = 0; i < m; ++i) idx[i] = i;
    const Eigen::MatrixXd x = synthetic.SelectRows(idx).ToReal();
    const Eigen::MatrixXd y = data.reference.SelectRows(idx).ToReal();
    const double bw = MedianHeuristicBandwidth(x, y);
    const Kernel k = Kernel::Rbf(bw);
    out["mmd"] = {{"kernel", "rbf"},
                  {"bandwidth", bw},
                  {"sample_size", m},
                  {"mmd2_unbiased", Mmd2Unbiased(x, y, k)},
                  {"permutations", dc.mmd_permutations},
                  {"p_value", PermutationPValue(x, y, k, dc.mmd_permutations,
                                                DeriveSeed(run_seed, "diag_mmd"), config.threads)}};
  }

  BitMatrix pooled = synthetic;
  pooled.AppendRows(data.reference);
  const size_t k = std::min<size_t>({10, pooled.cols(), pooled.rows() - 1});
  if (k >= 2) {
    const PcaModel model = FitPca(pooled.ToReal(), k);
    std::vector<double> ev(model.explained_variance.data(),
                           model.explained_variance.data() + model.explained_variance.size());
    out["pca"] = {{"components", k}, {"explained_variance", ev}};
    if (pca) {
      pca->explained_variance = ev;
      pca->scatter.clear();
      for (const auto& [name, set] :
           {std::pair<const char*, const BitMatrix*>{"synthetic", &synthetic},
            std::pair<const char*, const BitMatrix*>{"reference", &data.reference}}) {
        const size_t rows = std::min(dc.pca_scatter_rows, set->rows());
        std::vector<size_t> idx(rows);
        for (size_t i = 0; i < rows; ++i) idx[i] = i;
        const Eigen::MatrixXd proj = model.Transform(set->SelectRows(idx).ToReal());
        for (Eigen::Index i = 0; i < proj.rows(); ++i) {
          pca->scatter.push_back({name, proj(i, 0), proj(i, 1)});
        }
      }
    }
  }
  if (const auto* gan = std::get_if<GanHandle>(&target)) {
    json log = json::array();
    for (const GanEpochLog& e : gan->log()) log.push_back({e.discriminator_loss, e.generator_loss});
    out["gan_training"] = {{"epochs", gan->epochs_trained()}, {"losses_d_g", log}};
  }
  return out;
}

void SaveData(const DatasetSplit& data, const SnpDistributionSpec& spec, const std::string& dir) {
  EnsureDirectory(dir);
  SaveCsv(data.train, dir + "/train.csv");
  SaveCsv(data.reference, dir + "/reference.csv");
  SaveCsv(data.test_members, dir + "/members.csv");
  SaveCsv(data.test_nonmembers, dir + "/nonmembers.csv");
  AtomicWriteFile(dir + "/spec.json", SpecToJson(spec).dump(2) + "\n");
}

DatasetSplit LoadData(const std::string& dir) {
  DatasetSplit d;
  d.train = LoadCsv(dir + "/train.csv");
  d.reference = LoadCsv(dir + "/reference.csv");
  d.test_members = LoadCsv(dir + "/members.csv");
  d.test_nonmembers = LoadCsv(dir + "/nonmembers.csv");
  return d;
}

void SaveTarget(const GeneratorHandle& target, const std::string& dir) {
  EnsureDirectory(dir);
  if (const auto* oracle = std::get_if<OracleMixtureGenerator>(&target)) {
    SaveCsv(oracle->train(), dir + "/oracle_train.csv");
    const json j = {{"format", "mia-target"}, {"version", 1}, {"kind", "oracle"},
                    {"beta", oracle->beta()}, {"spec", SpecToJson(oracle->base())}};
    AtomicWriteFile(dir + "/target.json", j.dump(2) + "\n");
    return;
  }
  SaveGan(std::get<GanHandle>(target), dir);
  const json j = {{"format", "mia-target"}, {"version", 1}, {"kind", "vanilla_gan"}};
  AtomicWriteFile(dir + "/target.json", j.dump(2) + "\n");
}

GeneratorHandle LoadTarget(const std::string& dir) {
  json j;
  try {
    j = json::parse(ReadFile(dir + "/target.json"));
  } catch (const json::parse_error& e) {
    throw InvalidInputError(dir + "/target.json: " + e.what());
  }
  if (j.value("format", "") != "mia-target") throw InvalidInputError(dir + ": not a mia target");
  const std::string kind = j.value("kind", "");
  if (kind == "oracle") {
    return OracleMixtureGenerator(j.at("beta").get<double>(), LoadCsv(dir + "/oracle_train.csv"),
                                  SpecFromJson(j.at("spec")));
  }
  if (kind == "vanilla_gan") return LoadGan(dir);
  throw InvalidInputError(dir + ": unknown target kind \"" + kind + "\"");
}

ExperimentResult RunExperiment(const ExperimentConfig& config, bool write_artifacts) {
  config.Validate();
  ExperimentResult result;
  const SnpDistributionSpec spec = PopulationSpec(config);
  const std::vector<double> grid = MakeFprGrid(config.fpr_grid);
  json diagnostics = json::object();
  std::optional<PcaDiagnostics> pca;

  for (size_t r = 0; r < config.n_runs; ++r) {
    const uint64_t seed = RunSeed(config.master_seed, r);
    const std::string run_id = RunId(r);
    std::string stage = "gen-data";
    try {
      const DatasetSplit data = GenerateRunData(config, spec, seed);
      stage = "train-target";
      const GeneratorHandle target = TrainTarget(config, spec, data.train, seed);
      stage = "attack";
      const Candidates cand = MakeCandidates(data.test_members, data.test_nonmembers);
      std::vector<AttackScores> scores =
          RunAttacks(config, target, data.reference, cand, seed, run_id, &result.failures);
      for (auto& s : scores) result.scores.push_back(std::move(s));
      if (r == 0 && config.diagnostics.enabled) {
        stage = "diagnose";
        PcaDiagnostics p;
        diagnostics = Diagnose(config, target, data, seed, &p);
        if (!p.explained_variance.empty()) pca = std::move(p);
      }
    } catch (const std::exception& e) {
      result.failures.push_back({{"run", run_id}, {"stage", stage}, {"error", e.what()}});
    }
  }

  result.report = BuildReport(result.scores, config.dataset, grid);
  // Attacks that failed on every run still get a (run-less) row.
  for (const AttackSpec& a : config.attacks) {
    const bool present = std::any_of(result.report.attacks.begin(), result.report.attacks.end(),
                                     [&](const AttackResult& r) { return r.attack == a.name; });
    if (!present) result.report.attacks.push_back(SummarizeAttack(a.name, config.dataset, {}, grid));
  }
  std::stable_sort(result.report.attacks.begin(), result.report.attacks.end(),
                   [&](const AttackResult& x, const AttackResult& y) {
                     auto pos = [&](const std::string& n) {
                       return std::find_if(config.attacks.begin(), config.attacks.end(),
                                           [&](const AttackSpec& s) { return s.name == n; }) -
                              config.attacks.begin();
                     };
                     return pos(x.attack) < pos(y.attack);
                   });
  std::vector<uint64_t> run_seeds;
  for (size_t r = 0; r < config.n_runs; ++r) run_seeds.push_back(RunSeed(config.master_seed, r));
  json config_json = ConfigToJson(config);
  // The recorded config omits output_dir.
  config_json.erase("output_dir");
  result.report.metadata = {{"config", config_json},
                            {"run_seeds", run_seeds},
                            {"population_spec_seed", spec.seed},
                            {"failures", result.failures}};
  result.report.diagnostics = diagnostics;
  result.report.pca = pca;

  if (write_artifacts) {
    EmitReport(result.report, config.output_dir);
    AtomicWriteFile(config.output_dir + "/scores.csv", FormatScoresCsv(result.scores));
    const json manifest = {{"runs", config.n_runs}, {"failures", result.failures}};
    AtomicWriteFile(config.output_dir + "/manifest.json", manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace mia
