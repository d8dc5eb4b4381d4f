#include "fnf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fnf/error.hpp"
#include "fnf/report.hpp"
#include "json.hpp"

namespace fnf {
namespace {

using nlohmann::json;
using Rng = std::mt19937_64;

// Independent, reproducible stream per (seed, purpose).
Rng stream(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return Rng(z ^ (z >> 31));
}

enum Tag : std::uint64_t {
  kSourcesA = 1,
  kSourcesB,
  kMixingA,
  kMixingB,
  kNoiseA,
  kNoiseB,
  kPermutation,
  kPrune,
  kRepack,
  kConstituent = 100,  // + 10 * constituent index
};

// Unit-variance Laplacian as the difference of two Exp(sqrt 2) draws.
Eigen::MatrixXd laplacian(std::size_t rows, std::size_t cols, Rng& rng) {
  std::exponential_distribution<double> expo(std::sqrt(2.0));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = expo(rng) - expo(rng);
  return m;
}

struct Mixing {
  Eigen::MatrixXd weights;  // K x D
  Eigen::VectorXd bias;     // D
  std::vector<bool> critical;
};

// Each neuron either carries one dominant positive source weight or, as a
// background neuron, a small dense Gaussian loading on every source.
Mixing sparse_mixing(std::size_t k, std::size_t d, double critical_fraction, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::uniform_real_distribution<double> strength(0.8, 1.6);
  std::normal_distribution<double> background(0.0, 0.15);
  std::normal_distribution<double> offset(0.0, 0.5);

  Mixing mix;
  mix.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  mix.bias.resize(static_cast<Eigen::Index>(d));
  mix.critical.assign(d, false);
  for (std::size_t i = 0; i < d; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    if (unit(rng) < critical_fraction) {
      mix.critical[i] = true;
      mix.weights(static_cast<Eigen::Index>(pick(rng)), col) = strength(rng);
    } else {
      for (Eigen::Index s = 0; s < mix.weights.rows(); ++s) mix.weights(s, col) = background(rng);
    }
    mix.bias(col) = offset(rng);
  }
  return mix;
}

std::vector<Eigen::MatrixXd> draw_sources(const SynthScenario& s, std::size_t k, Rng& rng) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(s.samples);
  for (std::size_t n = 0; n < s.samples; ++n) out.push_back(laplacian(s.tokens, k, rng));
  return out;
}

Eigen::MatrixXd emit(const Eigen::MatrixXd& sources, const Mixing& mix) {
  return (sources * mix.weights).rowwise() + mix.bias.transpose();
}

void add_noise(Eigen::MatrixXd& x, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> normal(0.0, sigma);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += normal(rng);
}

ActivationDump to_dump(std::string name, std::vector<Eigen::MatrixXd> samples,
                       const SynthScenario& s) {
  std::vector<ActivationMatrix> matrices;
  matrices.reserve(samples.size());
  for (auto& m : samples) matrices.push_back(m.cast<float>());
  return make_dump(std::move(name), std::move(matrices), 0,
                   "synthetic:" + std::string(to_string(s.kind)),
                   "fnf synth seed=" + std::to_string(s.seed));
}

std::vector<Eigen::MatrixXd> model_a_samples(const SynthScenario& s, const Mixing& mix,
                                             const std::vector<Eigen::MatrixXd>& sources) {
  Rng noise = stream(s.seed, kNoiseA);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& src : sources) {
    Eigen::MatrixXd x = emit(src, mix);
    add_noise(x, s.noise_sigma, noise);
    out.push_back(std::move(x));
  }
  return out;
}

ActivationDump transform_columns(const ActivationDump& a, const std::string& name,
                                 const auto& per_sample) {
  std::vector<ActivationMatrix> matrices;
  for (const auto& sample : a.samples) matrices.push_back(per_sample(sample.matrix));
  ActivationDump b = make_dump(name, std::move(matrices), a.manifest.layer_index,
                               a.manifest.source_dataset, a.manifest.creator);
  return b;
}

SynthPair merged_pair(const SynthScenario& s) {
  const std::size_t parts = s.merge_weights.size();
  std::vector<Mixing> mixes;
  std::vector<std::vector<Eigen::MatrixXd>> sources;
  for (std::size_t c = 0; c < parts; ++c) {
    Rng mix_rng = stream(s.seed, kConstituent + 10 * c);
    Rng src_rng = stream(s.seed, kConstituent + 10 * c + 1);
    mixes.push_back(sparse_mixing(s.k_true, s.dim_a, s.critical_fraction, mix_rng));
    sources.push_back(draw_sources(s, s.k_true, src_rng));
  }

  SynthPair pair;
  const std::size_t own = s.merge_constituent;
  {
    Rng noise = stream(s.seed, kConstituent + 10 * own + 2);
    std::vector<Eigen::MatrixXd> xs;
    for (const auto& src : sources[own]) {
      Eigen::MatrixXd x = emit(src, mixes[own]);
      add_noise(x, s.noise_sigma, noise);
      xs.push_back(std::move(x));
    }
    pair.a = to_dump("constituent-" + std::to_string(own), std::move(xs), s);
  }
  {
    Rng noise = stream(s.seed, kNoiseB);
    std::vector<Eigen::MatrixXd> xs;
    for (std::size_t n = 0; n < s.samples; ++n) {
      Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.tokens),
                                                static_cast<Eigen::Index>(s.dim_a));
      for (std::size_t c = 0; c < parts; ++c) x += s.merge_weights[c] * emit(sources[c][n], mixes[c]);
      add_noise(x, s.noise_sigma, noise);
      xs.push_back(std::move(x));
    }
    pair.b = to_dump("merged", std::move(xs), s);
  }
  auto& gt = pair.truth;
  gt.kind = s.kind;
  gt.seed = s.seed;
  gt.sources_a = sources[own];
  gt.mixing_a = mixes[own].weights;
  gt.critical_a = mixes[own].critical;
  gt.merge_weights = s.merge_weights;
  return pair;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Homologous: return "homologous";
    case ScenarioKind::Independent: return "independent";
    case ScenarioKind::Merged: return "merged";
    case ScenarioKind::Permuted: return "permuted";
    case ScenarioKind::Scaled: return "scaled";
    case ScenarioKind::Pruned: return "pruned";
    case ScenarioKind::Repackaged: return "repackaged";
  }
  return "unknown";
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"homologous", "independent", "merged", "permuted",
                                                 "scaled",     "pruned",      "repackaged"};
  return names;
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(ScenarioKind::Repackaged); ++k) {
    const auto kind = static_cast<ScenarioKind>(k);
    if (to_string(kind) == name) return kind;
  }
  fail(ErrorKind::InvalidScenario, "unknown scenario '" + std::string(name) + "'");
}

std::size_t SynthScenario::resolved_dim_b() const {
  if (dim_b != 0) return dim_b;
  if (kind == ScenarioKind::Repackaged) {
    return static_cast<std::size_t>(std::llround(expansion * static_cast<double>(dim_a)));
  }
  return dim_a;
}

void SynthScenario::validate() const {
  auto bad = [](const std::string& why) { fail(ErrorKind::InvalidScenario, why); };
  if (samples < 1) bad("samples must be >= 1");
  if (tokens < 2) bad("tokens per sample must be >= 2");
  if (k_true < 1) bad("k_true must be >= 1");
  const auto db = resolved_dim_b();
  if (dim_a < 4 * k_true || db < 4 * k_true) bad("D_A and D_B must be >= 4 * k_true");
  if (!(noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
  if (!(critical_fraction > 0.0 && critical_fraction <= 1.0)) {
    bad("critical_fraction must lie in (0, 1]");
  }
  if (!(mixing_drift >= 0.0 && mixing_drift <= 1.0)) bad("mixing_drift must lie in [0, 1]");
  switch (kind) {
    case ScenarioKind::Permuted:
    case ScenarioKind::Scaled:
    case ScenarioKind::Pruned:
    case ScenarioKind::Merged:
      if (db != dim_a) bad(std::string(to_string(kind)) + " scenario requires D_B == D_A");
      break;
    case ScenarioKind::Repackaged:
      if (db <= dim_a) bad("repackaged scenario requires D_B > D_A");
      break;
    default:
      break;
  }
  if (kind == ScenarioKind::Merged) {
    if (merge_weights.size() < 2) bad("merge needs at least two constituents");
    for (double w : merge_weights) {
      if (!(w > 0.0)) bad("merge weights must be positive");
    }
    if (merge_constituent >= merge_weights.size()) bad("merge_constituent out of range");
  }
  if (kind == ScenarioKind::Pruned && !(prune_fraction >= 0.0 && prune_fraction < 1.0)) {
    bad("prune_fraction must lie in [0, 1)");
  }
  if (kind == ScenarioKind::Scaled && !(scale > 0.0)) bad("scale must be > 0");
  if (kind == ScenarioKind::Repackaged && !(perturbation >= 0.0 && new_feature_gain >= 0.0)) {
    bad("repackaging perturbation and gain must be >= 0");
  }
}

SynthPair gen_pair(const SynthScenario& s) {
  s.validate();
  if (s.kind == ScenarioKind::Merged) return merged_pair(s);

  Rng mix_rng = stream(s.seed, kMixingA);
  Rng src_rng = stream(s.seed, kSourcesA);
  const Mixing mix_a = sparse_mixing(s.k_true, s.dim_a, s.critical_fraction, mix_rng);
  const auto sources_a = draw_sources(s, s.k_true, src_rng);

  SynthPair pair;
  auto& gt = pair.truth;
  gt.kind = s.kind;
  gt.seed = s.seed;
  gt.sources_a = sources_a;
  gt.mixing_a = mix_a.weights;
  gt.critical_a = mix_a.critical;
  pair.a = to_dump("model-a", model_a_samples(s, mix_a, sources_a), s);

  const std::string name_b = "model-b-" + std::string(to_string(s.kind));
  switch (s.kind) {
    case ScenarioKind::Homologous:
    case ScenarioKind::Independent: {
      Rng mix_b_rng = stream(s.seed, kMixingB);
      Mixing mix_b = sparse_mixing(s.k_true, s.resolved_dim_b(), s.critical_fraction, mix_b_rng);
      if (s.kind == ScenarioKind::Homologous) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = 0; i < s.dim_a; ++i) {
          if (unit(mix_b_rng) >= s.mixing_drift) {
            const auto col = static_cast<Eigen::Index>(i);
            mix_b.weights.col(col) = mix_a.weights.col(col);
            mix_b.bias(col) = mix_a.bias(col);
            mix_b.critical[i] = mix_a.critical[i];
          }
        }
      }
      std::vector<Eigen::MatrixXd> sources_b;
      if (s.kind == ScenarioKind::Homologous) {
        sources_b = sources_a;
      } else {
        Rng src_b_rng = stream(s.seed, kSourcesB);
        sources_b = draw_sources(s, s.k_true, src_b_rng);
      }
      Rng noise = stream(s.seed, kNoiseB);
      std::vector<Eigen::MatrixXd> xs;
      for (const auto& src : sources_b) {
        Eigen::MatrixXd x = emit(src, mix_b);
        add_noise(x, s.noise_sigma, noise);
        xs.push_back(std::move(x));
      }
      pair.b = to_dump(name_b, std::move(xs), s);
      gt.sources_b = std::move(sources_b);
      gt.mixing_b = mix_b.weights;
      break;
    }
    case ScenarioKind::Permuted: {
      Rng perm_rng = stream(s.permutation_seed != 0 ? s.permutation_seed : s.seed, kPermutation);
      gt.permutation.resize(s.dim_a);
      std::iota(gt.permutation.begin(), gt.permutation.end(), 0u);
      std::shuffle(gt.permutation.begin(), gt.permutation.end(), perm_rng);
      pair.b = transform_columns(pair.a, name_b, [&](const ActivationMatrix& x) {
        ActivationMatrix y(x.rows(), x.cols());
        for (std::size_t j = 0; j < gt.permutation.size(); ++j)
          y.col(static_cast<Eigen::Index>(j)) = x.col(gt.permutation[j]);
        return y;
      });
      break;
    }
    case ScenarioKind::Scaled: {
      const auto c = static_cast<float>(s.scale);
      pair.b = transform_columns(pair.a, name_b,
                                 [&](const ActivationMatrix& x) -> ActivationMatrix { return x * c; });
      break;
    }
    case ScenarioKind::Pruned: {
      std::vector<std::uint32_t> candidates;
      for (std::size_t i = 0; i < s.dim_a; ++i) {
        if (!mix_a.critical[i]) candidates.push_back(static_cast<std::uint32_t>(i));
      }
      Rng prune_rng = stream(s.seed, kPrune);
      std::shuffle(candidates.begin(), candidates.end(), prune_rng);
      const auto count = static_cast<std::size_t>(
          std::llround(s.prune_fraction * static_cast<double>(candidates.size())));
      gt.pruned.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(gt.pruned.begin(), gt.pruned.end());
      pair.b = transform_columns(pair.a, name_b, [&](const ActivationMatrix& x) {
        ActivationMatrix y = x;
        for (auto i : gt.pruned) y.col(i).setZero();
        return y;
      });
      break;
    }
    case ScenarioKind::Repackaged: {
      const std::size_t db = s.resolved_dim_b();
      Rng rng = stream(s.seed, kRepack);
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(s.dim_a - 1));
      std::uniform_real_distribution<double> weight(0.5, 1.0);
      // Expansion map R (D_A x D_B): identity block, then pairwise recombinations.
      Eigen::MatrixXd expand = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.dim_a),
                                                     static_cast<Eigen::Index>(db));
      for (std::size_t j = 0; j < s.dim_a; ++j) {
        expand(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.0;
      }
      for (std::size_t j = s.dim_a; j < db; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        expand(pick(rng), col) += weight(rng);
        expand(pick(rng), col) += weight(rng);
      }
      Mixing extra;
      std::vector<Eigen::MatrixXd> extra_sources;
      if (s.new_features > 0) {
        extra = sparse_mixing(s.new_features, db, s.critical_fraction, rng);
        extra_sources = draw_sources(s, s.new_features, rng);
      }
      std::vector<Eigen::MatrixXd> xs;
      for (std::size_t n = 0; n < s.samples; ++n) {
        Eigen::MatrixXd x = pair.a.samples[n].matrix.cast<double>() * expand;
        if (s.new_features > 0) x += s.new_feature_gain * (extra_sources[n] * extra.weights);
        add_noise(x, s.perturbation, rng);
        xs.push_back(std::move(x));
      }
      pair.b = to_dump(name_b, std::move(xs), s);
      gt.sources_b = std::move(extra_sources);
      gt.mixing_b = extra.weights;
      break;
    }
    case ScenarioKind::Merged:
      break;
  }
  return pair;
}

void write_pair(const SynthPair& pair, const SynthScenario& s, const std::filesystem::path& dir) {
  write_dump(pair.a, dir / "a");
  write_dump(pair.b, dir / "b");

  const auto& gt = pair.truth;
  json sources_a = json::array();
  for (const auto& m : gt.sources_a) sources_a.push_back(matrix_json(m));
  json sources_b = json::array();
  for (const auto& m : gt.sources_b) sources_b.push_back(matrix_json(m));
  std::vector<std::uint32_t> critical;
  for (std::size_t i = 0; i < gt.critical_a.size(); ++i) {
    if (gt.critical_a[i]) critical.push_back(static_cast<std::uint32_t>(i));
  }
  json j = {
      {"schema", "fnf-ground-truth/1"},
      {"scenario", to_string(s.kind)},
      {"seed", s.seed},
      {"samples", s.samples},
      {"tokens", s.tokens},
      {"k_true", s.k_true},
      {"dim_a", s.dim_a},
      {"dim_b", s.resolved_dim_b()},
      {"noise_sigma", s.noise_sigma},
      {"mixing_drift", s.mixing_drift},
      {"critical_neurons_a", critical},
      {"permutation", gt.permutation},
      {"pruned_neurons", gt.pruned},
      {"merge_weights", gt.merge_weights},
      {"merge_constituent", s.merge_constituent},
      {"scale", s.scale},
      {"expansion", s.expansion},
      {"mixing_a", matrix_json(gt.mixing_a)},
      {"mixing_b", matrix_json(gt.mixing_b)},
      {"sources_a", sources_a},
      {"sources_b", sources_b},
  };
  write_text(dir / "ground_truth.json", j.dump() + "\n");
}

}  // namespace fnf
