#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fnf/activation_store.hpp"

namespace fnf {

enum class ScenarioKind { Homologous, Independent, Merged, Permuted, Scaled, Pruned, Repackaged };

std::string_view to_string(ScenarioKind kind);
/// Throws Error(InvalidScenario) for unknown names.
ScenarioKind parse_scenario_kind(std::string_view name);
const std::vector<std::string>& scenario_names();

/// Generative description of a pair of synthetic "models".
///
/// Model A emits, per sample, X = S G + b + noise where S (T x K_true) are
/// unit-variance Laplacian source series, G (K_true x D) is a sparse
/// non-negative-dominant mixing and b a per-neuron offset. Model B is derived
/// according to `kind`.
struct SynthScenario {
  ScenarioKind kind = ScenarioKind::Homologous;
  std::uint64_t seed = 0;
  std::size_t samples = 10;
  std::size_t tokens = 200;
  std::size_t k_true = 8;
  std::size_t dim_a = 512;
  std::size_t dim_b = 0;  // 0: dim_a, or round(expansion * dim_a) when repackaged
  double noise_sigma = 0.05;
  double critical_fraction = 0.4;  // neurons carrying one dominant source
  // homologous: share of neurons whose loadings are redrawn in B; the rest
  // keep A's mixing (fine-tuned relatives keep most neuron identities).
  double mixing_drift = 0.5;

  // merged: three constituents of equal dimension, combined with these weights;
  // model A is constituent `merge_constituent`.
  std::vector<double> merge_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::size_t merge_constituent = 0;
  // pruned: share of A's non-critical neurons zeroed in B.
  double prune_fraction = 0.5;
  // permuted: 0 derives the permutation stream from `seed`.
  std::uint64_t permutation_seed = 0;
  // scaled
  double scale = 3.7;
  // repackaged: B widens to expansion * D_A columns (copies of A's neurons
  // followed by pairwise recombinations), then acquires `new_features` extra
  // sources of amplitude `new_feature_gain` and a small perturbation.
  double expansion = 1.5;
  double perturbation = 0.01;
  std::size_t new_features = 8;
  double new_feature_gain = 1.5;

  std::size_t resolved_dim_b() const;
  void validate() const;
};

struct GroundTruth {
  ScenarioKind kind = ScenarioKind::Homologous;
  std::uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> sources_a;  // per sample, T x K_true
  std::vector<Eigen::MatrixXd> sources_b;  // per sample; B's own sources (if any)
  Eigen::MatrixXd mixing_a;                // K_true x D_A
  Eigen::MatrixXd mixing_b;                // B's own mixing, when B is generated afresh
  std::vector<bool> critical_a;            // neuron carries a dominant source in A
  std::vector<std::uint32_t> permutation;  // B column j = A column permutation[j]
  std::vector<std::uint32_t> pruned;       // neurons zeroed in B
  std::vector<double> merge_weights;
};

struct SynthPair {
  ActivationDump a;
  ActivationDump b;
  GroundTruth truth;
};

SynthPair gen_pair(const SynthScenario& scenario);

/// Writes `<dir>/a`, `<dir>/b` dumps plus `<dir>/ground_truth.json`.
void write_pair(const SynthPair& pair, const SynthScenario& scenario,
                const std::filesystem::path& dir);

}  // namespace fnf
