#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnf/activation_store.hpp"
#include "fnf/fastica.hpp"

namespace fnf {

/// Sorted neuron indices of one functional network.
using NeuronMask = std::vector<std::uint32_t>;

struct FitConfig {
  std::size_t k = 64;
  IcaConfig ica;
  double z_threshold = 2.0;
  double fallback_frac = 0.01;

  void validate() const;
};

struct FunctionalNetworks {
  Eigen::MatrixXd maps;  // D x K, each column standardized over neurons
  std::vector<NeuronMask> masks;
  FitConfig config;
  std::string dump_fingerprint;
  std::string model_name;

  // Fit diagnostics carried into reports.
  bool ica_converged = true;
  int ica_iterations = 0;
  std::uint64_t ica_seed_used = 0;
  bool degenerate_spectrum = false;
  std::vector<double> explained_variance;  // per component, in canonical order

  std::size_t k() const { return masks.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(maps.rows()); }
};

struct TimeCourse {
  std::vector<double> values;
  std::size_t sample_index = 0;
  std::size_t network_index = 0;
};

/// {i : |map_i| >= z}; when that set is empty, the top max(1, ceil(frac * D))
/// entries by magnitude (ties to the lower index). Throws ThresholdDegenerate
/// for a constant map.
NeuronMask threshold_map(std::span<const double> map, double z, double fallback_frac = 0.01);

/// Mean of the raw activations over the masked neurons, per token. Each
/// token's masked values are summed in ascending value order, so the result
/// depends only on the multiset of values and not on neuron numbering.
TimeCourse time_course(const SampleActivations& sample, const NeuronMask& mask,
                       std::size_t network_index = 0);

/// Group PCA, symmetric FastICA on the spatial view, standardized spatial
/// maps and thresholded masks. Components are ordered by descending explained
/// variance (ties: smallest leading masked index); each map's sign makes the
/// mean of its masked values positive. Deterministic in (dump bytes, cfg).
FunctionalNetworks fit_networks(const ActivationDump& dump, const FitConfig& cfg);

/// JSON artifact with a raw f32 D x K sidecar for the maps. `maps_file` is
/// stored relative to the JSON file.
void write_networks(const FunctionalNetworks& nets, const std::filesystem::path& json_path);
FunctionalNetworks read_networks(const std::filesystem::path& json_path);

}  // namespace fnf
