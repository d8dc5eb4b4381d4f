#include "fnf/networks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "fnf/error.hpp"
#include "fnf/whitening.hpp"
#include "json.hpp"

namespace fnf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kConstantMapTolerance = 1e-12;

// Zero mean, unit (population) variance over neurons.
void standardize(Eigen::Ref<Eigen::VectorXd> col, std::size_t component) {
  const double mean = col.mean();
  col.array() -= mean;
  const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(col.size()));
  if (!(sd > kConstantMapTolerance * std::max(1.0, std::abs(mean)))) {
    fail(ErrorKind::ThresholdDegenerate,
         "spatial map " + std::to_string(component) + " is constant over neurons");
  }
  col /= sd;
}

}  // namespace

void FitConfig::validate() const {
  if (k < 1) fail(ErrorKind::InvalidArgument, "K must be >= 1");
  if (!(z_threshold > 0.0)) fail(ErrorKind::InvalidArgument, "z threshold must be > 0");
  if (!(fallback_frac > 0.0 && fallback_frac <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "fallback fraction must lie in (0, 1]");
  }
  ica.validate();
}

NeuronMask threshold_map(std::span<const double> map, double z, double fallback_frac) {
  if (map.empty()) fail(ErrorKind::ThresholdDegenerate, "empty spatial map");
  if (!(z > 0.0)) fail(ErrorKind::InvalidArgument, "z threshold must be > 0");
  if (!(fallback_frac > 0.0 && fallback_frac <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "fallback fraction must lie in (0, 1]");
  }
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  if (*hi - *lo <= kConstantMapTolerance * std::max(1.0, std::abs(*hi))) {
    fail(ErrorKind::ThresholdDegenerate, "spatial map is constant");
  }

  NeuronMask mask;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (std::abs(map[i]) >= z) mask.push_back(static_cast<std::uint32_t>(i));
  }
  if (!mask.empty()) return mask;

  const auto d = map.size();
  // Guard against 0.01 * 200 landing a hair above 2 in binary floating point.
  const auto wanted = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fallback_frac * static_cast<double>(d) - 1e-9)));
  std::vector<std::uint32_t> order(d);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::abs(map[a]) > std::abs(map[b]);
  });
  mask.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(wanted, d)));
  std::sort(mask.begin(), mask.end());
  return mask;
}

TimeCourse time_course(const SampleActivations& sample, const NeuronMask& mask,
                       std::size_t network_index) {
  if (mask.empty()) fail(ErrorKind::EmptyMask, "network mask is empty");
  for (auto i : mask) {
    if (i >= sample.dim()) {
      fail(ErrorKind::IndexOutOfRange, "mask index " + std::to_string(i) +
                                           " out of range for D=" + std::to_string(sample.dim()));
    }
  }
  TimeCourse tc;
  tc.sample_index = sample.sample_index;
  tc.network_index = network_index;
  tc.values.resize(sample.tokens());

  std::vector<double> buf(mask.size());
  const double inv = 1.0 / static_cast<double>(mask.size());
  for (std::size_t t = 0; t < sample.tokens(); ++t) {
    const auto row = sample.matrix.row(static_cast<Eigen::Index>(t));
    for (std::size_t m = 0; m < mask.size(); ++m) buf[m] = row(mask[m]);
    std::sort(buf.begin(), buf.end());
    double sum = 0.0;
    for (double v : buf) sum += v;
    tc.values[t] = sum * inv;
  }
  return tc;
}

FunctionalNetworks fit_networks(const ActivationDump& dump, const FitConfig& cfg) {
  cfg.validate();
  const GroupMatrix group = concat_samples(dump.samples);
  const PcaModel pca = fit_pca(group, cfg.k);
  const WhitenedData white = whiten(group, pca);
  const Unmixing unmix = run_fastica(white.spatial, cfg.ica);

  const auto k = static_cast<Eigen::Index>(cfg.k);
  Eigen::MatrixXd maps = white.spatial.transpose() * unmix.rotation.transpose();  // D x K

  // Component k reconstructs (U Sigma M^T)_k * source_k; its squared Frobenius
  // norm is sum_j sigma_j^2 M_kj^2, reported as a fraction of total variance.
  const double total_var =
      (group.matrix.rowwise() - pca.mean.transpose()).squaredNorm();
  const Eigen::VectorXd sigma2 = pca.singular_values.array().square();
  Eigen::VectorXd explained = unmix.rotation.array().square().matrix() * sigma2;
  if (total_var > 0.0) explained /= total_var;

  std::vector<NeuronMask> masks(cfg.k);
  for (Eigen::Index c = 0; c < k; ++c) {
    standardize(maps.col(c), static_cast<std::size_t>(c));
    masks[c] = threshold_map({maps.col(c).data(), static_cast<std::size_t>(maps.rows())},
                             cfg.z_threshold, cfg.fallback_frac);
    double masked_mean = 0.0;
    for (auto i : masks[c]) masked_mean += maps(i, c);
    if (masked_mean < 0.0) maps.col(c) *= -1.0;
  }

  std::vector<std::size_t> order(cfg.k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (explained(a) != explained(b)) return explained(a) > explained(b);
    return masks[a].front() < masks[b].front();
  });

  FunctionalNetworks nets;
  nets.maps.resize(maps.rows(), k);
  nets.masks.reserve(cfg.k);
  nets.explained_variance.reserve(cfg.k);
  for (std::size_t c = 0; c < cfg.k; ++c) {
    nets.maps.col(static_cast<Eigen::Index>(c)) = maps.col(static_cast<Eigen::Index>(order[c]));
    nets.masks.push_back(std::move(masks[order[c]]));
    nets.explained_variance.push_back(explained(static_cast<Eigen::Index>(order[c])));
  }
  nets.config = cfg;
  nets.dump_fingerprint = dump_fingerprint(dump);
  nets.model_name = dump.manifest.model_name;
  nets.ica_converged = unmix.converged;
  nets.ica_iterations = unmix.iterations_used;
  nets.ica_seed_used = unmix.seed_used;
  nets.degenerate_spectrum = pca.degenerate_spectrum;
  return nets;
}

void write_networks(const FunctionalNetworks& nets, const fs::path& json_path) {
  const fs::path maps_name = json_path.stem().string() + ".maps.f32";
  const fs::path dir = json_path.has_parent_path() ? json_path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);

  // D x K, row-major.
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> maps =
      nets.maps.cast<float>();
  const auto bytes = detail::encode_f32({maps.data(), static_cast<std::size_t>(maps.size())});
  {
    std::ofstream out(dir / maps_name, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "failed writing " + (dir / maps_name).string());
  }

  const auto& ica = nets.config.ica;
  json j = {
      {"schema", "fnf-networks/1"},
      {"K", nets.k()},
      {"dim", nets.dim()},
      {"z_threshold", nets.config.z_threshold},
      {"fallback_frac", nets.config.fallback_frac},
      {"seed", ica.seed},
      {"masks", nets.masks},
      {"maps_file", maps_name.string()},
      {"dump_fingerprint", nets.dump_fingerprint},
      {"model_name", nets.model_name},
      {"explained_variance", nets.explained_variance},
      {"degenerate_spectrum", nets.degenerate_spectrum},
      {"ica",
       {{"contrast", "logcosh"},
        {"alpha", ica.alpha},
        {"tol", ica.tol},
        {"max_iter", ica.max_iter},
        {"restarts", ica.restarts},
        {"converged", nets.ica_converged},
        {"iterations", nets.ica_iterations},
        {"seed_used", nets.ica_seed_used}}},
  };
  std::ofstream out(json_path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing " + json_path.string());
}

FunctionalNetworks read_networks(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) fail(ErrorKind::MissingFile, "cannot open " + json_path.string());
  FunctionalNetworks nets;
  try {
    const json j = json::parse(in);
    const auto k = j.at("K").get<std::size_t>();
    const auto d = j.at("dim").get<std::size_t>();
    nets.config.k = k;
    nets.config.z_threshold = j.at("z_threshold").get<double>();
    nets.config.fallback_frac = j.value("fallback_frac", 0.01);
    nets.config.ica.seed = j.at("seed").get<std::uint64_t>();
    nets.masks = j.at("masks").get<std::vector<NeuronMask>>();
    nets.dump_fingerprint = j.at("dump_fingerprint").get<std::string>();
    nets.model_name = j.value("model_name", std::string());
    nets.explained_variance = j.value("explained_variance", std::vector<double>());
    nets.degenerate_spectrum = j.value("degenerate_spectrum", false);
    if (j.contains("ica")) {
      const auto& ica = j.at("ica");
      nets.config.ica.alpha = ica.value("alpha", 1.0);
      nets.config.ica.tol = ica.value("tol", 1e-4);
      nets.config.ica.max_iter = ica.value("max_iter", 200);
      nets.config.ica.restarts = ica.value("restarts", 3);
      nets.ica_converged = ica.value("converged", true);
      nets.ica_iterations = ica.value("iterations", 0);
      nets.ica_seed_used = ica.value("seed_used", nets.config.ica.seed);
    }
    if (nets.masks.size() != k) {
      fail(ErrorKind::BadManifest, "networks artifact lists " + std::to_string(nets.masks.size()) +
                                       " masks but K=" + std::to_string(k));
    }
    for (const auto& mask : nets.masks) {
      if (mask.empty()) fail(ErrorKind::BadManifest, "networks artifact has an empty mask");
      for (auto i : mask) {
        if (i >= d) fail(ErrorKind::BadManifest, "mask index out of range in networks artifact");
      }
    }

    const fs::path dir = json_path.has_parent_path() ? json_path.parent_path() : fs::path(".");
    const fs::path maps_path = dir / j.at("maps_file").get<std::string>();
    std::ifstream mf(maps_path, std::ios::binary);
    if (!mf) fail(ErrorKind::MissingFile, "missing maps sidecar " + maps_path.string());
    const std::vector<char> bytes{std::istreambuf_iterator<char>(mf),
                                  std::istreambuf_iterator<char>()};
    if (bytes.size() != d * k * 4) {
      fail(ErrorKind::SizeMismatch, maps_path.string() + " has " + std::to_string(bytes.size()) +
                                        " bytes, expected " + std::to_string(d * k * 4));
    }
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> maps(
        static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    detail::decode_f32(bytes, {maps.data(), static_cast<std::size_t>(maps.size())});
    nets.maps = maps.cast<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::BadManifest, "malformed networks artifact " + json_path.string() + ": " +
                                     e.what());
  }
  return nets;
}

}  // namespace fnf
