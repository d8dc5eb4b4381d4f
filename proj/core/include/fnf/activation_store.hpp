#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fnf {

/// Token-major activation block of one input sample: row = token, column = neuron.
using ActivationMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SampleEntry {
  std::string file;    // relative to the dump directory
  std::size_t tokens;  // T_n
};

/// Contents of `manifest.json`. Sample order is significant.
struct DumpManifest {
  std::string model_name;
  int layer_index = 0;
  std::size_t dim = 0;
  std::string dtype = "f32";
  std::vector<SampleEntry> samples;
  std::string source_dataset;
  std::string creator;
};

struct SampleActivations {
  ActivationMatrix matrix;
  std::size_t sample_index = 0;

  std::size_t tokens() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

struct ActivationDump {
  DumpManifest manifest;
  std::vector<SampleActivations> samples;

  std::size_t dim() const { return manifest.dim; }
  std::size_t sample_count() const { return samples.size(); }
  std::size_t total_tokens() const;
};

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

/// Row-stacked samples (T = sum of T_n rows) in double precision.
struct GroupMatrix {
  Eigen::MatrixXd matrix;
  std::vector<RowRange> offsets;

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(matrix.cols()); }
};

inline constexpr const char* kManifestFile = "manifest.json";

/// Checks the manifest's structural invariants (dim, dtype, token counts, file paths).
/// Throws Error(BadManifest) on violation.
void validate_manifest(const DumpManifest& manifest);

/// Checks that samples agree with the manifest and contain only finite values.
void validate_samples(const DumpManifest& manifest, std::span<const SampleActivations> samples);

/// Writes `manifest.json` plus one headerless little-endian f32 file per sample.
void write_dump(const DumpManifest& manifest, std::span<const SampleActivations> samples,
                const std::filesystem::path& dir);
void write_dump(const ActivationDump& dump, const std::filesystem::path& dir);

/// Reads and fully validates a dump directory.
ActivationDump read_dump(const std::filesystem::path& dir);

/// Builds a dump with conventional file names (`sample_000.bin`, ...).
ActivationDump make_dump(std::string model_name, std::vector<ActivationMatrix> matrices,
                         int layer_index = 0, std::string source_dataset = "synthetic",
                         std::string creator = "fnf");

GroupMatrix concat_samples(std::span<const SampleActivations> samples);

/// Slice of a group matrix belonging to one sample.
Eigen::MatrixXd sample_rows(const GroupMatrix& group, std::size_t sample);

/// Hex SHA-256 over dim, per-sample token counts and raw little-endian activation bytes.
std::string dump_fingerprint(const ActivationDump& dump);

}  // namespace fnf
