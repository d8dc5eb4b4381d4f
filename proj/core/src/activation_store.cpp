#include "fnf/activation_store.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>

#include "binary_io.hpp"
#include "fnf/error.hpp"
#include "json.hpp"

namespace fnf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kManifestKeys = {"model_name", "layer_index",    "dim",    "dtype",
                                             "samples",    "source_dataset", "creator"};

std::vector<char> encode_f32(const ActivationMatrix& m) {
  return detail::encode_f32({m.data(), static_cast<std::size_t>(m.size())});
}

json manifest_to_json(const DumpManifest& m) {
  json samples = json::array();
  for (const auto& s : m.samples) {
    samples.push_back({{"file", s.file}, {"tokens", s.tokens}});
  }
  return json{{"model_name", m.model_name}, {"layer_index", m.layer_index},
              {"dim", m.dim},               {"dtype", m.dtype},
              {"samples", samples},         {"source_dataset", m.source_dataset},
              {"creator", m.creator}};
}

template <typename T>
T required(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::BadManifest, std::string("manifest field '") + key + "': " + e.what());
  }
}

DumpManifest manifest_from_json(const json& j) {
  if (!j.is_object()) {
    fail(ErrorKind::BadManifest, "manifest root must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!kManifestKeys.contains(key)) {
      fail(ErrorKind::BadManifest, "unexpected manifest key '" + key + "'");
    }
  }
  DumpManifest m;
  m.model_name = required<std::string>(j, "model_name");
  m.layer_index = required<int>(j, "layer_index");
  const auto dim = required<std::int64_t>(j, "dim");
  if (dim < 1) {
    fail(ErrorKind::BadManifest, "manifest dim must be >= 1, got " + std::to_string(dim));
  }
  m.dim = static_cast<std::size_t>(dim);
  m.dtype = required<std::string>(j, "dtype");
  m.source_dataset = required<std::string>(j, "source_dataset");
  m.creator = required<std::string>(j, "creator");
  const auto& samples = j.contains("samples") ? j.at("samples") : json();
  if (!samples.is_array()) {
    fail(ErrorKind::BadManifest, "manifest 'samples' must be an array");
  }
  for (const auto& s : samples) {
    if (!s.is_object() || s.size() != 2) {
      fail(ErrorKind::BadManifest, "each sample entry must be {\"file\", \"tokens\"}");
    }
    const auto tokens = required<std::int64_t>(s, "tokens");
    if (tokens < 0) {
      fail(ErrorKind::BadManifest, "sample token count must be non-negative");
    }
    m.samples.push_back({required<std::string>(s, "file"), static_cast<std::size_t>(tokens)});
  }
  return m;
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::MissingFile, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::size_t ActivationDump::total_tokens() const {
  std::size_t total = 0;
  for (const auto& s : samples) total += s.tokens();
  return total;
}

void validate_manifest(const DumpManifest& m) {
  if (m.dim < 1) {
    fail(ErrorKind::BadManifest, "manifest dim must be >= 1");
  }
  if (m.dtype != "f32") {
    fail(ErrorKind::BadManifest, "unsupported dtype '" + m.dtype + "' (only f32)");
  }
  if (m.samples.empty()) {
    fail(ErrorKind::BadManifest, "manifest lists no samples");
  }
  for (std::size_t n = 0; n < m.samples.size(); ++n) {
    const auto& s = m.samples[n];
    if (s.tokens < 2) {
      fail(ErrorKind::BadManifest, "sample " + std::to_string(n) + " has " +
                                       std::to_string(s.tokens) + " tokens; at least 2 required");
    }
    const fs::path p(s.file);
    if (s.file.empty() || p.is_absolute()) {
      fail(ErrorKind::BadManifest, "sample " + std::to_string(n) + " file must be a relative path");
    }
    for (const auto& part : p) {
      if (part == "..") {
        fail(ErrorKind::BadManifest, "sample file '" + s.file + "' escapes the dump directory");
      }
    }
  }
}

void validate_samples(const DumpManifest& m, std::span<const SampleActivations> samples) {
  if (samples.size() != m.samples.size()) {
    fail(ErrorKind::ShapeMismatch, "manifest lists " + std::to_string(m.samples.size()) +
                                       " samples but " + std::to_string(samples.size()) +
                                       " were given");
  }
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto& s = samples[n];
    if (s.dim() != m.dim || s.tokens() != m.samples[n].tokens) {
      fail(ErrorKind::ShapeMismatch,
           "sample " + std::to_string(n) + " is " + std::to_string(s.tokens()) + "x" +
               std::to_string(s.dim()) + ", manifest expects " +
               std::to_string(m.samples[n].tokens) + "x" + std::to_string(m.dim));
    }
    if (!s.matrix.allFinite()) {
      fail(ErrorKind::NonFinite, "sample " + std::to_string(n) + " contains NaN or Inf");
    }
  }
}

void write_dump(const DumpManifest& manifest, std::span<const SampleActivations> samples,
                const fs::path& dir) {
  validate_manifest(manifest);
  validate_samples(manifest, samples);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  }
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const fs::path path = dir / manifest.samples[n].file;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const auto bytes = encode_f32(samples[n].matrix);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      fail(ErrorKind::Io, "failed writing " + path.string());
    }
  }
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) {
    fail(ErrorKind::Io, "failed writing " + (dir / kManifestFile).string());
  }
}

void write_dump(const ActivationDump& dump, const fs::path& dir) {
  write_dump(dump.manifest, dump.samples, dir);
}

ActivationDump read_dump(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestFile;
  if (!fs::exists(manifest_path)) {
    fail(ErrorKind::MissingFile, "missing " + manifest_path.string());
  }
  json j;
  try {
    std::ifstream in(manifest_path);
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::BadManifest, "cannot parse " + manifest_path.string() + ": " + e.what());
  }

  ActivationDump dump;
  dump.manifest = manifest_from_json(j);
  validate_manifest(dump.manifest);

  const auto& m = dump.manifest;
  dump.samples.reserve(m.samples.size());
  for (std::size_t n = 0; n < m.samples.size(); ++n) {
    const fs::path path = dir / m.samples[n].file;
    if (!fs::exists(path)) {
      fail(ErrorKind::MissingFile, "missing sample file " + path.string());
    }
    const auto bytes = read_bytes(path);
    const std::size_t expected = m.samples[n].tokens * m.dim * 4;
    if (bytes.size() != expected) {
      fail(ErrorKind::SizeMismatch, path.string() + " has " + std::to_string(bytes.size()) +
                                        " bytes, expected " + std::to_string(expected) + " (" +
                                        std::to_string(m.samples[n].tokens) + " tokens x " +
                                        std::to_string(m.dim) + " dims x 4)");
    }
    SampleActivations s;
    s.sample_index = n;
    s.matrix.resize(static_cast<Eigen::Index>(m.samples[n].tokens),
                    static_cast<Eigen::Index>(m.dim));
    detail::decode_f32(bytes, {s.matrix.data(), static_cast<std::size_t>(s.matrix.size())});
    dump.samples.push_back(std::move(s));
  }
  validate_samples(m, dump.samples);
  return dump;
}

ActivationDump make_dump(std::string model_name, std::vector<ActivationMatrix> matrices,
                         int layer_index, std::string source_dataset, std::string creator) {
  ActivationDump dump;
  auto& m = dump.manifest;
  m.model_name = std::move(model_name);
  m.layer_index = layer_index;
  m.source_dataset = std::move(source_dataset);
  m.creator = std::move(creator);
  m.dim = matrices.empty() ? 0 : static_cast<std::size_t>(matrices.front().cols());
  for (std::size_t n = 0; n < matrices.size(); ++n) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03zu.bin", n);
    m.samples.push_back({name, static_cast<std::size_t>(matrices[n].rows())});
    dump.samples.push_back({std::move(matrices[n]), n});
  }
  validate_manifest(m);
  validate_samples(m, dump.samples);
  return dump;
}

GroupMatrix concat_samples(std::span<const SampleActivations> samples) {
  if (samples.empty()) {
    fail(ErrorKind::ShapeMismatch, "cannot concatenate zero samples");
  }
  const auto dim = samples.front().dim();
  std::size_t total = 0;
  for (const auto& s : samples) {
    if (s.dim() != dim) {
      fail(ErrorKind::DimensionMismatch, "sample " + std::to_string(s.sample_index) + " has dim " +
                                             std::to_string(s.dim()) + ", expected " +
                                             std::to_string(dim));
    }
    total += s.tokens();
  }

  GroupMatrix group;
  group.matrix.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  std::size_t row = 0;
  for (const auto& s : samples) {
    group.matrix.middleRows(static_cast<Eigen::Index>(row), s.matrix.rows()) =
        s.matrix.cast<double>();
    group.offsets.push_back({row, row + s.tokens()});
    row += s.tokens();
  }
  return group;
}

Eigen::MatrixXd sample_rows(const GroupMatrix& group, std::size_t sample) {
  const auto& r = group.offsets.at(sample);
  return group.matrix.middleRows(static_cast<Eigen::Index>(r.begin),
                                 static_cast<Eigen::Index>(r.size()));
}

std::string dump_fingerprint(const ActivationDump& dump) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  auto feed_u64 = [&](std::uint64_t v) {
    unsigned char le[8];
    for (int b = 0; b < 8; ++b) le[b] = static_cast<unsigned char>(v >> (8 * b));
    EVP_DigestUpdate(ctx.get(), le, sizeof(le));
  };
  feed_u64(dump.dim());
  feed_u64(dump.samples.size());
  for (const auto& s : dump.samples) {
    feed_u64(s.tokens());
    const auto bytes = encode_f32(s.matrix);
    EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

}  // namespace fnf
