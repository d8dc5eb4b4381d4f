#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "fnf/activation_store.hpp"
#include "fnf/error.hpp"
#include "expect_error.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace fnf;
namespace fs = std::filesystem;
using fnf::test::kind_of;
using fnf::test::scratch_dir;

namespace {

ActivationDump tiny_dump() {
  ActivationMatrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  return make_dump("tiny", {m});
}

void write_manifest(const fs::path& dir, const nlohmann::json& j) {
  std::ofstream(dir / kManifestFile) << j.dump();
}

nlohmann::json manifest_json(std::size_t dim, std::size_t tokens) {
  return {{"model_name", "m"},
          {"layer_index", 0},
          {"dim", dim},
          {"dtype", "f32"},
          {"samples", {{{"file", "sample_000.bin"}, {"tokens", tokens}}}},
          {"source_dataset", "d"},
          {"creator", "c"}};
}

}  // namespace

TEST(ActivationStore, TinyDumpIsTwentyFourBytes) {
  const auto dir = scratch_dir("tiny");
  write_dump(tiny_dump(), dir);
  EXPECT_EQ(fs::file_size(dir / "sample_000.bin"), 24u);

  const auto back = read_dump(dir);
  ASSERT_EQ(back.sample_count(), 1u);
  EXPECT_EQ(back.dim(), 3u);
  EXPECT_EQ(back.samples[0].matrix(1, 0), 4.0f);
  EXPECT_EQ(back.samples[0].matrix(0, 2), 3.0f);
}

TEST(ActivationStore, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  std::vector<ActivationMatrix> mats;
  for (int n = 0; n < 3; ++n) {
    ActivationMatrix m = test::gaussian(7 + n, 11, rng).cast<float>();
    mats.push_back(m);
  }
  mats[0](0, 0) = -0.0f;
  mats[0](0, 1) = std::numeric_limits<float>::denorm_min();
  mats[0](0, 2) = std::numeric_limits<float>::max();
  const auto dump = make_dump("rt", mats);
  const auto dir = scratch_dir("roundtrip");
  write_dump(dump, dir);
  const auto back = read_dump(dir);

  ASSERT_EQ(back.sample_count(), dump.sample_count());
  for (std::size_t n = 0; n < dump.sample_count(); ++n) {
    const auto& a = dump.samples[n].matrix;
    const auto& b = back.samples[n].matrix;
    ASSERT_EQ(a.rows(), b.rows());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(float) * a.size()), 0);
  }
  EXPECT_EQ(dump_fingerprint(dump), dump_fingerprint(back));
  EXPECT_EQ(back.manifest.model_name, "rt");
}

TEST(ActivationStore, FingerprintSeesContentChanges) {
  auto a = tiny_dump();
  auto b = tiny_dump();
  EXPECT_EQ(dump_fingerprint(a), dump_fingerprint(b));
  b.samples[0].matrix(0, 0) = 1.0000001f;
  EXPECT_NE(dump_fingerprint(a), dump_fingerprint(b));
}

TEST(ActivationStore, NonFiniteRejected) {
  ActivationMatrix m(2, 3);
  m << 1, 2, std::numeric_limits<float>::quiet_NaN(), 4, 5, 6;
  EXPECT_EQ(kind_of([&] { make_dump("nan", {m}); }), ErrorKind::NonFinite);

  // Same check applies to data read from disk.
  const auto dir = scratch_dir("nan");
  write_dump(tiny_dump(), dir);
  const float inf = std::numeric_limits<float>::infinity();
  std::fstream f(dir / "sample_000.bin", std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(8);
  f.write(reinterpret_cast<const char*>(&inf), 4);
  f.close();
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::NonFinite);
}

TEST(ActivationStore, TruncatedFileIsSizeMismatch) {
  const auto dir = scratch_dir("truncated");
  write_dump(tiny_dump(), dir);
  fs::resize_file(dir / "sample_000.bin", 20);
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::SizeMismatch);
}

TEST(ActivationStore, MissingFiles) {
  const auto dir = scratch_dir("missing");
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::MissingFile);
  write_dump(tiny_dump(), dir);
  fs::remove(dir / "sample_000.bin");
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::MissingFile);
}

TEST(ActivationStore, ManifestValidation) {
  const auto dir = scratch_dir("manifest");
  write_dump(tiny_dump(), dir);

  write_manifest(dir, manifest_json(0, 2));
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::BadManifest);

  write_manifest(dir, manifest_json(3, 1));  // fewer than 2 tokens
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::BadManifest);

  auto extra = manifest_json(3, 2);
  extra["tokenizer"] = "bpe";
  write_manifest(dir, extra);
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::BadManifest);

  auto f16 = manifest_json(3, 2);
  f16["dtype"] = "f16";
  write_manifest(dir, f16);
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::BadManifest);

  auto escape = manifest_json(3, 2);
  escape["samples"][0]["file"] = "../sample_000.bin";
  write_manifest(dir, escape);
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::BadManifest);

  std::ofstream(dir / kManifestFile) << "{ not json";
  EXPECT_EQ(kind_of([&] { read_dump(dir); }), ErrorKind::BadManifest);

  write_manifest(dir, manifest_json(3, 2));
  EXPECT_NO_THROW(read_dump(dir));
}

TEST(ActivationStore, SampleShapeMustMatchManifest) {
  auto dump = tiny_dump();
  dump.manifest.samples[0].tokens = 3;
  EXPECT_EQ(kind_of([&] { validate_samples(dump.manifest, dump.samples); }),
            ErrorKind::ShapeMismatch);
}

TEST(ActivationStore, ConcatOffsets) {
  std::vector<ActivationMatrix> mats;
  for (int t : {2, 3, 4}) mats.push_back(ActivationMatrix::Constant(t, 5, static_cast<float>(t)));
  const auto dump = make_dump("c", mats);
  const auto group = concat_samples(dump.samples);
  EXPECT_EQ(group.rows(), 9u);
  EXPECT_EQ(group.cols(), 5u);
  ASSERT_EQ(group.offsets.size(), 3u);
  EXPECT_EQ(group.offsets[0], (RowRange{0, 2}));
  EXPECT_EQ(group.offsets[1], (RowRange{2, 5}));
  EXPECT_EQ(group.offsets[2], (RowRange{5, 9}));
  EXPECT_EQ(sample_rows(group, 1), Eigen::MatrixXd::Constant(3, 5, 3.0));

  const auto single = concat_samples(std::span(dump.samples).first(1));
  EXPECT_EQ(single.matrix, dump.samples[0].matrix.cast<double>());
}

TEST(ActivationStore, ConcatRejectsMixedDimensions) {
  std::vector<SampleActivations> samples(2);
  samples[0].matrix = ActivationMatrix::Zero(4, 8);
  samples[1].matrix = ActivationMatrix::Zero(4, 9);
  samples[1].sample_index = 1;
  EXPECT_EQ(kind_of([&] { concat_samples(samples); }), ErrorKind::DimensionMismatch);
}

TEST(ActivationStore, TenSamplesAtWidth4096) {
  std::vector<ActivationMatrix> mats;
  for (int n = 0; n < 10; ++n) mats.push_back(ActivationMatrix::Constant(200, 4096, 0.5f));
  const auto group = concat_samples(make_dump("wide", mats).samples);
  EXPECT_EQ(group.rows(), 2000u);
  EXPECT_EQ(group.cols(), 4096u);
  EXPECT_EQ(group.offsets.back(), (RowRange{1800, 2000}));
}
