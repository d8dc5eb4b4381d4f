#include <fstream>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "fnf/networks.hpp"
#include "fnf/similarity.hpp"
#include "fnf/synth.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace fnf;
namespace fs = std::filesystem;
using fnf::test::kind_of;

namespace {

SynthScenario small(ScenarioKind kind, std::uint64_t seed = 0) {
  SynthScenario s;
  s.kind = kind;
  s.seed = seed;
  s.samples = 3;
  s.tokens = 80;
  s.k_true = 4;
  s.dim_a = 64;
  return s;
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
  return std::vector<double>(m.col(j).begin(), m.col(j).end());
}

}  // namespace

TEST(Synth, ScenarioNames) {
  for (const auto& name : scenario_names()) EXPECT_EQ(to_string(parse_scenario_kind(name)), name);
  EXPECT_EQ(scenario_names().size(), 7u);
  EXPECT_EQ(kind_of([] { parse_scenario_kind("bogus"); }), ErrorKind::InvalidScenario);
}

TEST(Synth, Validation) {
  auto s = small(ScenarioKind::Homologous);
  s.dim_a = 15;  // < 4 * k_true
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::InvalidScenario);
  s = small(ScenarioKind::Repackaged);
  s.dim_b = 64;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::InvalidScenario);
  s = small(ScenarioKind::Homologous);
  s.noise_sigma = -1.0;
  EXPECT_EQ(kind_of([&] { gen_pair(s); }), ErrorKind::InvalidScenario);
  s = small(ScenarioKind::Merged);
  s.merge_constituent = 3;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::InvalidScenario);
  EXPECT_EQ(small(ScenarioKind::Repackaged).resolved_dim_b(), 96u);
}

TEST(Synth, DeterministicUnderSeed) {
  for (const auto& name : scenario_names()) {
    const auto kind = parse_scenario_kind(name);
    const auto p = gen_pair(small(kind, 3));
    const auto q = gen_pair(small(kind, 3));
    const auto r = gen_pair(small(kind, 4));
    EXPECT_EQ(dump_fingerprint(p.a), dump_fingerprint(q.a)) << name;
    EXPECT_EQ(dump_fingerprint(p.b), dump_fingerprint(q.b)) << name;
    EXPECT_NE(dump_fingerprint(p.a), dump_fingerprint(r.a)) << name;
    EXPECT_EQ(p.a.sample_count(), 3u);
    EXPECT_EQ(p.b.samples[2].tokens(), 80u);
  }
}

TEST(Synth, PermutedColumnsFollowPermutation) {
  const auto p = gen_pair(small(ScenarioKind::Permuted));
  ASSERT_EQ(p.truth.permutation.size(), 64u);
  for (std::size_t n = 0; n < p.a.sample_count(); ++n)
    for (std::size_t j = 0; j < 64; ++j)
      EXPECT_EQ(p.b.samples[n].matrix.col(static_cast<Eigen::Index>(j)),
                p.a.samples[n].matrix.col(p.truth.permutation[j]));
}

TEST(Synth, ScaledIsExactMultiple) {
  auto s = small(ScenarioKind::Scaled);
  s.scale = 0.1;
  const auto p = gen_pair(s);
  for (std::size_t n = 0; n < p.a.sample_count(); ++n)
    EXPECT_EQ(p.b.samples[n].matrix, ActivationMatrix(p.a.samples[n].matrix * 0.1f));
}

TEST(Synth, PrunedZeroesNonCriticalNeurons) {
  const auto p = gen_pair(small(ScenarioKind::Pruned));
  std::size_t non_critical = 0;
  for (bool c : p.truth.critical_a) non_critical += !c;
  EXPECT_NEAR(static_cast<double>(p.truth.pruned.size()), 0.5 * non_critical, 1.0);
  for (auto j : p.truth.pruned) {
    EXPECT_FALSE(p.truth.critical_a[j]);
    for (const auto& s : p.b.samples) EXPECT_TRUE(s.matrix.col(j).isZero(0.0));
  }
}

TEST(Synth, RepackagedWidens) {
  const auto p = gen_pair(small(ScenarioKind::Repackaged));
  EXPECT_EQ(p.a.dim(), 64u);
  EXPECT_EQ(p.b.dim(), 96u);
}

TEST(Synth, NoiselessHomologousSourcesAreRecoverable) {
  SynthScenario s;
  s.kind = ScenarioKind::Homologous;
  s.noise_sigma = 0.0;
  s.samples = 4;
  const auto pair = gen_pair(s);
  FitConfig cfg;
  cfg.k = s.k_true;
  for (const auto* dump : {&pair.a, &pair.b}) {
    const auto nets = fit_networks(*dump, cfg);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(s.k_true); ++k) {
      double best = 0.0;
      for (std::size_t j = 0; j < nets.k(); ++j) {
        double mean_abs = 0.0;
        for (std::size_t n = 0; n < dump->sample_count(); ++n) {
          const auto tc = time_course(dump->samples[n], nets.masks[j]);
          mean_abs += std::abs(spearman(column(pair.truth.sources_a[n], k), tc.values));
        }
        best = std::max(best, mean_abs / static_cast<double>(dump->sample_count()));
      }
      EXPECT_GE(best, 0.95) << dump->manifest.model_name << " source " << k;
    }
  }
}

TEST(Synth, WritePairLayout) {
  const auto s = small(ScenarioKind::Pruned, 2);
  const auto dir = test::scratch_dir("synth");
  write_pair(gen_pair(s), s, dir);
  EXPECT_NO_THROW(read_dump(dir / "a"));
  EXPECT_NO_THROW(read_dump(dir / "b"));
  std::ifstream in(dir / "ground_truth.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("schema"), "fnf-ground-truth/1");
  EXPECT_EQ(j.at("scenario"), "pruned");
  EXPECT_EQ(j.at("seed"), 2);
  EXPECT_FALSE(j.at("pruned_neurons").empty());
}
