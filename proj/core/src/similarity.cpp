#include "fnf/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fnf/error.hpp"

namespace fnf {
namespace {

// Centered average ranks plus their squared norm; constant series have norm 0.
struct RankProfile {
  std::vector<double> centered;
  double sum_sq = 0.0;
  bool constant = false;
};

RankProfile rank_profile(std::span<const double> values) {
  RankProfile p;
  p.constant = std::all_of(values.begin(), values.end(),
                           [&](double v) { return v == values.front(); });
  p.centered = average_ranks(values);
  // Mean rank of 1..n is (n + 1) / 2 regardless of ties.
  const double mean = (static_cast<double>(values.size()) + 1.0) / 2.0;
  for (auto& r : p.centered) {
    r -= mean;
    p.sum_sq += r * r;
  }
  return p;
}

double correlate(const RankProfile& a, const RankProfile& b) {
  if (a.constant || b.constant) return 0.0;
  double num = 0.0;
  for (std::size_t t = 0; t < a.centered.size(); ++t) num += a.centered[t] * b.centered[t];
  return std::clamp(num / std::sqrt(a.sum_sq * b.sum_sq), -1.0, 1.0);
}

void check_series(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorKind::LengthMismatch, "Spearman inputs have lengths " + std::to_string(x.size()) +
                                        " and " + std::to_string(y.size()));
  }
  if (x.size() < 2) fail(ErrorKind::TooShort, "Spearman needs at least 2 points");
}

std::vector<RankProfile> profiles_for_sample(const SampleActivations& sample,
                                             const std::vector<NeuronMask>& masks,
                                             std::size_t length) {
  std::vector<RankProfile> out;
  out.reserve(masks.size());
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const auto tc = time_course(sample, masks[k], k);
    out.push_back(rank_profile(std::span<const double>(tc.values).first(length)));
  }
  return out;
}

Eigen::MatrixXd stacked_rows(const ActivationDump& dump, const std::vector<std::size_t>& lengths) {
  const std::size_t total = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  Eigen::MatrixXd x(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dump.dim()));
  Eigen::Index row = 0;
  for (std::size_t n = 0; n < lengths.size(); ++n) {
    const auto len = static_cast<Eigen::Index>(lengths[n]);
    x.middleRows(row, len) = dump.samples[n].matrix.topRows(len).cast<double>();
    row += len;
  }
  return x;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t m = i; m < j; ++m) ranks[order[m]] = rank;
    i = j;
  }
  return ranks;
}

RankCorrelation spearman_detail(std::span<const double> x, std::span<const double> y) {
  check_series(x, y);
  const auto px = rank_profile(x);
  const auto py = rank_profile(y);
  return {correlate(px, py), px.constant || py.constant};
}

double spearman(std::span<const double> x, std::span<const double> y) {
  return spearman_detail(x, y).rho;
}

std::vector<std::size_t> aligned_lengths(const ActivationDump& a, const ActivationDump& b,
                                         AlignPolicy align) {
  if (a.sample_count() != b.sample_count()) {
    fail(ErrorKind::SampleCountMismatch, "model A has " + std::to_string(a.sample_count()) +
                                             " samples, model B has " +
                                             std::to_string(b.sample_count()));
  }
  std::vector<std::size_t> lengths(a.sample_count());
  for (std::size_t n = 0; n < lengths.size(); ++n) {
    const auto ta = a.samples[n].tokens();
    const auto tb = b.samples[n].tokens();
    if (align == AlignPolicy::Strict) {
      if (ta != tb) {
        fail(ErrorKind::TokenCountMismatch,
             "sample " + std::to_string(n) + " has " + std::to_string(ta) + " tokens in A and " +
                 std::to_string(tb) + " in B (use --align truncate to compare anyway)");
      }
      lengths[n] = ta;
    } else {
      lengths[n] = std::min(ta, tb);
      if (lengths[n] < kMinAlignedTokens) {
        fail(ErrorKind::TokenCountMismatch,
             "sample " + std::to_string(n) + " has only " + std::to_string(lengths[n]) +
                 " aligned tokens; truncation needs at least " +
                 std::to_string(kMinAlignedTokens));
      }
    }
  }
  return lengths;
}

std::vector<MatchedPair> greedy_matching(const Eigen::MatrixXd& scores) {
  std::vector<MatchedPair> all;
  all.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.cols(); ++j)
      all.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), scores(i, j)});
  std::stable_sort(all.begin(), all.end(),
                   [](const MatchedPair& l, const MatchedPair& r) { return l.score > r.score; });
  std::vector<bool> used_a(static_cast<std::size_t>(scores.rows()));
  std::vector<bool> used_b(static_cast<std::size_t>(scores.cols()));
  std::vector<MatchedPair> out;
  for (const auto& p : all) {
    if (used_a[p.a] || used_b[p.b]) continue;
    used_a[p.a] = used_b[p.b] = true;
    out.push_back(p);
  }
  return out;
}

SimilarityReport fnf_matrix(const FunctionalNetworks& nets_a, const ActivationDump& dump_a,
                            const FunctionalNetworks& nets_b, const ActivationDump& dump_b,
                            AlignPolicy align) {
  const auto lengths = aligned_lengths(dump_a, dump_b, align);
  const std::size_t n_samples = lengths.size();
  const std::size_t ka = nets_a.k();
  const std::size_t kb = nets_b.k();

  SimilarityReport report;
  report.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ka),
                                        static_cast<Eigen::Index>(kb));
  // rho^(n)_ij kept per sample for the best-pair summary.
  std::vector<Eigen::MatrixXd> per_sample(n_samples);

  for (std::size_t n = 0; n < n_samples; ++n) {
    const auto pa = profiles_for_sample(dump_a.samples[n], nets_a.masks, lengths[n]);
    const auto pb = profiles_for_sample(dump_b.samples[n], nets_b.masks, lengths[n]);
    for (const auto& p : pa) report.constant_courses += p.constant;
    for (const auto& p : pb) report.constant_courses += p.constant;

    auto& rho = per_sample[n];
    rho.resize(static_cast<Eigen::Index>(ka), static_cast<Eigen::Index>(kb));
    for (std::size_t i = 0; i < ka; ++i)
      for (std::size_t j = 0; j < kb; ++j)
        rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = correlate(pa[i], pb[j]);
  }
  for (std::size_t n = 0; n < n_samples; ++n) report.matrix += per_sample[n];
  report.matrix /= static_cast<double>(n_samples);

  Eigen::Index bi = 0;
  Eigen::Index bj = 0;
  report.fnf_score = report.matrix.maxCoeff(&bi, &bj);
  // maxCoeff scans column-major; restate the tie rule as first in row-major order.
  for (Eigen::Index i = 0; i < report.matrix.rows(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < report.matrix.cols(); ++j) {
      if (report.matrix(i, j) == report.fnf_score) {
        bi = i;
        bj = j;
        found = true;
        break;
      }
    }
    if (found) break;
  }
  report.best_a = static_cast<std::size_t>(bi);
  report.best_b = static_cast<std::size_t>(bj);

  std::size_t strong = 0;
  for (const auto& rho : per_sample) {
    report.per_sample_scores.push_back(rho(bi, bj));
    strong += rho(bi, bj) >= kStrongCorrelation;
  }
  report.strong_sample_fraction = static_cast<double>(strong) / static_cast<double>(n_samples);
  report.greedy_matching = greedy_matching(report.matrix);

  auto& cfg = report.config;
  cfg.k_a = ka;
  cfg.k_b = kb;
  cfg.z_threshold = nets_a.config.z_threshold;
  cfg.seed_a = nets_a.config.ica.seed;
  cfg.seed_b = nets_b.config.ica.seed;
  cfg.ica = nets_a.config.ica;
  cfg.align = align;
  cfg.model_a = dump_a.manifest.model_name;
  cfg.model_b = dump_b.manifest.model_name;
  cfg.fingerprint_a = nets_a.dump_fingerprint;
  cfg.fingerprint_b = nets_b.dump_fingerprint;
  cfg.samples = n_samples;

  if (report.constant_courses > 0) {
    report.warnings.push_back(std::to_string(report.constant_courses) +
                              " constant time course(s); their correlations were set to 0");
  }
  if (!nets_a.ica_converged) report.warnings.push_back("FastICA did not converge for model A");
  if (!nets_b.ica_converged) report.warnings.push_back("FastICA did not converge for model B");
  if (nets_a.degenerate_spectrum) {
    report.warnings.push_back("model A has near-equal singular values; its maps may be unstable");
  }
  if (nets_b.degenerate_spectrum) {
    report.warnings.push_back("model B has near-equal singular values; its maps may be unstable");
  }
  if (align == AlignPolicy::Truncate) {
    for (std::size_t n = 0; n < n_samples; ++n) {
      if (dump_a.samples[n].tokens() != dump_b.samples[n].tokens()) {
        report.warnings.push_back("token counts differ; series truncated to the shorter model");
        break;
      }
    }
  }
  return report;
}

double average_fnf_shared_masks(const FunctionalNetworks& nets_a, const ActivationDump& dump_a,
                                const ActivationDump& dump_b, AlignPolicy align) {
  const auto lengths = aligned_lengths(dump_a, dump_b, align);
  double total = 0.0;
  for (std::size_t n = 0; n < lengths.size(); ++n) {
    const auto pa = profiles_for_sample(dump_a.samples[n], nets_a.masks, lengths[n]);
    const auto pb = profiles_for_sample(dump_b.samples[n], nets_a.masks, lengths[n]);
    double sample_sum = 0.0;
    for (std::size_t k = 0; k < pa.size(); ++k) sample_sum += correlate(pa[k], pb[k]);
    total += sample_sum / static_cast<double>(pa.size());
  }
  return total / static_cast<double>(lengths.size());
}

double linear_cka(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb) {
  if (xa.rows() != xb.rows()) {
    fail(ErrorKind::LengthMismatch, "CKA inputs have " + std::to_string(xa.rows()) + " and " +
                                        std::to_string(xb.rows()) + " rows");
  }
  if (xa.rows() < 2) fail(ErrorKind::TooShort, "CKA needs at least 2 rows");
  const Eigen::MatrixXd a = xa.rowwise() - xa.colwise().mean();
  const Eigen::MatrixXd b = xb.rowwise() - xb.colwise().mean();

  const double t = static_cast<double>(a.rows());
  const double da = static_cast<double>(a.cols());
  const double db = static_cast<double>(b.cols());
  double cross = 0.0;
  double self_a = 0.0;
  double self_b = 0.0;
  // Feature-space and Gram-space forms are equal; pick the cheaper one.
  if (t * (da * db + da * da + db * db) <= t * t * (da + db + 1.0)) {
    cross = (b.transpose() * a).squaredNorm();
    self_a = (a.transpose() * a).norm();
    self_b = (b.transpose() * b).norm();
  } else {
    const Eigen::MatrixXd ka = a * a.transpose();
    const Eigen::MatrixXd kb = b * b.transpose();
    cross = ka.cwiseProduct(kb).sum();
    self_a = ka.norm();
    self_b = kb.norm();
  }
  if (!(self_a > 0.0) || !(self_b > 0.0)) {
    fail(ErrorKind::ZeroVariance, "CKA input has zero variance after centering");
  }
  return cross / (self_a * self_b);
}

double linear_cka(const ActivationDump& a, const ActivationDump& b, AlignPolicy align) {
  const auto lengths = aligned_lengths(a, b, align);
  return linear_cka(stacked_rows(a, lengths), stacked_rows(b, lengths));
}

double iou(const NeuronMask& a, const NeuronMask& b) {
  if (a.empty() && b.empty()) fail(ErrorKind::BothEmpty, "IoU of two empty masks is undefined");
  NeuronMask sa = a;
  NeuronMask sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  NeuronMask inter;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  const std::size_t uni = sa.size() + sb.size() - inter.size();
  return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

IouReport mask_iou(const FunctionalNetworks& a, const FunctionalNetworks& b) {
  if (a.dim() != b.dim()) {
    fail(ErrorKind::DimensionMismatch, "IoU needs equal neuron spaces (D=" +
                                           std::to_string(a.dim()) + " vs " +
                                           std::to_string(b.dim()) + ")");
  }
  IouReport r;
  r.matrix.resize(static_cast<Eigen::Index>(a.k()), static_cast<Eigen::Index>(b.k()));
  for (std::size_t i = 0; i < a.k(); ++i)
    for (std::size_t j = 0; j < b.k(); ++j)
      r.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          iou(a.masks[i], b.masks[j]);
  r.greedy_matching = greedy_matching(r.matrix);
  if (!r.greedy_matching.empty()) {
    // The first greedy pair holds the global maximum (row-major tie order).
    r.max_iou = r.greedy_matching.front().score;
    r.best_a = r.greedy_matching.front().a;
    r.best_b = r.greedy_matching.front().b;
    double sum = 0.0;
    for (const auto& p : r.greedy_matching) sum += p.score;
    r.mean_matched_iou = sum / static_cast<double>(r.greedy_matching.size());
  }
  return r;
}

std::string to_string(AlignPolicy policy) {
  return policy == AlignPolicy::Strict ? "strict" : "truncate";
}

}  // namespace fnf
