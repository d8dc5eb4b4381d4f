#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "fnf/activation_store.hpp"
#include "fnf/error.hpp"
#include "fnf/networks.hpp"
#include "fnf/report.hpp"
#include "fnf/similarity.hpp"
#include "fnf/synth.hpp"
#include "json.hpp"

namespace fnf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kUsageExit = 2;

std::string num(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message,
                int code) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

struct Options {
  // validate
  std::string dir;
  // fit / compare
  std::string dump;
  std::string a;
  std::string b;
  std::string out;
  std::string csv;
  std::size_t k = 64;
  std::vector<std::size_t> k_list;
  double z = 2.0;
  double fallback_frac = 0.01;
  IcaConfig ica;
  std::string align = "strict";
  // synth
  std::string scenario;
  SynthScenario synth;
};

void add_ica_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.ica.seed, "FastICA seed")->capture_default_str();
  cmd->add_option("--tol", o.ica.tol, "FastICA convergence tolerance")->capture_default_str();
  cmd->add_option("--max-iter", o.ica.max_iter, "FastICA iterations per attempt")
      ->capture_default_str();
  cmd->add_option("--restarts", o.ica.restarts, "FastICA attempts before giving up")
      ->capture_default_str();
}

void add_fit_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--k", o.k, "number of functional networks")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  cmd->add_option("--z", o.z, "z-score threshold for masks")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--fallback-frac", o.fallback_frac,
                  "share of neurons kept when no entry passes the threshold")
      ->capture_default_str();
  add_ica_flags(cmd, o);
}

FitConfig fit_config(const Options& o, std::size_t k) {
  FitConfig cfg;
  cfg.k = k;
  cfg.ica = o.ica;
  cfg.z_threshold = o.z;
  cfg.fallback_frac = o.fallback_frac;
  cfg.validate();
  return cfg;
}

AlignPolicy align_policy(const std::string& name) {
  return name == "truncate" ? AlignPolicy::Truncate : AlignPolicy::Strict;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o, std::ostream& out) {
  const auto dump = read_dump(o.dir);
  const auto& m = dump.manifest;
  std::size_t lo = dump.samples.front().tokens();
  std::size_t hi = lo;
  for (const auto& s : dump.samples) {
    lo = std::min(lo, s.tokens());
    hi = std::max(hi, s.tokens());
  }
  out << "valid dump: " << o.dir << "\n"
      << "  model        " << m.model_name << " (layer " << m.layer_index << ")\n"
      << "  dim          " << m.dim << "\n"
      << "  samples      " << dump.sample_count() << ", tokens " << dump.total_tokens()
      << " (per sample " << lo << ".." << hi << ")\n"
      << "  dataset      " << m.source_dataset << "\n"
      << "  creator      " << m.creator << "\n"
      << "  fingerprint  " << dump_fingerprint(dump) << "\n";
  return 0;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const auto cfg = fit_config(o, o.k);
  const auto dump = read_dump(o.dump);
  const auto nets = fit_networks(dump, cfg);
  write_networks(nets, o.out);

  std::vector<std::size_t> sizes;
  for (const auto& mask : nets.masks) sizes.push_back(mask.size());
  std::sort(sizes.begin(), sizes.end());
  out << "fitted " << nets.k() << " networks over D=" << nets.dim() << " from "
      << dump.total_tokens() << " tokens (" << dump.sample_count() << " samples)\n";
  if (nets.ica_converged) {
    out << "  FastICA converged in " << nets.ica_iterations << " iterations (seed "
        << nets.ica_seed_used << ")\n";
  } else {
    out << "  FastICA did not converge after " << cfg.ica.restarts
        << " attempt(s); kept the best iterate (seed " << nets.ica_seed_used << ")\n";
  }
  if (nets.degenerate_spectrum) out << "  warning: near-equal singular values\n";
  out << "  mask sizes   min " << sizes.front() << ", median " << sizes[sizes.size() / 2]
      << ", max " << sizes.back() << "\n"
      << "  wrote " << o.out << "\n";
  return 0;
}

void print_report(const SimilarityReport& r, std::ostream& out) {
  const auto strong = static_cast<std::size_t>(
      std::count_if(r.per_sample_scores.begin(), r.per_sample_scores.end(),
                    [](double v) { return v >= kStrongCorrelation; }));
  out << "K=" << r.config.k_a << "  FNF score " << num(r.fnf_score) << " ("
      << score_band(r.fnf_score) << ") at A#" << r.best_a << " / B#" << r.best_b << "\n"
      << "  strong-sample fraction " << num(r.strong_sample_fraction, 2) << " (" << strong << "/"
      << r.per_sample_scores.size() << " samples with rho >= 0.5)\n";
  out << "  linear CKA " << (r.cka ? num(*r.cka) : std::string("n/a")) << "\n";
  if (r.shared_mask_fnf) out << "  shared-mask FNF " << num(*r.shared_mask_fnf) << "\n";
  for (const auto& w : r.warnings) out << "  warning: " << w << "\n";
}

fs::path per_k_path(const fs::path& base, std::size_t k) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + "_k" + std::to_string(k) + base.extension().string());
  return p;
}

int cmd_compare(const Options& o, std::ostream& out) {
  std::vector<std::size_t> ks = o.k_list.empty() ? std::vector<std::size_t>{o.k} : o.k_list;
  std::vector<FitConfig> cfgs;
  for (auto k : ks) cfgs.push_back(fit_config(o, k));
  const auto policy = align_policy(o.align);

  const auto dump_a = read_dump(o.a);
  const auto dump_b = read_dump(o.b);
  aligned_lengths(dump_a, dump_b, policy);  // fail early on sample mismatches

  std::optional<double> cka;
  std::string cka_warning;
  try {
    cka = linear_cka(dump_a, dump_b, policy);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroVariance) throw;
    cka_warning = std::string("linear CKA undefined: ") + e.what();
  }

  std::vector<SimilarityReport> reports;
  for (const auto& cfg : cfgs) {
    const auto nets_a = fit_networks(dump_a, cfg);
    const auto nets_b = fit_networks(dump_b, cfg);
    auto r = fnf_matrix(nets_a, dump_a, nets_b, dump_b, policy);
    r.cka = cka;
    if (!cka_warning.empty()) r.warnings.push_back(cka_warning);

    std::uint32_t top = 0;
    for (const auto& mask : nets_a.masks) top = std::max(top, mask.back());
    if (top < dump_b.dim()) {
      r.shared_mask_fnf = average_fnf_shared_masks(nets_a, dump_a, dump_b, policy);
    }
    print_report(r, out);
    reports.push_back(std::move(r));
  }

  if (!o.out.empty()) {
    write_text(o.out, reports.size() == 1 ? report_json(reports.front()) : sweep_json(reports));
    out << "wrote " << o.out << "\n";
  }
  if (!o.csv.empty()) {
    for (const auto& r : reports) {
      const fs::path path = reports.size() == 1 ? fs::path(o.csv) : per_k_path(o.csv, r.config.k_a);
      write_text(path, matrix_csv(r.matrix));
      out << "wrote " << path.string() << "\n";
    }
  }
  return 0;
}

int cmd_baseline_cka(const Options& o, std::ostream& out) {
  const auto policy = align_policy(o.align);
  const auto dump_a = read_dump(o.a);
  const auto dump_b = read_dump(o.b);
  const double cka = linear_cka(dump_a, dump_b, policy);
  out << "linear CKA " << num(cka) << " (" << dump_a.manifest.model_name << " vs "
      << dump_b.manifest.model_name << ")\n";
  if (!o.out.empty()) {
    write_text(o.out, cka_json(cka, dump_a.manifest.model_name, dump_b.manifest.model_name));
    out << "wrote " << o.out << "\n";
  }
  return 0;
}

int cmd_baseline_iou(const Options& o, std::ostream& out) {
  const auto nets_a = read_networks(o.a);
  const auto nets_b = read_networks(o.b);
  const auto r = mask_iou(nets_a, nets_b);
  out << "max IoU " << num(r.max_iou) << " at A#" << r.best_a << " / B#" << r.best_b << "\n"
      << "  mean IoU over " << r.greedy_matching.size() << " greedy pairs "
      << num(r.mean_matched_iou) << "\n";
  if (!o.out.empty()) {
    write_text(o.out, iou_json(r, nets_a.model_name, nets_b.model_name));
    out << "wrote " << o.out << "\n";
  }
  return 0;
}

int cmd_synth(Options& o, std::ostream& out) {
  auto& s = o.synth;
  s.kind = parse_scenario_kind(o.scenario);
  s.validate();
  const auto pair = gen_pair(s);
  write_pair(pair, s, o.out);
  out << "scenario " << to_string(s.kind) << " (seed " << s.seed << "): " << s.samples
      << " samples x " << s.tokens << " tokens, D_A=" << pair.a.dim()
      << ", D_B=" << pair.b.dim() << ", K_true=" << s.k_true << "\n"
      << "  wrote " << (fs::path(o.out) / "a").string() << ", "
      << (fs::path(o.out) / "b").string() << ", "
      << (fs::path(o.out) / "ground_truth.json").string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Functional network fingerprints for model lineage checks", "fnf"};
  app.set_version_flag("--version", "fnf 0.1.0");
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "check an activation dump and print its manifest");
  validate->add_option("dir", o.dir, "dump directory")->required();

  auto* fit = app.add_subcommand("fit", "extract functional networks from one dump");
  fit->add_option("--dump", o.dump, "dump directory")->required();
  fit->add_option("--out", o.out, "networks artifact (JSON)")->required();
  add_fit_flags(fit, o);

  auto* compare = app.add_subcommand("compare", "score two dumps against each other");
  compare->add_option("--a", o.a, "dump directory of model A")->required();
  compare->add_option("--b", o.b, "dump directory of model B")->required();
  compare->add_option("--out", o.out, "similarity report (JSON)");
  compare->add_option("--csv", o.csv, "K_A x K_B matrix as CSV");
  compare->add_option("--k-list", o.k_list, "comma-separated K sweep, e.g. 10,20,40,64,128")
      ->delimiter(',')
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  compare->add_option("--align", o.align, "sample alignment policy")
      ->capture_default_str()
      ->check(CLI::IsMember({"strict", "truncate"}));
  add_fit_flags(compare, o);

  auto* baseline = app.add_subcommand("baseline", "CKA or IoU baselines");
  baseline->require_subcommand(1);
  auto* cka = baseline->add_subcommand("cka", "linear CKA between two dumps");
  cka->add_option("--a", o.a, "dump directory of model A")->required();
  cka->add_option("--b", o.b, "dump directory of model B")->required();
  cka->add_option("--align", o.align, "sample alignment policy")
      ->capture_default_str()
      ->check(CLI::IsMember({"strict", "truncate"}));
  cka->add_option("--out", o.out, "result (JSON)");
  auto* iou = baseline->add_subcommand("iou", "mask IoU between two networks artifacts");
  iou->add_option("--a", o.a, "networks artifact of model A")->required();
  iou->add_option("--b", o.b, "networks artifact of model B")->required();
  iou->add_option("--out", o.out, "result (JSON)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic model pair");
  auto& s = o.synth;
  synth->add_option("--scenario", o.scenario, "scenario name")
      ->required()
      ->check(CLI::IsMember(scenario_names()));
  synth->add_option("--seed", s.seed, "generator seed")->capture_default_str();
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--samples", s.samples)->capture_default_str();
  synth->add_option("--tokens", s.tokens)->capture_default_str();
  synth->add_option("--k-true", s.k_true, "latent sources")->capture_default_str();
  synth->add_option("--dim-a", s.dim_a)->capture_default_str();
  synth->add_option("--dim-b", s.dim_b, "0 derives it from the scenario")->capture_default_str();
  synth->add_option("--noise", s.noise_sigma)->capture_default_str();
  synth->add_option("--critical-frac", s.critical_fraction)->capture_default_str();
  synth->add_option("--drift", s.mixing_drift, "homologous: share of redrawn neurons")
      ->capture_default_str();
  synth->add_option("--merge-weights", s.merge_weights)->delimiter(',');
  synth->add_option("--constituent", s.merge_constituent, "merged: which constituent is A")
      ->capture_default_str();
  synth->add_option("--prune-frac", s.prune_fraction)->capture_default_str();
  synth->add_option("--perm-seed", s.permutation_seed)->capture_default_str();
  synth->add_option("--scale", s.scale)->capture_default_str();
  synth->add_option("--expansion", s.expansion)->capture_default_str();
  synth->add_option("--perturbation", s.perturbation)->capture_default_str();
  synth->add_option("--new-features", s.new_features)->capture_default_str();
  synth->add_option("--feature-gain", s.new_feature_gain)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    // Help requested on a subcommand surfaces as CallForHelp thrown from it.
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    emit_error(err, "UsageError", e.what(), kUsageExit);
    return kUsageExit;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out);
    if (fit->parsed()) return cmd_fit(o, out);
    if (compare->parsed()) return cmd_compare(o, out);
    if (cka->parsed()) return cmd_baseline_cka(o, out);
    if (iou->parsed()) return cmd_baseline_iou(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    emit_error(err, std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    emit_error(err, "Internal", e.what(), 4);
    return 4;
  }
  return kUsageExit;
}

}  // namespace fnf::cli
