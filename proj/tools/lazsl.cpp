// Command-line front end: crop plans, scoring, evaluation, sweeps, synthetic
// data and the Sinkhorn-vs-exact OT check.
//
// Exit codes: 0 success, 2 format/usage error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lazsl/lazsl.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFormat = 2;
constexpr int kExitNumerical = 3;

struct PipelineFlags {
  double theta = 0.8;
  double lambda = 0.1;
  int iters = 100;
  double tol = 1e-6;
  bool no_vs = false;
  bool no_hybrid = false;
  bool no_ot = false;
  lazsl::SinkhornDomain domain = lazsl::SinkhornDomain::Auto;

  void attach(CLI::App* cmd) {
    cmd->add_option("--theta", theta, "Hybrid coefficient in [0, 1]")->capture_default_str();
    cmd->add_option("--lambda", lambda, "Entropic regularizer")->capture_default_str();
    cmd->add_option("--iters", iters, "Sinkhorn iteration budget")->capture_default_str();
    cmd->add_option("--tol", tol, "Marginal L1 stop threshold")->capture_default_str();
    cmd->add_flag("--no-vs", no_vs, "Disable vision selection");
    cmd->add_flag("--no-hybrid", no_hybrid, "Disable the region-global hybrid cost");
    cmd->add_flag("--no-ot", no_ot, "Score with the independent coupling instead of OT");
    const std::map<std::string, lazsl::SinkhornDomain> domains{{"auto", lazsl::SinkhornDomain::Auto},
                                                                {"kernel", lazsl::SinkhornDomain::Kernel},
                                                                {"log", lazsl::SinkhornDomain::Log}};
    cmd->add_option("--domain", domain, "Sinkhorn arithmetic: auto, kernel or log")
        ->transform(CLI::CheckedTransformer(domains, CLI::ignore_case))
        ->default_str("auto");
  }

  [[nodiscard]] lazsl::AlignmentConfig config() const {
    lazsl::AlignmentConfig c;
    c.theta = theta;
    c.solver.lambda = lambda;
    c.solver.max_iters = iters;
    c.solver.tol = tol;
    c.solver.domain = domain;
    c.selection_enabled = !no_vs;
    c.hybrid_enabled = !no_hybrid;
    c.ot_enabled = !no_ot;
    c.validate();
    return c;
  }
};

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
      file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file_) lazsl::raise(lazsl::ErrorCode::InvalidArgument, "cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct LoadedData {
  std::vector<lazsl::VisionSet> items;
  std::vector<lazsl::SemanticSet> classes;
  lazsl::EmbeddingBundle vision_bundle;
};

LoadedData load_data(const std::string& vision_dir, const std::string& semantic_dir) {
  LoadedData d;
  d.vision_bundle = lazsl::load_bundle(vision_dir);
  const auto semantic = lazsl::load_bundle(semantic_dir);
  d.items = lazsl::to_vision_sets(d.vision_bundle);
  d.classes = lazsl::to_semantic_sets(semantic);
  if (d.vision_bundle.dim != semantic.dim)
    lazsl::raise(lazsl::ErrorCode::DimensionMismatch, "vision bundle dim " + std::to_string(d.vision_bundle.dim) +
                                                          " vs semantic bundle dim " + std::to_string(semantic.dim));
  return d;
}

std::vector<double> parse_thetas(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      lazsl::raise(lazsl::ErrorCode::InvalidArgument, "bad theta value '" + tok + "'");
    }
  }
  if (out.empty()) lazsl::raise(lazsl::ErrorCode::InvalidArgument, "no theta values given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally aligned zero-shot classification via entropic optimal transport"};
  app.require_subcommand(1);

  std::string out_path;
  std::uint64_t seed = 0;

  // cropplan
  auto* crop = app.add_subcommand("cropplan", "Generate a random multi-scale square crop plan (JSON)");
  std::uint32_t width = 0, height = 0;
  lazsl::CropConfig crop_cfg;
  crop->add_option("--width", width, "Image width in pixels")->required();
  crop->add_option("--height", height, "Image height in pixels")->required();
  crop->add_option("--alpha", crop_cfg.alpha, "Lower crop scale")->capture_default_str();
  crop->add_option("--beta", crop_cfg.beta, "Upper crop scale")->capture_default_str();
  crop->add_option("--n-min", crop_cfg.n_min, "Minimum number of crops")->capture_default_str();
  crop->add_option("--n-max", crop_cfg.n_max, "Maximum number of crops")->capture_default_str();
  crop->add_option("--seed", seed, "RNG seed")->capture_default_str();
  crop->add_option("--out", out_path, "Output file (default stdout)");

  // score
  auto* score = app.add_subcommand("score", "Score every item of a vision bundle (JSON lines)");
  std::string vision_dir, semantic_dir;
  std::size_t top_k = 5;
  PipelineFlags score_flags;
  score->add_option("--vision", vision_dir, "Vision bundle directory")->required();
  score->add_option("--semantic", semantic_dir, "Semantic bundle directory")->required();
  score->add_option("--top-k", top_k, "Classes reported per item")->capture_default_str();
  score->add_option("--out", out_path, "Output file (default stdout)");
  score_flags.attach(score);

  // eval
  auto* eval = app.add_subcommand("eval", "Accuracy of labelled vision bundle(s) (JSON report)");
  bool ablation = false;
  PipelineFlags eval_flags;
  eval->add_option("--vision", vision_dir, "Vision bundle directory (entries need labels)")->required();
  eval->add_option("--semantic", semantic_dir, "Semantic bundle directory")->required();
  eval->add_flag("--ablation", ablation, "Run the five ablation rows instead of one config");
  eval->add_option("--out", out_path, "Report file (default stdout)");
  eval_flags.attach(eval);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Accuracy as a function of theta (CSV)");
  std::string thetas = "0,0.2,0.4,0.6,0.8,1.0";
  PipelineFlags sweep_flags;
  sweep->add_option("--vision", vision_dir, "Vision bundle directory (entries need labels)")->required();
  sweep->add_option("--semantic", semantic_dir, "Semantic bundle directory")->required();
  sweep->add_option("--thetas", thetas, "Comma-separated theta values")->capture_default_str();
  sweep->add_option("--out", out_path, "CSV file (default stdout)");
  sweep_flags.attach(sweep);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic planted-attribute benchmark");
  lazsl::SynthConfig synth_cfg;
  synth->add_option("--classes", synth_cfg.n_classes)->capture_default_str();
  synth->add_option("--attributes", synth_cfg.m_attributes)->capture_default_str();
  synth->add_option("--regions", synth_cfg.n_regions)->capture_default_str();
  synth->add_option("--signal", synth_cfg.signal_regions_per_item, "Regions carrying class evidence")
      ->capture_default_str();
  synth->add_option("--dim", synth_cfg.dim)->capture_default_str();
  synth->add_option("--sigma", synth_cfg.noise_sigma, "Perturbation norm")->capture_default_str();
  synth->add_option("--coherence", synth_cfg.class_coherence, "Shared class direction weight")
      ->capture_default_str();
  synth->add_option("--distractors", synth_cfg.distractor_fraction, "Fraction of clutter regions")
      ->capture_default_str();
  synth->add_option("--items", synth_cfg.n_items)->capture_default_str();
  synth->add_option("--seed", seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", out_path, "Output directory (gets vision/ and semantic/)")->required();

  // ot-check
  auto* check = app.add_subcommand("ot-check", "Compare Sinkhorn against the exact OT oracle");
  lazsl::OtCheckConfig check_cfg;
  check->add_option("--instances", check_cfg.instances)->capture_default_str();
  check->add_option("--max-cells", check_cfg.max_cells, "Upper bound on N*M")->capture_default_str();
  check->add_option("--lambda", check_cfg.solver.lambda)->capture_default_str();
  check->add_option("--iters", check_cfg.solver.max_iters)->capture_default_str();
  check->add_option("--tol", check_cfg.solver.tol)->capture_default_str();
  check->add_option("--seed", seed, "RNG seed")->capture_default_str();
  check->add_option("--out", out_path, "Summary JSON file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFormat;
  }

  try {
    if (*crop) {
      crop_cfg.seed = seed;
      const auto plan = lazsl::generate_crop_plan(width, height, crop_cfg);
      Output out(out_path);
      out.stream() << lazsl::crop_plan_to_json(plan).dump(2) << '\n';
    } else if (*score) {
      const auto cfg = score_flags.config();
      const auto data = load_data(vision_dir, semantic_dir);
      Output out(out_path);
      std::size_t non_converged = 0;
      for (const auto& item : data.items) {
        const auto p = lazsl::predict(item, data.classes, cfg);
        non_converged += p.all_converged ? 0 : 1;
        out.stream() << lazsl::prediction_record(p, data.classes, top_k).dump() << '\n';
      }
      if (non_converged > 0)
        std::cerr << "warning: " << non_converged << " item(s) had non-converged transport plans\n";
    } else if (*eval) {
      const auto base = eval_flags.config();
      const auto data = load_data(vision_dir, semantic_dir);
      const auto labels = lazsl::bundle_labels(data.vision_bundle);
      const std::vector<lazsl::AlignmentConfig> configs =
          ablation ? lazsl::AlignmentConfig::ablation_rows(base.theta, base.solver)
                   : std::vector<lazsl::AlignmentConfig>{base};
      const auto report = lazsl::run_eval(data.items, data.classes, labels, configs);
      for (const auto& row : report.rows)
        std::cerr << std::left << std::setw(24) << row.config.label() << " accuracy " << std::fixed
                  << std::setprecision(4) << row.accuracy << "  (" << row.correct << "/" << row.total << ")\n";
      Output out(out_path);
      out.stream() << lazsl::to_json(report).dump(2) << '\n';
    } else if (*sweep) {
      const auto base = sweep_flags.config();
      const auto values = parse_thetas(thetas);
      const auto data = load_data(vision_dir, semantic_dir);
      const auto labels = lazsl::bundle_labels(data.vision_bundle);
      const auto points = lazsl::theta_sweep(data.items, data.classes, labels, base, values);
      Output out(out_path);
      lazsl::write_sweep_csv(out.stream(), points);
    } else if (*synth) {
      synth_cfg.seed = seed;
      const auto bench = lazsl::synth_benchmark(synth_cfg);
      lazsl::save_bundle(bench.vision, fs::path(out_path) / "vision");
      lazsl::save_bundle(bench.semantic, fs::path(out_path) / "semantic");
    } else if (*check) {
      check_cfg.seed = seed;
      const auto s = lazsl::ot_check(check_cfg);
      Output out(out_path);
      out.stream() << nlohmann::json{{"instances", s.instances},
                                     {"failures", s.failures},
                                     {"non_converged", s.non_converged},
                                     {"max_gap", s.max_gap},
                                     {"min_gap", s.min_gap},
                                     {"passed", s.passed()}}
                          .dump(2)
                   << '\n';
      if (!s.passed()) return kExitNumerical;
    }
  } catch (const lazsl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == lazsl::ErrorCode::NumericalBlowup ? kExitNumerical : kExitFormat;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  }
  return kExitOk;
}
