#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

namespace {

using namespace lazsl;
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("lazsl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ErrorCode load_error(const fs::path& dir) {
  try {
    (void)load_bundle(dir);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "bundle loaded";
  return ErrorCode::InvalidArgument;
}

EmbeddingBundle tiny_vision() {
  EmbeddingBundle b;
  b.role = BundleRole::Vision;
  b.dim = 4;
  BundleEntry e;
  e.id = "img-0";
  e.tensor = "img-0.f32";
  e.rows = 2;
  e.data = {1.0f, -2.5f, 3.25f, 1e-30f, 0.1f, 0.2f, 0.3f, -0.4f};
  e.label = "cat";
  b.entries.push_back(e);
  return b;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(read_file(dir / kManifestName)); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LAZSL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Bundle, RoundTripIsBitExact) {
  TempDir tmp;
  EmbeddingBundle b;
  b.role = BundleRole::Vision;
  b.dim = 4;
  BundleEntry e;
  e.id = "one";
  e.tensor = "one.f32";
  e.rows = 1;
  e.data = {0.1f, -0.0f, 3.4028235e38f, 1.4e-45f};
  b.entries.push_back(e);
  // A vision entry needs a global row plus a region, so check the raw
  // bytes through a semantic bundle of one 1x4 tensor instead.
  b.role = BundleRole::Semantic;
  b.entries[0].name = "n";
  b.entries[0].attributes = {"t"};
  save_bundle(b, tmp.path());

  const std::string raw = read_file(tmp.path() / "one.f32");
  ASSERT_EQ(raw.size(), 16u);
  const unsigned char lsb_of_first = static_cast<unsigned char>(raw[0]);
  std::uint32_t bits = 0;
  std::memcpy(&bits, &e.data[0], 4);
  EXPECT_EQ(lsb_of_first, bits & 0xFFu);

  const EmbeddingBundle back = load_bundle(tmp.path());
  ASSERT_EQ(back.entries.size(), 1u);
  ASSERT_EQ(back.entries[0].data.size(), 4u);
  EXPECT_EQ(std::memcmp(back.entries[0].data.data(), e.data.data(), 16), 0);
  EXPECT_EQ(back.entries[0].attributes, b.entries[0].attributes);
  EXPECT_EQ(back.entries[0].name, "n");
}

TEST(Bundle, VisionRoundTripKeepsLabelsAndOrder) {
  TempDir tmp;
  const auto b = tiny_vision();
  save_bundle(b, tmp.path());
  const auto back = load_bundle(tmp.path());
  EXPECT_EQ(back.role, BundleRole::Vision);
  EXPECT_EQ(back.dim, 4u);
  EXPECT_EQ(back.entries[0].data, b.entries[0].data);
  EXPECT_EQ(bundle_labels(back), std::vector<std::string>{"cat"});
  const auto sets = to_vision_sets(back);
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0].num_regions(), 1u);
  EXPECT_NEAR(sets[0].global().norm(), 1.0, 1e-12);
}

TEST(Bundle, ShortTensorIsShapeMismatch) {
  TempDir tmp;
  EmbeddingBundle b;
  b.role = BundleRole::Vision;
  b.dim = 8;
  BundleEntry e;
  e.id = "x";
  e.tensor = "x.f32";
  e.rows = 3;
  e.data.assign(24, 0.5f);
  b.entries.push_back(e);
  save_bundle(b, tmp.path());
  write_file(tmp.path() / "x.f32", std::string(64, '\0'));
  try {
    (void)load_bundle(tmp.path());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ShapeMismatch);
    EXPECT_NE(std::string(err.what()).find("expected 96"), std::string::npos) << err.what();
  }
}

TEST(Bundle, ManifestValidation) {
  TempDir tmp;
  save_bundle(tiny_vision(), tmp.path());
  const auto good = manifest(tmp.path());

  auto with = [&](auto&& edit) {
    auto m = good;
    edit(m);
    write_file(tmp.path() / kManifestName, m.dump());
    return load_error(tmp.path());
  };
  EXPECT_EQ(with([](auto& m) { m["dtype"] = "f64"; }), ErrorCode::UnsupportedDtype);
  EXPECT_EQ(with([](auto& m) { m["endianness"] = "big"; }), ErrorCode::UnsupportedDtype);
  EXPECT_EQ(with([](auto& m) { m.erase("dim"); }), ErrorCode::CorruptManifest);
  EXPECT_EQ(with([](auto& m) { m["role"] = "audio"; }), ErrorCode::CorruptManifest);
  EXPECT_EQ(with([](auto& m) { m["entries"][0]["tensor"] = "../escape.f32"; }), ErrorCode::CorruptManifest);
  EXPECT_EQ(with([](auto& m) { m["entries"][0]["tensor"] = "/etc/passwd"; }), ErrorCode::CorruptManifest);
  EXPECT_EQ(with([](auto& m) { m["entries"][0]["tensor"] = "gone.f32"; }), ErrorCode::MissingTensorFile);
  EXPECT_EQ(with([](auto& m) { m["entries"][0]["rows"] = 1; }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(with([](auto& m) { m["entries"][0]["rows"] = "two"; }), ErrorCode::CorruptManifest);

  write_file(tmp.path() / kManifestName, "{ not json");
  EXPECT_EQ(load_error(tmp.path()), ErrorCode::CorruptManifest);
  fs::remove(tmp.path() / kManifestName);
  EXPECT_EQ(load_error(tmp.path()), ErrorCode::CorruptManifest);
}

TEST(Bundle, SemanticTextCountMustMatchRows) {
  TempDir tmp;
  EmbeddingBundle b;
  b.role = BundleRole::Semantic;
  b.dim = 2;
  BundleEntry e;
  e.id = "c";
  e.name = "cat";
  e.tensor = "c.f32";
  e.rows = 2;
  e.attributes = {"fur", "whiskers"};
  e.data = {1, 0, 0, 1};
  b.entries.push_back(e);
  save_bundle(b, tmp.path());
  auto m = manifest(tmp.path());
  m["entries"][0]["attributes"] = {"fur"};
  write_file(tmp.path() / kManifestName, m.dump());
  EXPECT_EQ(load_error(tmp.path()), ErrorCode::ShapeMismatch);
}

TEST(Bundle, MissingLabelIsIdMismatch) {
  auto b = tiny_vision();
  b.entries[0].label.reset();
  try {
    (void)bundle_labels(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IdMismatch);
  }
}

TEST(Synth, ZeroNoiseRegionsCopyAttributes) {
  SynthConfig cfg;
  cfg.n_classes = 4;
  cfg.m_attributes = 3;
  cfg.n_regions = 5;
  cfg.signal_regions_per_item = 5;
  cfg.noise_sigma = 0.0;
  cfg.dim = 8;
  cfg.n_items = 12;
  const auto bench = synth_benchmark(cfg);
  const auto items = to_vision_sets(bench.vision);
  const auto classes = to_semantic_sets(bench.semantic);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& cls = *std::find_if(classes.begin(), classes.end(),
                                    [&](const SemanticSet& c) { return c.class_id() == bench.labels[k]; });
    for (const auto& region : items[k].regions()) {
      bool found = false;
      for (const auto& q : cls.embeddings()) {
        bool same = true;
        for (std::size_t d = 0; d < cfg.dim; ++d) same = same && region[d] == q[d];
        found = found || same;
      }
      ASSERT_TRUE(found) << "item " << k;
    }
  }
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.n_items = 30;
  const auto a = synth_benchmark(cfg);
  const auto b = synth_benchmark(cfg);
  ASSERT_EQ(a.vision.entries.size(), b.vision.entries.size());
  for (std::size_t k = 0; k < a.vision.entries.size(); ++k) EXPECT_EQ(a.vision.entries[k].data, b.vision.entries[k].data);
  for (std::size_t k = 0; k < a.semantic.entries.size(); ++k)
    EXPECT_EQ(a.semantic.entries[k].data, b.semantic.entries[k].data);
  EXPECT_EQ(a.labels, b.labels);
  cfg.seed = 1;
  EXPECT_NE(synth_benchmark(cfg).vision.entries[0].data, a.vision.entries[0].data);
}

TEST(Synth, TwoClassFullBeatsBaseline) {
  SynthConfig cfg;
  cfg.n_classes = 2;
  cfg.dim = 16;
  cfg.n_regions = 8;
  cfg.signal_regions_per_item = 2;
  cfg.noise_sigma = 0.3;
  cfg.n_items = 200;
  const auto bench = synth_benchmark(cfg);
  const auto items = to_vision_sets(bench.vision);
  const auto classes = to_semantic_sets(bench.semantic);
  const std::vector<AlignmentConfig> configs{AlignmentConfig::baseline(), AlignmentConfig::full()};
  const auto report = run_eval(items, classes, bench.labels, configs);
  EXPECT_GT(report.rows[1].accuracy, report.rows[0].accuracy)
      << report.rows[1].accuracy << " vs " << report.rows[0].accuracy;
}

TEST(Synth, PredictionsMatchStraightLineScores) {
  SynthConfig cfg;
  cfg.n_classes = 5;
  cfg.n_items = 10;
  const auto bench = synth_benchmark(cfg);
  const auto items = to_vision_sets(bench.vision);
  const auto classes = to_semantic_sets(bench.semantic);
  const AlignmentConfig full;
  for (const auto& item : items) {
    const auto p = predict(item, classes, full);
    std::string best;
    double best_psi = -2.0;
    for (const auto& cls : classes) {
      const double psi = lazsl::testing::straight_line_psi(item, cls, full);
      const auto it = std::find_if(p.ranked.begin(), p.ranked.end(),
                                   [&](const ClassScore& s) { return s.class_id == cls.class_id(); });
      ASSERT_NEAR(it->psi, psi, 1e-5);
      if (psi > best_psi) {
        best_psi = psi;
        best = cls.class_id();
      }
    }
    EXPECT_EQ(p.predicted_class, best);
  }
}

TEST(Eval, SingleItemSingleClass) {
  const VisionSet v("i", EmbeddingVector{1.0, 0.0}, {EmbeddingVector{0.0, 1.0}});
  const std::vector<VisionSet> items{v};
  const std::vector<SemanticSet> classes{SemanticSet("c", "c", {{"a", EmbeddingVector{1.0, 1.0}}})};
  const std::vector<std::string> labels{"c"};
  const std::vector<AlignmentConfig> configs{AlignmentConfig{}};
  const auto r = run_eval(items, classes, labels, configs);
  EXPECT_EQ(r.rows[0].accuracy, 1.0);
  EXPECT_EQ(r.rows[0].correct, 1u);
}

TEST(Eval, InvertedLabelsScoreZero) {
  // Each item is its own class's attribute, so predictions are perfect.
  const EmbeddingVector ea{1.0, 0.0}, eb{0.0, 1.0};
  const std::vector<SemanticSet> classes{SemanticSet("a", "a", {{"x", ea}}), SemanticSet("b", "b", {{"y", eb}})};
  std::vector<VisionSet> items;
  std::vector<std::string> right, wrong;
  for (int k = 0; k < 10; ++k) {
    const bool is_a = k % 2 == 0;
    items.emplace_back("i" + std::to_string(k), is_a ? ea : eb, std::vector<EmbeddingVector>{is_a ? ea : eb});
    right.push_back(is_a ? "a" : "b");
    wrong.push_back(is_a ? "b" : "a");
  }
  const std::vector<AlignmentConfig> configs{AlignmentConfig{}};
  EXPECT_EQ(run_eval(items, classes, right, configs).rows[0].accuracy, 1.0);
  EXPECT_EQ(run_eval(items, classes, wrong, configs).rows[0].accuracy, 0.0);
}

TEST(Eval, AblationReportShapeAndDeterminism) {
  SynthConfig cfg;
  cfg.n_classes = 6;
  cfg.n_items = 24;
  const auto bench = synth_benchmark(cfg);
  const auto items = to_vision_sets(bench.vision);
  const auto classes = to_semantic_sets(bench.semantic);
  const auto rows = AlignmentConfig::ablation_rows();
  const auto a = run_eval(items, classes, bench.labels, rows);
  const auto b = run_eval(items, classes, bench.labels, rows);
  ASSERT_EQ(a.rows.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(a.rows[k].config.label(), rows[k].label());
    EXPECT_EQ(a.rows[k].total, 24u);
    EXPECT_EQ(a.rows[k].accuracy, b.rows[k].accuracy);
    for (std::size_t i = 0; i < 24; ++i) {
      EXPECT_EQ(a.rows[k].items[i].item_id, items[i].item_id());
      EXPECT_EQ(a.rows[k].items[i].predicted, b.rows[k].items[i].predicted);
    }
  }
  const auto j = to_json(a);
  EXPECT_EQ(j.at("rows").size(), 5u);
  EXPECT_EQ(j["rows"][0]["config"]["label"], "Baseline");
}

TEST(Eval, LabelErrors) {
  const std::vector<VisionSet> items{VisionSet("i", EmbeddingVector{1.0}, {EmbeddingVector{1.0}})};
  const std::vector<SemanticSet> classes{SemanticSet("c", "c", {{"a", EmbeddingVector{1.0}}})};
  const std::vector<AlignmentConfig> configs{AlignmentConfig{}};
  auto code = [&](std::vector<std::string> labels, std::vector<SemanticSet> cls) {
    try {
      (void)run_eval(items, cls, labels, configs);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code({"missing"}, classes), ErrorCode::IdMismatch);
  EXPECT_EQ(code({}, classes), ErrorCode::IdMismatch);
  EXPECT_EQ(code({"c"}, {classes[0], classes[0]}), ErrorCode::IdMismatch);
  EXPECT_EQ(code({"c"}, {}), ErrorCode::EmptyClassList);
}

TEST(Eval, SweepCsvHasOneRowPerTheta) {
  SynthConfig cfg;
  cfg.n_classes = 4;
  cfg.n_items = 8;
  const auto bench = synth_benchmark(cfg);
  const auto items = to_vision_sets(bench.vision);
  const auto classes = to_semantic_sets(bench.semantic);
  const std::vector<double> thetas{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  const auto points = theta_sweep(items, classes, bench.labels, AlignmentConfig{}, thetas);
  std::ostringstream os;
  write_sweep_csv(os, points);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "theta,accuracy");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.find(','), line.rfind(','));
  }
  EXPECT_EQ(rows, 6);
}

TEST(Eval, PredictionRecordCarriesAttributeBreakdown) {
  SynthConfig cfg;
  cfg.n_classes = 3;
  cfg.n_items = 1;
  const auto bench = synth_benchmark(cfg);
  const auto items = to_vision_sets(bench.vision);
  const auto classes = to_semantic_sets(bench.semantic);
  const auto p = predict(items[0], classes, AlignmentConfig{});
  const auto rec = prediction_record(p, classes, 2);
  EXPECT_EQ(rec.at("item_id"), items[0].item_id());
  ASSERT_EQ(rec.at("top").size(), 2u);
  double sum = 0.0;
  for (const auto& a : rec["top"][0]["attributes"]) sum += a.at("contribution").get<double>();
  EXPECT_NEAR(sum, rec["top"][0]["psi"].get<double>(), 1e-9);
  EXPECT_EQ(rec["top"][0]["attributes"].size(), cfg.m_attributes);
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  const std::string dir = tmp.path().string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("cropplan --width 224"), 2);
  EXPECT_EQ(run_cli("cropplan --width 0 --height 10"), 2);
  EXPECT_EQ(run_cli("cropplan --width 224 --height 224 --out " + dir + "/plan.json"), 0);
  EXPECT_TRUE(nlohmann::json::parse(read_file(tmp.path() / "plan.json")).contains("rects"));

  EXPECT_EQ(run_cli("synth --classes 3 --items 6 --out " + dir + "/b"), 0);
  const std::string bundles = " --vision " + dir + "/b/vision --semantic " + dir + "/b/semantic";
  EXPECT_EQ(run_cli("score" + bundles + " --out " + dir + "/s.jsonl"), 0);
  EXPECT_EQ(run_cli("eval --ablation" + bundles + " --out " + dir + "/r.json"), 0);
  EXPECT_EQ(nlohmann::json::parse(read_file(tmp.path() / "r.json")).at("rows").size(), 5u);
  EXPECT_EQ(run_cli("score --vision " + dir + "/nowhere --semantic " + dir + "/b/semantic"), 2);
  EXPECT_EQ(run_cli("score" + bundles + " --theta 2"), 2);

  // Forced kernel underflow is the numerical-failure path.
  EXPECT_EQ(run_cli("score" + bundles + " --lambda 1e-5 --domain kernel"), 3);
}

TEST(Cli, ScoreEmitsOneJsonLinePerItem) {
  TempDir tmp;
  const std::string dir = tmp.path().string();
  ASSERT_EQ(run_cli("synth --classes 3 --items 5 --out " + dir), 0);
  ASSERT_EQ(run_cli("score --top-k 2 --vision " + dir + "/vision --semantic " + dir + "/semantic --out " + dir +
                    "/s.jsonl"),
            0);
  std::istringstream in(read_file(tmp.path() / "s.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("top").size(), 2u);
    ++n;
  }
  EXPECT_EQ(n, 5);
}

}  // namespace
