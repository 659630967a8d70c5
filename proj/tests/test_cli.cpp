#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "faceattr/cli.hpp"
#include "faceattr/data.hpp"
#include "faceattr/eval.hpp"
#include "faceattr/image_io.hpp"
#include "test_util.hpp"

using namespace faceattr;

namespace {

namespace fs = std::filesystem;

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Small synthetic dataset on disk plus a config rooted there.
RunConfig synth_root(const testutil::TempDir& dir, int count = 40,
                     int train = 24, int val = 8) {
  RunConfig cfg;
  cfg.root = dir.str();
  cfg.seed = 5;
  cfg.workers = 2;
  cfg.synth_count = count;
  cfg.synth_train = train;
  cfg.synth_val = val;
  cfg.synth_out = "data";
  REQUIRE(cmd_synth(cfg) == 0);
  cfg.images_dir = "data/images";
  cfg.attributes = "data/attributes.txt";
  cfg.landmarks = "data/landmarks.txt";
  cfg.landmarks_detected = "data/landmarks_detected.txt";
  cfg.detections = "data/detections.txt";
  cfg.partitions = "data/partitions.txt";
  cfg.perturb.out_w = cfg.perturb.out_h = 64;
  cfg.plan.max_epochs = 3;
  cfg.plan.patience = 2;
  cfg.plan.batch_size = 16;
  cfg.plan.hidden_units = 16;
  return cfg;
}

}  // namespace

TEST_CASE("config rejects unknown keys and bad values") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("workers", "many"), ConfigError);
  CHECK_THROWS_AS(cfg.set("flip_prob", "maybe"), ConfigError);
  CHECK_THROWS_AS(cfg.set("tta_mirror", "2"), ConfigError);
  cfg.set("tta_shifts", "-8,0,8");
  CHECK(cfg.grid.shifts == std::vector<double>{-8.0, 0.0, 8.0});
  cfg.set("loss", "euclidean");
  CHECK(cfg.plan.loss == LossKind::kEuclidean);
  CHECK_THROWS_AS(cfg.set("loss", "hinge"), ConfigError);
}

TEST_CASE("config files parse comments and overrides") {
  testutil::TempDir dir("cfg");
  write_text_file(dir.str("run.cfg"),
                  "# comment line\n"
                  "seed = 9\n"
                  "std_angle = 12.5  # trailing comment\n"
                  "\n"
                  "mode = TD\n");
  RunConfig cfg;
  cfg.load_file(dir.str("run.cfg"));
  CHECK(cfg.seed == 9);
  CHECK(cfg.perturb.std_angle == 12.5);
  CHECK(cfg.mode == "TD");

  write_text_file(dir.str("bad.cfg"), "just words\n");
  RunConfig bad;
  CHECK_THROWS_AS(bad.load_file(dir.str("bad.cfg")), ConfigError);
}

TEST_CASE("align writes one crop per record, deterministically") {
  testutil::TempDir dir("align");
  RunConfig cfg = synth_root(dir, 6, 4, 1);
  cfg.align_out = "crops_a";
  CHECK(cmd_align(cfg) == 0);
  cfg.align_out = "crops_b";
  CHECK(cmd_align(cfg) == 0);

  int count = 0;
  for (const auto& entry : fs::directory_iterator(dir.str("crops_a"))) {
    ++count;
    std::string name = entry.path().filename().string();
    CHECK(file_bytes(entry.path().string()) ==
          file_bytes(dir.str("crops_b/" + name)));
  }
  CHECK(count == 6);
  ImageF crop = read_image(dir.str("crops_a/000001.png"));
  CHECK(crop.width() == 64);
  CHECK(crop.height() == 64);
}

TEST_CASE("align skips corrupt images with a nonzero exit") {
  testutil::TempDir dir("alignbad");
  RunConfig cfg = synth_root(dir, 5, 3, 1);
  write_text_file(dir.str("data/images/000002.png"), "not a png");
  cfg.align_out = "crops";
  CHECK(cmd_align(cfg) == 1);
  CHECK_FALSE(fs::exists(dir.str("crops/000002.png")));
  CHECK(fs::exists(dir.str("crops/000001.png")));
}

TEST_CASE("augment preview renders a two-row sheet") {
  testutil::TempDir dir("preview");
  RunConfig cfg = synth_root(dir, 8, 6, 1);
  cfg.preview_count = 5;
  cfg.preview_out = "sheet.png";
  CHECK(cmd_augment_preview(cfg) == 0);
  ImageF sheet = read_image(dir.str("sheet.png"));
  CHECK(sheet.width() == 64 * 5);
  CHECK(sheet.height() == 64 * 2);

  // Identity configuration: both rows are equal.
  cfg.perturb.std_angle = cfg.perturb.std_shift = 0.0;
  cfg.perturb.std_scale = cfg.perturb.std_blur = 0.0;
  cfg.perturb.flip_prob = 0.0;
  cfg.preview_out = "sheet_id.png";
  CHECK(cmd_augment_preview(cfg) == 0);
  ImageF id_sheet = read_image(dir.str("sheet_id.png"));
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < id_sheet.width(); ++x)
      CHECK(id_sheet.at(x, y) == id_sheet.at(x, y + 64));

  // Fixed seed reproduces the sheet byte for byte.
  cfg = synth_root(dir, 8, 6, 1);
  cfg.preview_out = "sheet2.png";
  CHECK(cmd_augment_preview(cfg) == 0);
  CHECK(file_bytes(dir.str("sheet.png")) == file_bytes(dir.str("sheet2.png")));
}

TEST_CASE("train, predict and evaluate run end to end") {
  testutil::TempDir dir("train");
  RunConfig cfg = synth_root(dir, 60, 40, 10);
  CHECK(cmd_train(cfg) == 0);
  CHECK(fs::exists(dir.str("model.ckpt")));
  CHECK(fs::exists(dir.str("model.ckpt.json")));
  CHECK(fs::exists(dir.str("loss_curve.csv")));
  std::string curve = file_bytes(dir.str("loss_curve.csv"));
  CHECK(curve.find("epoch,learning_rate,train_loss,validation_loss") == 0);

  cfg.model = "model.ckpt";
  cfg.mode = "A";
  cfg.scores_out = "scores_a.txt";
  CHECK(cmd_predict(cfg) == 0);
  cfg.mode = "D";
  cfg.scores_out = "scores_d.txt";
  CHECK(cmd_predict(cfg) == 0);

  // Misaligned inputs produce different scores than aligned ones.
  CHECK(file_bytes(dir.str("scores_a.txt")) != file_bytes(dir.str("scores_d.txt")));

  cfg.scores = "scores_a.txt";
  cfg.table_out = "table_a.csv";
  CHECK(cmd_evaluate(cfg) == 0);
  ErrorTable table = parse_table(file_bytes(dir.str("table_a.csv")));
  CHECK(table.attribute_names.size() == 8);

  // Further prediction modes over the same checkpoint.
  for (const char* mode : {"L", "CD"}) {
    cfg.mode = mode;
    cfg.scores_out = std::string("scores_") + mode + ".txt";
    CHECK(cmd_predict(cfg) == 0);
  }
  cfg.mode = "TD";
  cfg.grid.shifts = {0.0};
  cfg.grid.scales = {1.0};
  cfg.grid.angles = {-10.0, 0.0, 10.0};
  cfg.scores_out = "scores_td.txt";
  CHECK(cmd_predict(cfg) == 0);
}

TEST_CASE("evaluate on a perfect dump yields the all-zero table") {
  testutil::TempDir dir("perfect");
  RunConfig cfg = synth_root(dir, 10, 6, 2);
  Dataset ds = load_dataset({dir.str("data/images"), dir.str("data/attributes.txt"),
                             "", "", "", dir.str("data/partitions.txt")});
  ScoreDump dump;
  for (const DatasetRecord& rec : ds.records) {
    if (rec.partition != Partition::kTest) continue;
    dump.ids.push_back(rec.id);
    dump.scores.push_back(rec.attributes.cast<double>());
  }
  write_text_file(dir.str("perfect.txt"), emit_scores(dump));
  cfg.scores = "perfect.txt";
  cfg.table_out = "perfect.csv";
  CHECK(cmd_evaluate(cfg) == 0);
  ErrorTable table = parse_table(file_bytes(dir.str("perfect.csv")));
  CHECK(table.errors.cwiseAbs().maxCoeff() == 0.0);
  CHECK(file_bytes(dir.str("perfect.csv")).find("OVERALL,0.00") !=
        std::string::npos);
}

TEST_CASE("ttest compares tables and flags degenerate input") {
  testutil::TempDir dir("ttest");
  RunConfig cfg;
  cfg.root = dir.str();

  ErrorTable a;
  a.attribute_names = {"one", "two", "three"};
  a.errors.resize(3);
  a.errors << 10.0, 12.0, 8.0;
  ErrorTable b = a;
  b.errors << 11.0, 11.0, 9.0;
  write_text_file(dir.str("a.csv"), emit_table(a, TableFormat::kCsv));
  write_text_file(dir.str("b.csv"), emit_table(b, TableFormat::kCsv));

  cfg.ttest_a = "a.csv";
  cfg.ttest_b = "b.csv";
  CHECK(cmd_ttest(cfg) == 0);

  // Identical tables: zero variance surfaces as a message + exit 1.
  write_text_file(dir.str("same.csv"), emit_table(a, TableFormat::kCsv));
  cfg.ttest_b = "same.csv";
  cfg.ttest_a = "same.csv";
  CHECK(cmd_ttest(cfg) == 1);
}

TEST_CASE("mode and data mismatches surface as config errors") {
  testutil::TempDir dir("mismatch");
  RunConfig cfg = synth_root(dir, 8, 5, 2);
  CHECK(cmd_train(cfg) == 0);
  cfg.model = "model.ckpt";

  cfg.landmarks_detected.clear();  // L without detected landmarks
  cfg.mode = "L";
  CHECK_THROWS_AS(cmd_predict(cfg), ConfigError);

  cfg.mode = "X";
  CHECK_THROWS_AS(cmd_predict(cfg), ConfigError);

  RunConfig no_attrs;
  no_attrs.root = dir.str();
  CHECK_THROWS_AS(cmd_evaluate(no_attrs), ConfigError);
}

TEST_CASE("predictions without detections fall back to the center crop") {
  testutil::TempDir dir("fallback");
  RunConfig cfg = synth_root(dir, 8, 5, 2);
  CHECK(cmd_train(cfg) == 0);
  cfg.model = "model.ckpt";
  cfg.detections.clear();  // no detector output at all
  cfg.mode = "D";
  cfg.scores_out = "scores_fallback.txt";
  CHECK(cmd_predict(cfg) == 0);
  ScoreDump dump = parse_scores(file_bytes(dir.str("scores_fallback.txt")));
  CHECK(dump.ids.size() == 1);  // the single test record
}
