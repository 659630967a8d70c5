#ifndef FACEATTR_CLI_HPP
#define FACEATTR_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "faceattr/augment.hpp"
#include "faceattr/model.hpp"
#include "faceattr/synth.hpp"
#include "faceattr/tta.hpp"

namespace faceattr {

/// Flat key-value run configuration backing every sub-command. Parsed from
/// a config file (one "key = value" per line, '#' comments) and/or
/// key=value overrides; unknown keys are rejected.
struct RunConfig {
  std::string root = ".";
  std::uint64_t seed = 1;
  int workers = 1;

  // dataset files (relative paths resolve against root)
  std::string images_dir;
  std::string attributes;
  std::string landmarks;
  std::string landmarks_detected;
  std::string detections;
  std::string partitions;
  double enlargement_factor = 1.6;

  PerturbConfig perturb;
  TtaGrid grid;
  TrainPlan plan;

  std::string checkpoint_out = "model.ckpt";
  std::string curve_out = "loss_curve.csv";

  std::string mode = "A";
  std::string model;  // checkpoint path, comma-separated for ensembles
  std::string scores_out = "scores.txt";
  std::string predict_partition = "test";

  std::string scores;
  std::string table_out;  // empty writes to stdout
  std::string format = "csv";

  std::string ttest_a;
  std::string ttest_b;
  std::string ttest_inputs = "tables";     // tables | scores
  std::string ttest_pairing = "attribute"; // attribute | image

  std::string align_out = "aligned";
  std::string preview_out = "preview.png";
  int preview_count = 5;

  std::string synth_out = "synth";
  int synth_count = 100;
  int synth_train = 70;
  int synth_val = 15;
  SynthConfig synth;

  /// Applies one "key=value" assignment; throws ConfigError on unknown
  /// keys or malformed values.
  void set(const std::string& key, const std::string& value);

  /// Reads a config file and applies each assignment in order.
  void load_file(const std::string& path);

  /// Path resolution against root (absolute paths pass through).
  std::string resolve(const std::string& path) const;

  /// All recognized keys, for diagnostics.
  static std::vector<std::string> known_keys();
};

int cmd_align(const RunConfig& cfg);
int cmd_augment_preview(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_predict(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_ttest(const RunConfig& cfg);

}  // namespace faceattr

#endif
