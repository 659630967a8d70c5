#include "faceattr/cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "faceattr/image_io.hpp"
#include "faceattr/pipeline.hpp"
#include "faceattr/raster.hpp"

namespace faceattr {
namespace {

namespace fs = std::filesystem;

double to_double(const std::string& key, const std::string& value) {
  double v;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "' expects a number, got '" +
                      value + "'");
  return v;
}

long to_long(const std::string& key, const std::string& value) {
  long v;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "' expects an integer, got '" +
                      value + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" +
                    value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ','))
    out.push_back(to_double(key, item));
  if (out.empty())
    throw ConfigError("config key '" + key + "' expects a non-empty list");
  return out;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& key_registry() {
  auto str = [](std::string RunConfig::* field) {
    return [field](RunConfig& c, const std::string&, const std::string& v) {
      c.*field = v;
    };
  };
  auto num = [](double RunConfig::* field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      c.*field = to_double(k, v);
    };
  };
  auto integer = [](int RunConfig::* field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      c.*field = static_cast<int>(to_long(k, v));
    };
  };

  static const std::map<std::string, Setter> registry = {
      {"root", str(&RunConfig::root)},
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = static_cast<std::uint64_t>(to_long(k, v));
       }},
      {"workers", integer(&RunConfig::workers)},
      {"images_dir", str(&RunConfig::images_dir)},
      {"attributes", str(&RunConfig::attributes)},
      {"landmarks", str(&RunConfig::landmarks)},
      {"landmarks_detected", str(&RunConfig::landmarks_detected)},
      {"detections", str(&RunConfig::detections)},
      {"partitions", str(&RunConfig::partitions)},
      {"enlargement_factor", num(&RunConfig::enlargement_factor)},
      {"out_w",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.out_w = static_cast<int>(to_long(k, v));
       }},
      {"out_h",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.out_h = static_cast<int>(to_long(k, v));
       }},
      {"std_angle",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.std_angle = to_double(k, v);
       }},
      {"std_shift",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.std_shift = to_double(k, v);
       }},
      {"mean_scale",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.mean_scale = to_double(k, v);
       }},
      {"std_scale",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.std_scale = to_double(k, v);
       }},
      {"std_blur",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.std_blur = to_double(k, v);
       }},
      {"flip_prob",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.perturb.flip_prob = to_double(k, v);
       }},
      {"tta_shifts",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid.shifts = to_list(k, v);
       }},
      {"tta_scales",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid.scales = to_list(k, v);
       }},
      {"tta_angles",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid.angles = to_list(k, v);
       }},
      {"tta_mirror",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid.mirror = to_bool(k, v);
       }},
      {"loss",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.plan.loss = loss_kind_from_string(v);
       }},
      {"learning_rate",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.learning_rate = to_double(k, v);
       }},
      {"decay_factor",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.decay_factor = to_double(k, v);
       }},
      {"patience",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.patience = static_cast<int>(to_long(k, v));
       }},
      {"max_stage_drops",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.max_stage_drops = static_cast<int>(to_long(k, v));
       }},
      {"max_epochs",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.max_epochs = static_cast<int>(to_long(k, v));
       }},
      {"batch_size",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.batch_size = static_cast<int>(to_long(k, v));
       }},
      {"hidden_units",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.hidden_units = static_cast<int>(to_long(k, v));
       }},
      {"rmsprop_decay",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.rmsprop_decay = to_double(k, v);
       }},
      {"rmsprop_epsilon",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plan.rmsprop_epsilon = to_double(k, v);
       }},
      {"checkpoint_out", str(&RunConfig::checkpoint_out)},
      {"curve_out", str(&RunConfig::curve_out)},
      {"mode", str(&RunConfig::mode)},
      {"model", str(&RunConfig::model)},
      {"scores_out", str(&RunConfig::scores_out)},
      {"predict_partition", str(&RunConfig::predict_partition)},
      {"scores", str(&RunConfig::scores)},
      {"table_out", str(&RunConfig::table_out)},
      {"format", str(&RunConfig::format)},
      {"ttest_a", str(&RunConfig::ttest_a)},
      {"ttest_b", str(&RunConfig::ttest_b)},
      {"ttest_inputs", str(&RunConfig::ttest_inputs)},
      {"ttest_pairing", str(&RunConfig::ttest_pairing)},
      {"align_out", str(&RunConfig::align_out)},
      {"preview_out", str(&RunConfig::preview_out)},
      {"preview_count", integer(&RunConfig::preview_count)},
      {"synth_out", str(&RunConfig::synth_out)},
      {"synth_count", integer(&RunConfig::synth_count)},
      {"synth_train", integer(&RunConfig::synth_train)},
      {"synth_val", integer(&RunConfig::synth_val)},
      {"synth_attributes",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.attribute_count = static_cast<int>(to_long(k, v));
       }},
      {"canvas",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.canvas = static_cast<int>(to_long(k, v));
       }},
      {"rot_range",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.rot_range = to_double(k, v);
       }},
      {"scale_min",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.scale_min = to_double(k, v);
       }},
      {"scale_max",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.scale_max = to_double(k, v);
       }},
      {"shift_range",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.shift_range = to_double(k, v);
       }},
      {"det_size_factor",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.det_size_factor = to_double(k, v);
       }},
      {"det_center_noise",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.det_center_noise = to_double(k, v);
       }},
      {"det_size_noise",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.det_size_noise = to_double(k, v);
       }},
      {"landmark_noise",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.landmark_noise = to_double(k, v);
       }},
  };
  return registry;
}

Dataset load_from_config(const RunConfig& cfg) {
  if (cfg.attributes.empty())
    throw ConfigError("missing 'attributes' (annotation file)");
  DatasetPaths paths;
  paths.images_dir = cfg.resolve(cfg.images_dir.empty() ? "." : cfg.images_dir);
  paths.attributes_file = cfg.resolve(cfg.attributes);
  if (!cfg.landmarks.empty()) paths.landmarks_file = cfg.resolve(cfg.landmarks);
  if (!cfg.landmarks_detected.empty())
    paths.detected_landmarks_file = cfg.resolve(cfg.landmarks_detected);
  if (!cfg.detections.empty()) paths.detections_file = cfg.resolve(cfg.detections);
  if (!cfg.partitions.empty()) paths.partitions_file = cfg.resolve(cfg.partitions);
  return load_dataset(paths);
}

Partition parse_partition_name(const std::string& name) {
  if (name == "train") return Partition::kTrain;
  if (name == "validation" || name == "val") return Partition::kValidation;
  if (name == "test") return Partition::kTest;
  throw ConfigError("unknown partition '" + name + "'");
}

std::vector<std::size_t> partition_or_all(const Dataset& ds,
                                          const std::string& name) {
  if (name == "all") {
    std::vector<std::size_t> idx(ds.records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
  return ds.partition_indices(parse_partition_name(name));
}

std::string output_name(const std::string& id) {
  return id.find('.') == std::string::npos ? id + ".png" : id;
}

ImageF to_channels(const ImageF& img, int channels) {
  if (img.channels() == channels) return img;
  ImageF out(img.width(), img.height(), channels);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < channels; ++c)
        out.at(x, y, c) = img.channels() == 1
                              ? img.at(x, y, 0)
                              : (img.at(x, y, 0) + img.at(x, y, 1) +
                                 img.at(x, y, 2)) / 3.0f;
  return out;
}

TableFormat parse_format(const std::string& name) {
  if (name == "csv") return TableFormat::kCsv;
  if (name == "tsv") return TableFormat::kTsv;
  if (name == "markdown" || name == "md") return TableFormat::kMarkdown;
  throw ConfigError("unknown table format '" + name + "'");
}

std::vector<ReferenceNet> load_models(const RunConfig& cfg) {
  if (cfg.model.empty()) throw ConfigError("missing 'model' (checkpoint path)");
  std::vector<ReferenceNet> models;
  std::istringstream in(cfg.model);
  std::string path;
  while (std::getline(in, path, ',')) {
    path = trim(path);
    if (path.empty()) continue;
    models.push_back(load_checkpoint(cfg.resolve(path)));
  }
  if (models.empty()) throw ConfigError("no checkpoints in 'model'");
  return models;
}

PredictOptions predict_options(const RunConfig& cfg) {
  PredictOptions options;
  options.mode = parse_predict_mode(cfg.mode);
  options.enlargement_factor = cfg.enlargement_factor;
  options.grid = cfg.grid;
  options.out_size = cfg.perturb.out_w;
  if (cfg.perturb.out_w != cfg.perturb.out_h)
    throw ConfigError("prediction needs a square crop (out_w == out_h)");
  return options;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& registry = key_registry();
  auto it = registry.find(key);
  if (it == registry.end())
    throw ConfigError("unknown config key '" + key + "'");
  it->second(*this, key, value);
}

void RunConfig::load_file(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not 'key = value'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string RunConfig::resolve(const std::string& path) const {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, setter] : key_registry()) keys.push_back(key);
  return keys;
}

int cmd_align(const RunConfig& cfg) {
  Dataset ds = load_from_config(cfg);
  fs::create_directories(cfg.resolve(cfg.align_out));
  ImageLoader loader = disk_loader();
  int failed = 0;
  for (const DatasetRecord& rec : ds.records) {
    if (!rec.landmarks) {
      std::cerr << "warning: no landmarks for '" << rec.id << "'\n";
      ++failed;
      continue;
    }
    std::optional<ImageF> img = loader(rec);
    if (!img) {
      std::cerr << "warning: cannot read image for '" << rec.id << "'\n";
      ++failed;
      continue;
    }
    ImageF aligned =
        render_aligned(*img, *rec.landmarks, cfg.perturb.out_w, cfg.perturb.out_h);
    write_image(aligned, (fs::path(cfg.resolve(cfg.align_out)) /
                          output_name(rec.id)).string());
  }
  std::cout << "aligned " << (ds.records.size() - failed) << " of "
            << ds.records.size() << " records\n";
  return failed == 0 ? 0 : 1;
}

int cmd_augment_preview(const RunConfig& cfg) {
  Dataset ds = load_from_config(cfg);
  ImageLoader loader = disk_loader();
  const int n = cfg.preview_count;
  if (n < 1) throw ConfigError("preview_count must be positive");

  std::vector<ImageF> aligned, perturbed;
  for (std::size_t i = 0; i < ds.records.size() &&
                          aligned.size() < static_cast<std::size_t>(n); ++i) {
    const DatasetRecord& rec = ds.records[i];
    if (!rec.landmarks) continue;
    std::optional<ImageF> img = loader(rec);
    if (!img) continue;
    aligned.push_back(
        render_aligned(*img, *rec.landmarks, cfg.perturb.out_w, cfg.perturb.out_h));
    Perturbation p =
        EpochStream::record_perturbation(cfg.perturb, cfg.seed, 0, i);
    perturbed.push_back(
        render_training_example(*img, *rec.landmarks, p, cfg.perturb));
  }
  if (aligned.empty()) throw Error("no usable records for the preview sheet");

  int channels = 1;
  for (const ImageF& img : aligned)
    channels = std::max(channels, img.channels());
  const int tile_w = cfg.perturb.out_w, tile_h = cfg.perturb.out_h;
  ImageF sheet(tile_w * static_cast<int>(aligned.size()), tile_h * 2, channels);
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    ImageF top = to_channels(aligned[i], channels);
    ImageF bottom = to_channels(perturbed[i], channels);
    for (int y = 0; y < tile_h; ++y)
      for (int x = 0; x < tile_w; ++x)
        for (int c = 0; c < channels; ++c) {
          sheet.at(static_cast<int>(i) * tile_w + x, y, c) = top.at(x, y, c);
          sheet.at(static_cast<int>(i) * tile_w + x, tile_h + y, c) =
              bottom.at(x, y, c);
        }
  }
  write_image(sheet, cfg.resolve(cfg.preview_out));
  std::cout << "preview sheet with " << aligned.size() << " columns written\n";
  return 0;
}

int cmd_synth(const RunConfig& cfg) {
  SynthConfig synth_cfg = cfg.synth;
  synth_cfg.seed = cfg.seed;
  if (cfg.synth_train + cfg.synth_val > cfg.synth_count)
    throw ConfigError("synth_train + synth_val exceeds synth_count");
  std::vector<SynthSample> samples =
      synth_generate(synth_cfg, cfg.synth_count, cfg.workers);
  write_synth_dataset(samples, synth_cfg, cfg.resolve(cfg.synth_out),
                      cfg.synth_train, cfg.synth_val);
  std::cout << "synthesized " << cfg.synth_count << " records under "
            << cfg.resolve(cfg.synth_out) << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  Dataset ds = load_from_config(cfg);
  std::vector<std::size_t> train_idx = ds.partition_indices(Partition::kTrain);
  std::vector<std::size_t> val_idx =
      ds.partition_indices(Partition::kValidation);
  if (train_idx.empty()) throw ConfigError("no records in the train partition");
  if (val_idx.empty())
    throw ConfigError("no records in the validation partition");

  TrainResult result = train(ds, train_idx, val_idx, cfg.perturb, cfg.plan,
                             cfg.seed, cfg.workers);
  save_checkpoint(result.model, cfg.resolve(cfg.checkpoint_out), cfg.plan,
                  cfg.seed);
  write_text_file(cfg.resolve(cfg.curve_out), loss_curve_csv(result.curve));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", result.best_validation_loss);
  std::cout << "best validation loss " << buf << " at epoch "
            << result.best_epoch << " (" << result.curve.size()
            << " epochs run)\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  Dataset ds = load_from_config(cfg);
  std::vector<ReferenceNet> models = load_models(cfg);
  std::vector<const Classifier*> members;
  for (const ReferenceNet& m : models) members.push_back(&m);

  std::vector<std::size_t> subset = partition_or_all(ds, cfg.predict_partition);
  if (subset.empty())
    throw ConfigError("no records in partition '" + cfg.predict_partition + "'");
  ScoreDump dump = predict_subset(ds, subset, disk_loader(), members,
                                  predict_options(cfg), cfg.workers);
  write_text_file(cfg.resolve(cfg.scores_out), emit_scores(dump));
  std::cout << "scored " << dump.ids.size() << " records (mode " << cfg.mode
            << ", " << members.size() << " model"
            << (members.size() == 1 ? "" : "s") << ")\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  Dataset ds = load_from_config(cfg);
  if (cfg.scores.empty()) throw ConfigError("missing 'scores' (dump file)");
  ScoreDump dump = parse_scores(read_text_file(cfg.resolve(cfg.scores)));
  ErrorTable table = evaluate_scores(ds, dump);
  std::string text = emit_table(table, parse_format(cfg.format));
  if (cfg.table_out.empty())
    std::cout << text;
  else
    write_text_file(cfg.resolve(cfg.table_out), text);
  return 0;
}

int cmd_ttest(const RunConfig& cfg) {
  if (cfg.ttest_a.empty() || cfg.ttest_b.empty())
    throw ConfigError("ttest needs 'ttest_a' and 'ttest_b'");
  std::vector<double> a, b;
  if (cfg.ttest_inputs == "tables") {
    ErrorTable ta = parse_table(read_text_file(cfg.resolve(cfg.ttest_a)));
    ErrorTable tb = parse_table(read_text_file(cfg.resolve(cfg.ttest_b)));
    if (ta.attribute_names != tb.attribute_names)
      throw ConfigError("ttest tables list different attributes");
    a.assign(ta.errors.data(), ta.errors.data() + ta.errors.size());
    b.assign(tb.errors.data(), tb.errors.data() + tb.errors.size());
  } else if (cfg.ttest_inputs == "scores") {
    Dataset ds = load_from_config(cfg);
    ScoreDump da = parse_scores(read_text_file(cfg.resolve(cfg.ttest_a)));
    ScoreDump db = parse_scores(read_text_file(cfg.resolve(cfg.ttest_b)));
    if (cfg.ttest_pairing == "attribute") {
      ErrorTable ta = evaluate_scores(ds, da);
      ErrorTable tb = evaluate_scores(ds, db);
      a.assign(ta.errors.data(), ta.errors.data() + ta.errors.size());
      b.assign(tb.errors.data(), tb.errors.data() + tb.errors.size());
    } else if (cfg.ttest_pairing == "image") {
      if (da.ids != db.ids)
        throw ConfigError("score dumps cover different images");
      a = per_image_errors(ds, da);
      b = per_image_errors(ds, db);
    } else {
      throw ConfigError("ttest_pairing must be 'attribute' or 'image'");
    }
  } else {
    throw ConfigError("ttest_inputs must be 'tables' or 'scores'");
  }

  try {
    TTestResult r = paired_ttest(a, b);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "n=%zu t=%.6g p=%.6g\n", a.size(), r.t, r.p);
    std::cout << buf;
  } catch (const ZeroVarianceError&) {
    std::cerr << "ttest: all paired differences are identical; "
                 "the statistic is undefined\n";
    return 1;
  }
  return 0;
}

}  // namespace faceattr
