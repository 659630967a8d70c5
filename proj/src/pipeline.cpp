#include "faceattr/pipeline.hpp"

#include <map>

#include "faceattr/parallel.hpp"
#include "faceattr/raster.hpp"

namespace faceattr {

PredictMode parse_predict_mode(const std::string& name) {
  if (name == "A") return PredictMode::kA;
  if (name == "C") return PredictMode::kC;
  if (name == "L") return PredictMode::kL;
  if (name == "D") return PredictMode::kD;
  if (name == "CD") return PredictMode::kCD;
  if (name == "TD") return PredictMode::kTD;
  throw ConfigError("unknown predict mode '" + name +
                    "' (expected A, C, L, D, CD or TD)");
}

std::string to_string(PredictMode mode) {
  switch (mode) {
    case PredictMode::kA: return "A";
    case PredictMode::kC: return "C";
    case PredictMode::kL: return "L";
    case PredictMode::kD: return "D";
    case PredictMode::kCD: return "CD";
    case PredictMode::kTD: return "TD";
  }
  return "?";
}

namespace {

ImageF aligned_view(const DatasetRecord& record, const ImageF& image,
                    const Landmarks& lm, int out_size) {
  (void)record;
  return render_aligned(image, lm, out_size, out_size);
}

ImageF detection_view(const DatasetRecord& record, const ImageF& image,
                      double factor, int out_size) {
  if (!record.detection) return fallback_crop(image, out_size);
  AlignedBox box = enlarge_detection(*record.detection, factor);
  AffineTransform t = box_to_affine(box, static_cast<double>(out_size),
                                    static_cast<double>(out_size), false);
  return warp(image, t, out_size, out_size);
}

AlignedBox detection_box_or_fallback(const DatasetRecord& record,
                                     const ImageF& image, double factor) {
  if (record.detection) return enlarge_detection(*record.detection, factor);
  return fallback_box(image.width(), image.height());
}

}  // namespace

std::vector<ImageF> prediction_views(const DatasetRecord& record,
                                     const ImageF& image,
                                     const PredictOptions& options) {
  switch (options.mode) {
    case PredictMode::kA:
      if (!record.landmarks)
        throw ConfigError("mode A needs landmarks, record '" + record.id + "'");
      return {aligned_view(record, image, *record.landmarks, options.out_size)};
    case PredictMode::kC:
      if (!record.landmarks)
        throw ConfigError("mode C needs landmarks, record '" + record.id + "'");
      return ten_crop_views(
          aligned_view(record, image, *record.landmarks, options.out_size));
    case PredictMode::kL:
      if (!record.detected_landmarks)
        throw ConfigError("mode L needs detected landmarks, record '" +
                          record.id + "'");
      return {aligned_view(record, image, *record.detected_landmarks,
                           options.out_size)};
    case PredictMode::kD:
      return {detection_view(record, image, options.enlargement_factor,
                             options.out_size)};
    case PredictMode::kCD:
      return ten_crop_views(detection_view(
          record, image, options.enlargement_factor, options.out_size));
    case PredictMode::kTD: {
      AlignedBox box = detection_box_or_fallback(record, image,
                                                 options.enlargement_factor);
      return render_views(image, box,
                          grid_perturbations(options.grid, options.out_size),
                          options.out_size);
    }
  }
  throw ConfigError("unhandled predict mode");
}

ScoreVector predict_record(const std::vector<const Classifier*>& members,
                           const DatasetRecord& record, const ImageF& image,
                           const PredictOptions& options) {
  if (members.empty()) throw Error("predict_record: no classifiers");
  std::vector<ImageF> views = prediction_views(record, image, options);
  std::vector<ScoreVector> scores;
  scores.reserve(views.size() * members.size());
  for (const ImageF& view : views)
    for (const Classifier* member : members)
      scores.push_back(member->predict(view));
  return fuse_scores(scores);
}

ScoreDump predict_subset(const Dataset& dataset,
                         const std::vector<std::size_t>& subset,
                         const ImageLoader& loader,
                         const std::vector<const Classifier*>& members,
                         const PredictOptions& options, int workers) {
  ScoreDump dump;
  dump.ids.resize(subset.size());
  dump.scores.resize(subset.size());
  parallel_for(subset.size(), workers, [&](std::size_t i) {
    const DatasetRecord& record = dataset.records[subset[i]];
    std::optional<ImageF> image = loader(record);
    if (!image) throw IoError("cannot load image for record '" + record.id + "'");
    dump.ids[i] = record.id;
    dump.scores[i] = predict_record(members, record, *image, options);
  });
  return dump;
}

ErrorTable evaluate_scores(const Dataset& dataset, const ScoreDump& dump) {
  std::map<std::string, const DatasetRecord*> by_id;
  for (const DatasetRecord& rec : dataset.records) by_id[rec.id] = &rec;
  std::vector<AttributeVector> predictions, truths;
  predictions.reserve(dump.ids.size());
  truths.reserve(dump.ids.size());
  for (std::size_t i = 0; i < dump.ids.size(); ++i) {
    auto it = by_id.find(dump.ids[i]);
    if (it == by_id.end())
      throw Error("score dump references unknown image '" + dump.ids[i] + "'");
    predictions.push_back(classify(dump.scores[i]));
    truths.push_back(it->second->attributes);
  }
  return error_table(predictions, truths, dataset.attribute_names);
}

std::vector<double> per_image_errors(const Dataset& dataset,
                                     const ScoreDump& dump) {
  std::map<std::string, const DatasetRecord*> by_id;
  for (const DatasetRecord& rec : dataset.records) by_id[rec.id] = &rec;
  std::vector<double> errors;
  errors.reserve(dump.ids.size());
  for (std::size_t i = 0; i < dump.ids.size(); ++i) {
    auto it = by_id.find(dump.ids[i]);
    if (it == by_id.end())
      throw Error("score dump references unknown image '" + dump.ids[i] + "'");
    AttributeVector pred = classify(dump.scores[i]);
    const AttributeVector& truth = it->second->attributes;
    if (pred.size() != truth.size())
      throw Error("attribute count mismatch for '" + dump.ids[i] + "'");
    double mismatches =
        (pred.array() != truth.array()).cast<double>().sum();
    errors.push_back(100.0 * mismatches / static_cast<double>(pred.size()));
  }
  return errors;
}

}  // namespace faceattr
