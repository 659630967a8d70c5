#ifndef FACEATTR_PIPELINE_HPP
#define FACEATTR_PIPELINE_HPP

#include <string>
#include <vector>

#include "faceattr/augment.hpp"
#include "faceattr/data.hpp"
#include "faceattr/eval.hpp"
#include "faceattr/model.hpp"
#include "faceattr/tta.hpp"

namespace faceattr {

/// Test conditions: which geometry drives the crop and whether test-time
/// augmentation is applied.
///   A  - box from ground-truth landmarks, single aligned view
///   C  - ten-crop over the aligned view
///   L  - box from detected landmarks, single view
///   D  - enlarged detection box (fallback crop when the detector failed)
///   CD - ten-crop over the detection view
///   TD - transformation grid over the detection box
enum class PredictMode { kA, kC, kL, kD, kCD, kTD };

PredictMode parse_predict_mode(const std::string& name);
std::string to_string(PredictMode mode);

struct PredictOptions {
  PredictMode mode = PredictMode::kA;
  double enlargement_factor = 1.6;
  TtaGrid grid;
  int out_size = 224;
};

/// All crop views for one record under the given mode.
std::vector<ImageF> prediction_views(const DatasetRecord& record,
                                     const ImageF& image,
                                     const PredictOptions& options);

/// Mean score over every (member, view) pair.
ScoreVector predict_record(const std::vector<const Classifier*>& members,
                           const DatasetRecord& record, const ImageF& image,
                           const PredictOptions& options);

/// Scores for a record subset, in subset order. Unreadable images abort
/// with an error naming the record.
ScoreDump predict_subset(const Dataset& dataset,
                         const std::vector<std::size_t>& subset,
                         const ImageLoader& loader,
                         const std::vector<const Classifier*>& members,
                         const PredictOptions& options, int workers = 1);

/// Error table of a score dump against dataset ground truth (tau = 0).
ErrorTable evaluate_scores(const Dataset& dataset, const ScoreDump& dump);

/// Per-image mean error (percent) of a dump, for image-paired t-tests;
/// order follows the dump.
std::vector<double> per_image_errors(const Dataset& dataset,
                                     const ScoreDump& dump);

}  // namespace faceattr

#endif
