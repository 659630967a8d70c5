#ifndef FACEATTR_DATA_HPP
#define FACEATTR_DATA_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faceattr/geometry.hpp"
#include "faceattr/image.hpp"
#include "faceattr/types.hpp"

namespace faceattr {

/// Axis-aligned rectangle in source pixels (left/top/width/height).
struct Rect {
  double x = 0, y = 0, w = 0, h = 0;
};

struct Detection {
  Rect rect;
  double confidence = 0;
};

enum class Partition { kTrain = 0, kValidation = 1, kTest = 2 };

struct DatasetRecord {
  std::string id;
  std::string image_path;
  std::optional<Landmarks> landmarks;
  std::optional<Landmarks> detected_landmarks;
  std::optional<Rect> detection;
  AttributeVector attributes;
  Partition partition = Partition::kTrain;
};

struct Dataset {
  std::vector<std::string> attribute_names;
  std::vector<DatasetRecord> records;

  std::vector<std::size_t> partition_indices(Partition p) const;
};

struct AttributeFile {
  std::vector<std::string> names;
  std::map<std::string, AttributeVector> labels;
};

/// Attribute annotations: line 1 is the image count, line 2 the
/// whitespace-separated attribute names, then one "id v1 ... vA" row per
/// image with v in {-1, 1}.
AttributeFile parse_attributes(const std::string& text);
std::string emit_attributes(const AttributeFile& file);

/// Landmark rows "id x_le y_le x_re y_re x_n y_n x_lm y_lm x_rm y_rm";
/// a leading count line and/or column-name header are accepted.
std::map<std::string, Landmarks> parse_landmarks(const std::string& text);
std::string emit_landmarks(const std::map<std::string, Landmarks>& landmarks);

/// Detection rows "id x y w h confidence"; multiple rows per id allowed.
std::map<std::string, std::vector<Detection>> parse_detections(
    const std::string& text);
std::string emit_detections(
    const std::map<std::string, std::vector<Detection>>& detections);

/// Partition rows "id p" with p in {0 train, 1 validation, 2 test}.
std::map<std::string, Partition> parse_partitions(const std::string& text);
std::string emit_partitions(const std::map<std::string, Partition>& partitions);

double intersection_over_union(const Rect& a, const Rect& b);

/// Picks the detection with the largest overlap against a reference box.
/// Returns nullopt when the list is empty.
std::optional<Detection> select_detection(const std::vector<Detection>& candidates,
                                          const Rect& reference);

/// Scales the rectangle by `factor` about its center and squares it up to
/// the larger side; the result carries angle 0.
AlignedBox enlarge_detection(const Rect& rect, double factor);

/// Detector-failure path: scale the smaller side to out_size, then take
/// the centered out_size x out_size crop.
ImageF fallback_crop(const ImageF& img, int out_size = 224);

/// Box equivalent of fallback_crop: the centered square of side
/// min(width, height) in source coordinates, angle 0.
AlignedBox fallback_box(int width, int height);

struct DatasetPaths {
  std::string images_dir;
  std::string attributes_file;
  std::string landmarks_file;            // optional
  std::string detected_landmarks_file;   // optional
  std::string detections_file;           // optional
  std::string partitions_file;           // optional; default all-train
};

/// Assembles records from annotation files. Image paths are
/// images_dir/<id>; ids are expected to carry their file extension.
Dataset load_dataset(const DatasetPaths& paths);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace faceattr

#endif
