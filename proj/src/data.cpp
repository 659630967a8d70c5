#include "faceattr/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "faceattr/raster.hpp"

namespace faceattr {
namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_long(const std::string& s, long& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Iterates non-empty lines with 1-based line numbers.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(line, line_no);
  }
}

}  // namespace

std::vector<std::size_t> Dataset::partition_indices(Partition p) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].partition == p) out.push_back(i);
  return out;
}

AttributeFile parse_attributes(const std::string& text) {
  AttributeFile file;
  long declared_count = -1;
  long rows = 0;
  for_each_line(text, [&](const std::string& line, long line_no) {
    auto tokens = tokenize(line);
    if (declared_count < 0) {
      if (tokens.size() != 1 || !parse_long(tokens[0], declared_count) ||
          declared_count < 0)
        throw ParseError("expected image count", line_no);
      return;
    }
    if (file.names.empty()) {
      file.names = tokens;
      if (file.names.empty()) throw ParseError("empty attribute header", line_no);
      return;
    }
    if (tokens.size() != file.names.size() + 1)
      throw ParseError("expected id plus " + std::to_string(file.names.size()) +
                           " values",
                       line_no);
    AttributeVector labels(static_cast<Eigen::Index>(file.names.size()));
    for (std::size_t j = 0; j < file.names.size(); ++j) {
      long v;
      if (!parse_long(tokens[j + 1], v) || (v != 1 && v != -1))
        throw ParseError("attribute value must be -1 or 1, got '" +
                             tokens[j + 1] + "'",
                         line_no);
      labels[static_cast<Eigen::Index>(j)] = static_cast<int>(v);
    }
    if (!file.labels.emplace(tokens[0], std::move(labels)).second)
      throw ParseError("duplicate image id '" + tokens[0] + "'", line_no);
    ++rows;
  });
  if (declared_count < 0) throw ParseError("missing count header", 1);
  if (rows != declared_count)
    throw ParseError("count header says " + std::to_string(declared_count) +
                         " images but found " + std::to_string(rows),
                     rows + 2);
  return file;
}

std::string emit_attributes(const AttributeFile& file) {
  std::ostringstream out;
  out << file.labels.size() << "\n";
  for (std::size_t j = 0; j < file.names.size(); ++j)
    out << (j ? " " : "") << file.names[j];
  out << "\n";
  for (const auto& [id, labels] : file.labels) {
    out << id;
    for (Eigen::Index j = 0; j < labels.size(); ++j) out << " " << labels[j];
    out << "\n";
  }
  return out.str();
}

std::map<std::string, Landmarks> parse_landmarks(const std::string& text) {
  std::map<std::string, Landmarks> out;
  bool saw_data = false;
  for_each_line(text, [&](const std::string& line, long line_no) {
    auto tokens = tokenize(line);
    if (!saw_data && line_no <= 2) {
      // Optional headers: a bare count line or a column-name line.
      long n;
      if (tokens.size() == 1 && parse_long(tokens[0], n)) return;
      if (tokens.size() > 1) {
        double probe;
        if (!parse_double(tokens[1], probe)) return;  // column names
      }
    }
    if (tokens.size() != 11)
      throw ParseError("expected id plus 10 coordinates, got " +
                           std::to_string(tokens.size()) + " fields",
                       line_no);
    double v[10];
    for (int j = 0; j < 10; ++j)
      if (!parse_double(tokens[j + 1], v[j]))
        throw ParseError("bad coordinate '" + tokens[j + 1] + "'", line_no);
    Landmarks lm;
    lm.eye_left = {v[0], v[1]};
    lm.eye_right = {v[2], v[3]};
    lm.nose = Vec2(v[4], v[5]);
    lm.mouth_left = {v[6], v[7]};
    lm.mouth_right = {v[8], v[9]};
    if (!out.emplace(tokens[0], lm).second)
      throw ParseError("duplicate image id '" + tokens[0] + "'", line_no);
    saw_data = true;
  });
  return out;
}

std::string emit_landmarks(const std::map<std::string, Landmarks>& landmarks) {
  std::ostringstream out;
  for (const auto& [id, lm] : landmarks) {
    Vec2 nose = lm.nose.value_or(Vec2::Zero());
    out << id;
    for (double v : {lm.eye_left.x(), lm.eye_left.y(), lm.eye_right.x(),
                     lm.eye_right.y(), nose.x(), nose.y(), lm.mouth_left.x(),
                     lm.mouth_left.y(), lm.mouth_right.x(), lm.mouth_right.y()})
      out << " " << format_coord(v);
    out << "\n";
  }
  return out.str();
}

std::map<std::string, std::vector<Detection>> parse_detections(
    const std::string& text) {
  std::map<std::string, std::vector<Detection>> out;
  for_each_line(text, [&](const std::string& line, long line_no) {
    auto tokens = tokenize(line);
    if (tokens.size() != 6)
      throw ParseError("expected 'id x y w h confidence'", line_no);
    double v[5];
    for (int j = 0; j < 5; ++j)
      if (!parse_double(tokens[j + 1], v[j]))
        throw ParseError("bad value '" + tokens[j + 1] + "'", line_no);
    if (v[2] < 0 || v[3] < 0)
      throw ParseError("negative detection size", line_no);
    Detection det;
    det.rect = {v[0], v[1], v[2], v[3]};
    det.confidence = v[4];
    out[tokens[0]].push_back(det);
  });
  return out;
}

std::string emit_detections(
    const std::map<std::string, std::vector<Detection>>& detections) {
  std::ostringstream out;
  for (const auto& [id, dets] : detections)
    for (const Detection& d : dets) {
      out << id;
      for (double v : {d.rect.x, d.rect.y, d.rect.w, d.rect.h, d.confidence})
        out << " " << format_coord(v);
      out << "\n";
    }
  return out.str();
}

std::map<std::string, Partition> parse_partitions(const std::string& text) {
  std::map<std::string, Partition> out;
  for_each_line(text, [&](const std::string& line, long line_no) {
    auto tokens = tokenize(line);
    long p;
    if (tokens.size() != 2 || !parse_long(tokens[1], p) || p < 0 || p > 2)
      throw ParseError("expected 'id p' with p in {0,1,2}", line_no);
    if (!out.emplace(tokens[0], static_cast<Partition>(p)).second)
      throw ParseError("duplicate image id '" + tokens[0] + "'", line_no);
  });
  return out;
}

std::string emit_partitions(const std::map<std::string, Partition>& partitions) {
  std::ostringstream out;
  for (const auto& [id, p] : partitions)
    out << id << " " << static_cast<int>(p) << "\n";
  return out.str();
}

double intersection_over_union(const Rect& a, const Rect& b) {
  double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  double inter = ix * iy;
  double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::optional<Detection> select_detection(const std::vector<Detection>& candidates,
                                          const Rect& reference) {
  if (candidates.empty()) return std::nullopt;
  const Detection* best = &candidates.front();
  double best_iou = intersection_over_union(best->rect, reference);
  for (const Detection& d : candidates) {
    double iou = intersection_over_union(d.rect, reference);
    if (iou > best_iou) {
      best = &d;
      best_iou = iou;
    }
  }
  return *best;
}

AlignedBox enlarge_detection(const Rect& rect, double factor) {
  double size = factor * std::max(rect.w, rect.h);
  double cx = rect.x + rect.w / 2.0;
  double cy = rect.y + rect.h / 2.0;
  AlignedBox box;
  box.x_l = cx - size / 2.0;
  box.x_r = cx + size / 2.0;
  box.y_t = cy - size / 2.0;
  box.y_b = cy + size / 2.0;
  box.alpha = 0;
  return box;
}

ImageF fallback_crop(const ImageF& img, int out_size) {
  if (img.empty()) throw IoError("fallback_crop: empty image");
  int new_w, new_h;
  if (img.width() <= img.height()) {
    new_w = out_size;
    new_h = static_cast<int>(std::lround(
        static_cast<double>(img.height()) * out_size / img.width()));
  } else {
    new_h = out_size;
    new_w = static_cast<int>(std::lround(
        static_cast<double>(img.width()) * out_size / img.height()));
  }
  ImageF scaled = rescale(img, new_w, new_h);
  return crop(scaled, (new_w - out_size) / 2, (new_h - out_size) / 2, out_size,
              out_size);
}

AlignedBox fallback_box(int width, int height) {
  double side = std::min(width, height);
  AlignedBox box;
  box.x_l = (width - side) / 2.0;
  box.x_r = box.x_l + side;
  box.y_t = (height - side) / 2.0;
  box.y_b = box.y_t + side;
  box.alpha = 0;
  return box;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("short write to " + path);
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset ds;
  AttributeFile attrs = parse_attributes(read_text_file(paths.attributes_file));
  ds.attribute_names = attrs.names;

  std::map<std::string, Landmarks> landmarks;
  if (!paths.landmarks_file.empty())
    landmarks = parse_landmarks(read_text_file(paths.landmarks_file));
  std::map<std::string, Landmarks> detected_landmarks;
  if (!paths.detected_landmarks_file.empty())
    detected_landmarks =
        parse_landmarks(read_text_file(paths.detected_landmarks_file));
  std::map<std::string, std::vector<Detection>> detections;
  if (!paths.detections_file.empty())
    detections = parse_detections(read_text_file(paths.detections_file));
  std::map<std::string, Partition> partitions;
  if (!paths.partitions_file.empty())
    partitions = parse_partitions(read_text_file(paths.partitions_file));

  ds.records.reserve(attrs.labels.size());
  for (const auto& [id, labels] : attrs.labels) {
    DatasetRecord rec;
    rec.id = id;
    rec.image_path =
        (std::filesystem::path(paths.images_dir) / id).string();
    rec.attributes = labels;
    if (auto it = landmarks.find(id); it != landmarks.end())
      rec.landmarks = it->second;
    if (auto it = detected_landmarks.find(id); it != detected_landmarks.end())
      rec.detected_landmarks = it->second;
    if (auto it = detections.find(id); it != detections.end()) {
      // Pick against the landmark-derived box when available, otherwise
      // keep the most confident detection.
      std::optional<Detection> chosen;
      if (rec.landmarks) {
        AlignedBox ref = aligned_box(*rec.landmarks);
        chosen = select_detection(
            it->second, Rect{ref.x_l, ref.y_t, ref.width(), ref.height()});
      } else {
        chosen = *std::max_element(it->second.begin(), it->second.end(),
                                   [](const Detection& a, const Detection& b) {
                                     return a.confidence < b.confidence;
                                   });
      }
      if (chosen) rec.detection = chosen->rect;
    }
    if (auto it = partitions.find(id); it != partitions.end())
      rec.partition = it->second;
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace faceattr
