#include "faceattr/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <unordered_map>

#include "faceattr/image_io.hpp"
#include "faceattr/parallel.hpp"
#include "faceattr/rng.hpp"

namespace faceattr {

Vec2 FacePlacement::to_canvas(const Vec2& local) const {
  double rad = deg_to_rad(angle_deg);
  Eigen::Matrix2d rot;
  rot << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
  return center + scale * (rot * local);
}

Vec2 FacePlacement::to_local(const Vec2& canvas) const {
  double rad = deg_to_rad(-angle_deg);
  Eigen::Matrix2d rot;
  rot << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
  return rot * (canvas - center) / scale;
}

namespace {

// Canonical face, local units: eyes at (+-1, 0), mouth corners (+-0.6, 1.8),
// nose (0, 1). The head is an ellipse around (0, 0.5).
constexpr double kHeadCy = 0.5;
constexpr double kHeadB = 2.2;                // vertical semi-axis
constexpr double kHeadANormal = 1.7;          // horizontal semi-axis
constexpr double kHeadARound = 2.1;
constexpr double kMouthY = 1.8;
constexpr double kMouthHalfWidth = 0.6;

constexpr float kShadeBackground = 0.15f;
constexpr float kShadeSkin = 0.75f;
constexpr float kShadeDark = 0.1f;
constexpr float kShadeHairDark = 0.2f;
constexpr float kShadeHairLight = 0.55f;
constexpr float kShadeHat = 0.9f;
constexpr float kShadeMouthGap = 0.45f;
constexpr float kShadeNose = 0.6f;

enum SynthAttr {
  kGlasses = 0,
  kHat,
  kMustache,
  kMouthOpen,
  kRoundFace,
  kDarkHair,
  kEarrings,
  kThickBrows,
  kSynthAttrCount
};

bool attr_on(const AttributeVector& labels, int attr) {
  return attr < labels.size() && labels[attr] > 0;
}

bool in_disk(const Vec2& p, double cx, double cy, double r) {
  double dx = p.x() - cx, dy = p.y() - cy;
  return dx * dx + dy * dy <= r * r;
}

float face_shade(const Vec2& p, const AttributeVector& labels) {
  double head_a = attr_on(labels, kRoundFace) ? kHeadARound : kHeadANormal;
  double nx = p.x() / head_a;
  double ny = (p.y() - kHeadCy) / kHeadB;
  bool inside_head = nx * nx + ny * ny <= 1.0;

  float shade = kShadeBackground;
  if (inside_head) {
    shade = kShadeSkin;
    if (p.y() <= -0.7)  // hair zone
      shade = attr_on(labels, kDarkHair) ? kShadeHairDark : kShadeHairLight;
  }
  if (attr_on(labels, kHat) && std::abs(p.x()) <= 1.7 && p.y() >= -2.6 &&
      p.y() <= -1.5)
    shade = kShadeHat;
  {
    double band_top = attr_on(labels, kThickBrows) ? -0.64 : -0.44;
    double band_bot = attr_on(labels, kThickBrows) ? -0.34 : -0.36;
    if (p.y() >= band_top && p.y() <= band_bot &&
        (std::abs(p.x() - 1.0) <= 0.4 || std::abs(p.x() + 1.0) <= 0.4))
      shade = kShadeDark;
  }
  if (in_disk(p, -1.0, 0.0, 0.25) || in_disk(p, 1.0, 0.0, 0.25))
    shade = kShadeDark;
  if (attr_on(labels, kGlasses) && std::abs(p.x()) <= 1.45 &&
      std::abs(p.y()) <= 0.12)
    shade = kShadeDark;
  if (in_disk(p, 0.0, 1.0, 0.12)) shade = kShadeNose;
  if (attr_on(labels, kMustache) && std::abs(p.x()) <= 0.55 && p.y() >= 1.35 &&
      p.y() <= 1.55)
    shade = kShadeDark;
  if (std::abs(p.x()) <= kMouthHalfWidth) {
    if (attr_on(labels, kMouthOpen)) {
      if ((p.y() >= 1.55 && p.y() <= 1.67) || (p.y() >= 1.93 && p.y() <= 2.05))
        shade = kShadeDark;
      else if (p.y() > 1.67 && p.y() < 1.93)
        shade = kShadeMouthGap;
    } else if (p.y() >= 1.68 && p.y() <= 1.92) {
      shade = kShadeDark;
    }
  }
  if (attr_on(labels, kEarrings) &&
      (in_disk(p, 1.48, 1.0, 0.12) || in_disk(p, -1.48, 1.0, 0.12)))
    shade = kShadeDark;
  return shade;
}

struct Probe {
  Vec2 local;
  // Labels the attribute as on when the sampled shade is inside
  // (lo, hi); all probe points sit >= 0.1 local units away from any
  // shade boundary.
  float lo, hi;
};

Probe attribute_probe(int attr) {
  switch (attr) {
    case kGlasses:    return {{0.0, 0.0}, -1.0f, 0.3f};
    case kHat:        return {{0.0, -2.05}, 0.8f, 2.0f};
    case kMustache:   return {{0.0, 1.45}, -1.0f, 0.3f};
    case kMouthOpen:  return {{0.0, kMouthY}, 0.3f, 0.6f};
    case kRoundFace:  return {{1.9, 0.5}, 0.6f, 2.0f};
    case kDarkHair:   return {{0.0, -1.2}, -1.0f, 0.35f};
    case kEarrings:   return {{1.48, 1.0}, -1.0f, 0.3f};
    case kThickBrows: return {{1.0, -0.54}, -1.0f, 0.3f};
    default: throw ConfigError("no such synthetic attribute");
  }
}

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.png", index + 1);
  return buf;
}

}  // namespace

std::vector<std::string> synth_attribute_names(int count) {
  static const std::vector<std::string> kNames = {
      "Glasses", "Hat", "Mustache", "Mouth_Open", "Round_Face",
      "Dark_Hair", "Earrings", "Thick_Brows"};
  if (count < 1 || count > kSynthAttrCount)
    throw ConfigError("synthetic attribute count must be in [1, 8]");
  return {kNames.begin(), kNames.begin() + count};
}

std::vector<SynthSample> synth_generate(const SynthConfig& cfg, int count,
                                        int workers) {
  synth_attribute_names(cfg.attribute_count);  // validates the count
  if (count < 1) throw ConfigError("synth_generate: count must be positive");
  std::vector<SynthSample> samples(static_cast<std::size_t>(count));

  parallel_for(static_cast<std::size_t>(count), workers, [&](std::size_t i) {
    SeededRng rng(SeededRng::derive(cfg.seed, 0xFACEull, i));
    SynthSample& s = samples[i];

    s.placement.angle_deg = rng.uniform(-cfg.rot_range, cfg.rot_range);
    s.placement.scale = rng.uniform(cfg.scale_min, cfg.scale_max);
    double half = cfg.canvas / 2.0;
    s.placement.center = {half + rng.uniform(-cfg.shift_range, cfg.shift_range),
                          half + rng.uniform(-cfg.shift_range, cfg.shift_range)};

    s.labels.resize(cfg.attribute_count);
    for (int a = 0; a < cfg.attribute_count; ++a)
      s.labels[a] = rng.bernoulli(0.5) ? 1 : -1;

    s.image = ImageF(cfg.canvas, cfg.canvas, 1);
    for (int y = 0; y < cfg.canvas; ++y)
      for (int x = 0; x < cfg.canvas; ++x)
        s.image.at(x, y) = face_shade(
            s.placement.to_local(Vec2(x, y)), s.labels);

    s.landmarks.eye_left = s.placement.to_canvas({-1.0, 0.0});
    s.landmarks.eye_right = s.placement.to_canvas({1.0, 0.0});
    s.landmarks.mouth_left = s.placement.to_canvas({-kMouthHalfWidth, kMouthY});
    s.landmarks.mouth_right = s.placement.to_canvas({kMouthHalfWidth, kMouthY});
    s.landmarks.nose = s.placement.to_canvas({0.0, 1.0});

    // Axis-aligned bounding box of the rotated head ellipse, squared up,
    // loosened by det_size_factor and jittered: a stand-in face detector.
    double head_a =
        s.labels.size() > kRoundFace && s.labels[kRoundFace] > 0 ? kHeadARound
                                                                 : kHeadANormal;
    double rad = deg_to_rad(s.placement.angle_deg);
    double cosr = std::cos(rad), sinr = std::sin(rad);
    double hx = s.placement.scale *
                std::sqrt(head_a * cosr * head_a * cosr + kHeadB * sinr * kHeadB * sinr);
    double hy = s.placement.scale *
                std::sqrt(head_a * sinr * head_a * sinr + kHeadB * cosr * kHeadB * cosr);
    Vec2 head_center = s.placement.to_canvas({0.0, kHeadCy});
    double side = 2.0 * std::max(hx, hy) * cfg.det_size_factor;
    side *= std::max(rng.normal(1.0, cfg.det_size_noise), 0.5);
    double cx = head_center.x() + rng.normal(0.0, cfg.det_center_noise * side);
    double cy = head_center.y() + rng.normal(0.0, cfg.det_center_noise * side);
    s.detection = {cx - side / 2.0, cy - side / 2.0, side, side};
    s.detection_confidence = rng.uniform(0.7, 1.0);

    double d = 1.8 * s.placement.scale;  // exact eye-mouth distance
    auto jitter = [&](const Vec2& p) {
      return Vec2(p.x() + rng.normal(0.0, cfg.landmark_noise * d),
                  p.y() + rng.normal(0.0, cfg.landmark_noise * d));
    };
    s.noisy_landmarks.eye_left = jitter(s.landmarks.eye_left);
    s.noisy_landmarks.eye_right = jitter(s.landmarks.eye_right);
    s.noisy_landmarks.mouth_left = jitter(s.landmarks.mouth_left);
    s.noisy_landmarks.mouth_right = jitter(s.landmarks.mouth_right);
    s.noisy_landmarks.nose = jitter(*s.landmarks.nose);
  });
  return samples;
}

AttributeVector synth_oracle_labels(const ImageF& image,
                                    const FacePlacement& placement, int count) {
  synth_attribute_names(count);
  AttributeVector labels(count);
  for (int a = 0; a < count; ++a) {
    Probe probe = attribute_probe(a);
    Vec2 canvas = placement.to_canvas(probe.local);
    int px = static_cast<int>(std::lround(canvas.x()));
    int py = static_cast<int>(std::lround(canvas.y()));
    if (px < 0 || py < 0 || px >= image.width() || py >= image.height())
      throw Error("synth oracle probe outside the canvas");
    float shade = image.at(px, py);
    labels[a] = (shade > probe.lo && shade < probe.hi) ? 1 : -1;
  }
  return labels;
}

bool synth_box_contains_head(const AlignedBox& box,
                             const FacePlacement& placement) {
  double rad = deg_to_rad(-box.alpha);
  Eigen::Matrix2d rot;
  rot << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
  Vec2 center = box.center();
  double half_w = box.width() / 2.0, half_h = box.height() / 2.0;
  for (int k = 0; k < 64; ++k) {
    double phi = 2.0 * std::numbers::pi * k / 64.0;
    // Round head bound; covers both face widths.
    Vec2 local(kHeadARound * std::cos(phi), kHeadCy + kHeadB * std::sin(phi));
    Vec2 r = rot * (placement.to_canvas(local) - center);
    if (std::abs(r.x()) > half_w || std::abs(r.y()) > half_h) return false;
  }
  return true;
}

namespace {

Dataset assemble_dataset(const std::vector<SynthSample>& samples,
                         const SynthConfig& cfg, const std::string& images_dir,
                         int train_count, int val_count) {
  Dataset ds;
  ds.attribute_names = synth_attribute_names(cfg.attribute_count);
  ds.records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    DatasetRecord rec;
    rec.id = sample_id(i);
    rec.image_path = images_dir.empty()
                         ? rec.id
                         : (std::filesystem::path(images_dir) / rec.id).string();
    rec.landmarks = samples[i].landmarks;
    rec.detected_landmarks = samples[i].noisy_landmarks;
    rec.detection = samples[i].detection;
    rec.attributes = samples[i].labels;
    rec.partition = i < static_cast<std::size_t>(train_count)
                        ? Partition::kTrain
                        : (i < static_cast<std::size_t>(train_count + val_count)
                               ? Partition::kValidation
                               : Partition::kTest);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace

Dataset write_synth_dataset(const std::vector<SynthSample>& samples,
                            const SynthConfig& cfg, const std::string& dir,
                            int train_count, int val_count) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");
  std::string images_dir = (fs::path(dir) / "images").string();

  AttributeFile attrs;
  attrs.names = synth_attribute_names(cfg.attribute_count);
  std::map<std::string, Landmarks> landmarks, noisy;
  std::map<std::string, std::vector<Detection>> detections;
  std::map<std::string, Partition> partitions;

  Dataset ds = assemble_dataset(samples, cfg, images_dir, train_count, val_count);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string& id = ds.records[i].id;
    write_image(samples[i].image,
                (fs::path(images_dir) / id).string());
    attrs.labels[id] = samples[i].labels;
    landmarks[id] = samples[i].landmarks;
    noisy[id] = samples[i].noisy_landmarks;
    detections[id] = {{samples[i].detection, samples[i].detection_confidence}};
    partitions[id] = ds.records[i].partition;
  }
  write_text_file((fs::path(dir) / "attributes.txt").string(),
                  emit_attributes(attrs));
  write_text_file((fs::path(dir) / "landmarks.txt").string(),
                  emit_landmarks(landmarks));
  write_text_file((fs::path(dir) / "landmarks_detected.txt").string(),
                  emit_landmarks(noisy));
  write_text_file((fs::path(dir) / "detections.txt").string(),
                  emit_detections(detections));
  write_text_file((fs::path(dir) / "partitions.txt").string(),
                  emit_partitions(partitions));
  return ds;
}

std::pair<Dataset, ImageLoader> synth_in_memory_dataset(
    std::vector<SynthSample> samples, const SynthConfig& cfg, int train_count,
    int val_count) {
  Dataset ds = assemble_dataset(samples, cfg, "", train_count, val_count);
  auto images = std::make_shared<std::unordered_map<std::string, ImageF>>();
  for (std::size_t i = 0; i < samples.size(); ++i)
    (*images)[ds.records[i].id] = std::move(samples[i].image);
  ImageLoader loader = [images](const DatasetRecord& rec) -> std::optional<ImageF> {
    auto it = images->find(rec.id);
    if (it == images->end()) return std::nullopt;
    return it->second;
  };
  return {std::move(ds), std::move(loader)};
}

}  // namespace faceattr
