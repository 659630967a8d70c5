// Suggests the detection enlargement factor for a dataset: the median ratio
// between the landmark-derived box side (5.5 * eye-mouth distance) and the
// squared-up detection side, over records carrying both annotations.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "faceattr/data.hpp"
#include "faceattr/geometry.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: calibrate_enlargement <landmarks_file> <detections_file>\n";
    return 2;
  }
  try {
    auto landmarks = faceattr::parse_landmarks(faceattr::read_text_file(argv[1]));
    auto detections =
        faceattr::parse_detections(faceattr::read_text_file(argv[2]));

    std::vector<double> ratios;
    for (const auto& [id, lm] : landmarks) {
      auto it = detections.find(id);
      if (it == detections.end() || it->second.empty()) continue;
      faceattr::AlignedBox box = faceattr::aligned_box(lm);
      auto det = faceattr::select_detection(
          it->second,
          faceattr::Rect{box.x_l, box.y_t, box.width(), box.height()});
      double det_side = std::max(det->rect.w, det->rect.h);
      if (det_side > 0) ratios.push_back(box.width() / det_side);
    }
    if (ratios.empty()) {
      std::cerr << "no records with both landmarks and detections\n";
      return 1;
    }
    std::sort(ratios.begin(), ratios.end());
    double median = ratios[ratios.size() / 2];
    std::printf("records: %zu\n", ratios.size());
    std::printf("ratio landmark-box/detection-side: min %.3f median %.3f max %.3f\n",
                ratios.front(), median, ratios.back());
    std::printf("suggested enlargement_factor = %.2f\n", median);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
