#pragma once

#include <numbers>
#include <vector>

#include "egofuture/database.hpp"
#include "egofuture/synthworld.hpp"

namespace egofuture::testing {

inline constexpr int kF = 30;
inline constexpr double kDt = 0.5;
inline constexpr double kDeg = std::numbers::pi / 180.0;

inline World box_world() {
  World w;
  w.bounds = {-30, 30, -30, 60};
  w.boxes.push_back(Box{{1.0, 0, 8}, {2.5, 1.2, 9.5}});
  w.boxes.push_back(Box{{-3.0, 0, 14}, {-1.5, 2.0, 15}});
  return w;
}

inline Sequence straight_walk(std::uint32_t scene, int frames, double speed, double pitch_deg, double x0 = 0.0) {
  const World w = box_world();
  Sequence s;
  s.scene_id = scene;
  for (int f = 0; f < frames; ++f) {
    const CameraPose pose = make_camera_pose({x0, -20.0 + speed * kDt * f}, 0.0, pitch_deg * kDeg, 1.6);
    s.poses.push_back(pose);
    s.depths.push_back(render_depth(w, pose, CameraIntrinsics{}));
  }
  return s;
}

inline std::vector<FrameSample> corpus_samples() {
  std::vector<FrameSample> out;
  for (int i = 0; i < 9; ++i) {
    const auto seq = straight_walk(static_cast<std::uint32_t>(i), kF + 6, 0.8 + 0.1 * i, 22.0 + 3.0 * i, 0.3 * i);
    auto s = extract_samples(seq, GridSpec{}, kF, kDt);
    // Curved variants keep the basis full rank.
    for (auto& sample : s) {
      for (int j = 0; j < kF; ++j) sample.future.points[j].x() += 0.01 * (i - 4) * j * j / kF;
    }
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

}  // namespace egofuture::testing
