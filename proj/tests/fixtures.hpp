#pragma once

// Shared synthetic data for the unit and acceptance suites.

#include <vector>

#include "exrec/features.hpp"
#include "exrec/synth.hpp"

namespace exrec::testing {

struct WindowSetOptions {
  std::size_t videos_per_exercise = 2;
  std::size_t frames_per_video = 60;
  Layout layout = Layout::Mixed78;
  std::size_t window_len = 30;
  std::size_t stride = 30;
  double noise = 0.003;
};

inline std::vector<WindowSample> synthetic_windows(const WindowSetOptions& opt, std::uint64_t seed) {
  synth::DatasetOptions d;
  d.videos_per_exercise = opt.videos_per_exercise;
  d.clip.frames = opt.frames_per_video;
  d.clip.noise = opt.noise;
  const auto frames = synth::make_dataset(d, seed);
  const auto table = featurize_all(frames, FeatureConfig{opt.layout, static_cast<int>(opt.window_len)});
  return window(table.frames, opt.window_len, opt.stride, opt.layout);
}

}  // namespace exrec::testing
