#pragma once

// Window tensor file: the container format with magic EXRECWIN. Header holds
// dims (N, window_len, feature_dim), layout, labels, per-window video ids and
// start frames; arrays are "data" ((N * window_len) x feature_dim, windows
// stacked) and "label_index" (N x 1).

#include <Eigen/Core>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "exrec/container.hpp"
#include "exrec/error.hpp"
#include "exrec/features.hpp"

namespace exrec {

inline constexpr std::string_view kWindowMagic = "EXRECWIN";
inline constexpr std::uint32_t kWindowFormatVersion = 1;

inline void write_windows(const std::vector<WindowSample>& windows, std::ostream& sink) {
  const Eigen::Index t = windows.empty() ? 0 : windows.front().matrix.rows();
  const Eigen::Index d = windows.empty() ? 0 : windows.front().matrix.cols();
  const Layout layout = windows.empty() ? Layout::Mixed78 : windows.front().layout;
  std::vector<ExerciseLabel> all;
  for (const auto& w : windows) {
    if (w.matrix.rows() != t || w.matrix.cols() != d || w.layout != layout) {
      throw Error(ErrorKind::ShapeMismatch, "windows differ in layout or shape");
    }
    all.push_back(w.label);
  }
  const LabelTable labels = all.empty() ? LabelTable() : encode_labels(all);

  container::NamedArray data{"data", Eigen::MatrixXd(static_cast<Eigen::Index>(windows.size()) * t, d)};
  container::NamedArray index{"label_index", Eigen::MatrixXd(static_cast<Eigen::Index>(windows.size()), 1)};
  nlohmann::json videos = nlohmann::json::array();
  nlohmann::json starts = nlohmann::json::array();
  for (std::size_t n = 0; n < windows.size(); ++n) {
    data.value.middleRows(static_cast<Eigen::Index>(n) * t, t) = windows[n].matrix;
    index.value(static_cast<Eigen::Index>(n), 0) = static_cast<double>(labels.index(windows[n].label));
    videos.push_back(windows[n].source_video);
    starts.push_back(windows[n].start_frame);
  }
  nlohmann::json header{{"count", windows.size()},      {"window_len", t},    {"feature_dim", d},
                        {"layout", to_string(layout)},  {"labels", labels.classes()},
                        {"videos", std::move(videos)},  {"start_frames", std::move(starts)}};
  container::write(sink, kWindowMagic, kWindowFormatVersion, std::move(header), {data, index});
}

inline std::vector<WindowSample> read_windows(std::istream& source) {
  constexpr auto corrupt = ErrorKind::InvalidField;
  const auto c = container::read(source, kWindowMagic, kWindowFormatVersion, corrupt);
  std::vector<WindowSample> out;
  try {
    const auto& h = c.header;
    const auto n = h.at("count").get<std::size_t>();
    const auto t = h.at("window_len").get<Eigen::Index>();
    const auto d = h.at("feature_dim").get<Eigen::Index>();
    const auto layout = parse_layout(h.at("layout").get<std::string>());
    const auto labels = h.at("labels").get<std::vector<std::string>>();
    const auto& videos = h.at("videos");
    const auto& starts = h.at("start_frames");
    const auto& data = c.array("data", corrupt);
    const auto& index = c.array("label_index", corrupt);
    if (data.rows() != static_cast<Eigen::Index>(n) * t || data.cols() != d || index.rows() != static_cast<Eigen::Index>(n) ||
        index.cols() != 1 || videos.size() != n || starts.size() != n) {
      throw Error(corrupt, "window file dimensions disagree");
    }
    if (n > 0 && d != static_cast<Eigen::Index>(feature_dim(layout))) throw Error(corrupt, "feature width differs from layout");
    for (std::size_t i = 0; i < n; ++i) {
      const double k = index(static_cast<Eigen::Index>(i), 0);
      if (!(k >= 0) || k >= static_cast<double>(labels.size()) || k != std::floor(k)) throw Error(corrupt, "bad label index");
      WindowSample w;
      w.matrix = data.middleRows(static_cast<Eigen::Index>(i) * t, t);
      w.label = labels[static_cast<std::size_t>(k)];
      w.source_video = videos[i].get<std::string>();
      w.start_frame = starts[i].get<std::size_t>();
      w.layout = layout;
      out.push_back(std::move(w));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(corrupt, std::string("window file header: ") + e.what());
  }
  return out;
}

inline void write_windows_file(const std::vector<WindowSample>& windows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::SinkFailure, "cannot open '" + path + "' for writing");
  write_windows(windows, out);
}

inline std::vector<WindowSample> read_windows_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::SourceFailure, "cannot open '" + path + "'");
  return read_windows(in);
}

}  // namespace exrec
