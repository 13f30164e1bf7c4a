#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "exrec/container.hpp"
#include "exrec/error.hpp"
#include "exrec/features.hpp"
#include "exrec/seqnet/network.hpp"

namespace exrec::seqnet {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::string_view kModelMagic = "EXRECMDL";

/// A trained sequence classifier with everything needed to run it on raw
/// feature windows: architecture, weights, scaler, label table and the
/// feature layout it was trained on.
struct SequenceModel {
  NetworkSpec spec;
  NetworkParams params;
  StandardScaler scaler;
  LabelTable labels;
  FeatureConfig feature_config;
  std::uint32_t format_version = kModelFormatVersion;

  /// Scales raw windows and returns class probabilities, K x N.
  Eigen::MatrixXd predict_proba(const std::vector<WindowSample>& windows, std::size_t chunk = 256) const {
    check_windows(windows);
    Eigen::MatrixXd out(labels.size(), static_cast<Eigen::Index>(windows.size()));
    for (std::size_t begin = 0; begin < windows.size(); begin += chunk) {
      const std::size_t end = std::min(windows.size(), begin + chunk);
      std::vector<Eigen::MatrixXd> scaled;
      scaled.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        scaled.push_back(windows[i].matrix);
        scaler.transform_in_place(scaled.back());
      }
      const auto batch = make_batch(scaled, [](const Eigen::MatrixXd& m) -> const Eigen::MatrixXd& { return m; });
      out.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
          forward(spec, params, batch, false, 0).probabilities;
    }
    return out;
  }

  void check_windows(const std::vector<WindowSample>& windows) const {
    for (const auto& w : windows) {
      if (w.layout != feature_config.layout || w.matrix.rows() != feature_config.window_len ||
          w.matrix.cols() != static_cast<Eigen::Index>(feature_config.dim())) {
        throw Error(ErrorKind::FeatureConfigMismatch,
                    "window is " + std::string(to_string(w.layout)) + " " + std::to_string(w.matrix.rows()) + "x" +
                        std::to_string(w.matrix.cols()) + ", model expects " +
                        std::string(to_string(feature_config.layout)) + " " + std::to_string(feature_config.window_len) +
                        "x" + std::to_string(feature_config.dim()));
      }
    }
  }
};

namespace detail {

inline nlohmann::json spec_to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : spec.layers) {
    if (const auto* l = std::get_if<LstmLayerSpec>(&layer)) {
      layers.push_back({{"type", "lstm"}, {"units", l->units}, {"return_sequences", l->return_sequences},
                        {"bidirectional", l->bidirectional}});
    } else if (const auto* d = std::get_if<DropoutSpec>(&layer)) {
      layers.push_back({{"type", "dropout"}, {"rate", d->rate}});
    } else {
      layers.push_back({{"type", "dense_softmax"}, {"classes", std::get<DenseSoftmaxSpec>(layer).classes}});
    }
  }
  return {{"window_len", spec.window_len}, {"feature_dim", spec.feature_dim}, {"layers", layers}};
}

inline NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.window_len = j.at("window_len").get<int>();
  spec.feature_dim = j.at("feature_dim").get<int>();
  for (const auto& l : j.at("layers")) {
    const auto type = l.at("type").get<std::string>();
    if (type == "lstm") {
      spec.layers.emplace_back(LstmLayerSpec{l.at("units").get<int>(), l.at("return_sequences").get<bool>(),
                                             l.at("bidirectional").get<bool>()});
    } else if (type == "dropout") {
      spec.layers.emplace_back(DropoutSpec{l.at("rate").get<double>()});
    } else if (type == "dense_softmax") {
      spec.layers.emplace_back(DenseSoftmaxSpec{l.at("classes").get<int>()});
    } else {
      throw Error(ErrorKind::CorruptModelFile, "unknown layer type '" + type + "'");
    }
  }
  return spec;
}

}  // namespace detail

inline void save_model(const SequenceModel& model, std::ostream& sink) {
  check_params(model.spec, model.params);
  nlohmann::json header;
  header["format_version"] = model.format_version;
  header["spec"] = detail::spec_to_json(model.spec);
  header["labels"] = model.labels.classes();
  header["feature_config"] = {{"layout", std::string(to_string(model.feature_config.layout))},
                              {"window_len", model.feature_config.window_len},
                              {"angle_unit", "degrees"}};

  std::vector<container::NamedArray> arrays;
  arrays.push_back({"scaler.mean", model.scaler.mean});
  arrays.push_back({"scaler.stddev", model.scaler.stddev});
  model.params.for_each_tensor(
      [&](const std::string& name, const auto& m) { arrays.push_back({name, Eigen::MatrixXd(m)}); });
  container::write(sink, kModelMagic, model.format_version, std::move(header), arrays);
}

inline SequenceModel load_model(std::istream& source) {
  const auto contents = container::read(source, kModelMagic, kModelFormatVersion);
  SequenceModel model;
  try {
    const auto& h = contents.header;
    if (h.at("format_version").get<std::uint32_t>() != kModelFormatVersion) {
      throw Error(ErrorKind::UnsupportedVersion, "header format_version differs");
    }
    model.spec = detail::spec_from_json(h.at("spec"));
    model.spec.validate();
    model.labels = LabelTable(h.at("labels").get<std::vector<std::string>>());
    model.feature_config.layout = parse_layout(h.at("feature_config").at("layout").get<std::string>());
    model.feature_config.window_len = h.at("feature_config").at("window_len").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::CorruptModelFile, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::UnsupportedVersion) throw;
    throw Error(ErrorKind::CorruptModelFile, e.what());
  }
  if (static_cast<int>(model.labels.size()) != model.spec.classes()) {
    throw Error(ErrorKind::CorruptModelFile, "label table size differs from softmax width");
  }
  model.scaler.mean = contents.array("scaler.mean");
  model.scaler.stddev = contents.array("scaler.stddev");
  if (model.scaler.mean.size() != model.spec.feature_dim || model.scaler.stddev.size() != model.spec.feature_dim) {
    throw Error(ErrorKind::CorruptModelFile, "scaler dimension differs from spec");
  }

  model.params = init_params(model.spec, 0);
  model.params.for_each_tensor([&](const std::string& name, auto& m) {
    const auto& stored = contents.array(name);
    if (stored.rows() != m.rows() || stored.cols() != m.cols()) {
      throw Error(ErrorKind::CorruptModelFile, "array '" + name + "' has the wrong shape");
    }
    m = stored;
  });
  return model;
}

inline void save_model_file(const SequenceModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::SinkFailure, "cannot open '" + path + "' for writing");
  save_model(model, out);
}

inline SequenceModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::SourceFailure, "cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace exrec::seqnet
