#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

#include "exrec/error.hpp"
#include "exrec/evaluator.hpp"
#include "exrec/features.hpp"

namespace exrec::eval {

enum class VoteMode : std::uint8_t { Majority, Soft };

inline std::string_view to_string(VoteMode m) { return m == VoteMode::Majority ? "majority" : "soft"; }

inline VoteMode parse_vote_mode(std::string_view text) {
  if (text == "majority") return VoteMode::Majority;
  if (text == "soft") return VoteMode::Soft;
  throw Error(ErrorKind::Usage, "unknown vote mode '" + std::string(text) + "'");
}

struct FrameVoter {
  VoteMode mode = VoteMode::Soft;
  std::size_t window_len = 30;
  std::size_t stride = 30;
};

inline constexpr FrameVoter kDnnVoter{VoteMode::Majority, 10, 1};
inline constexpr FrameVoter kCnnVoter{VoteMode::Soft, 30, 30};

/// One label per window of consecutive frames. `probabilities` is K x T,
/// one column per frame. Majority ties go to the lowest class index.
inline std::vector<std::size_t> vote(const Eigen::MatrixXd& probabilities, const FrameVoter& voter) {
  if (voter.window_len == 0 || voter.stride == 0) throw Error(ErrorKind::Usage, "window length and stride must be positive");
  const auto frames = static_cast<std::size_t>(probabilities.cols());
  if (frames < voter.window_len) {
    throw Error(ErrorKind::WindowTooShort,
                std::to_string(frames) + " frame(s), window needs " + std::to_string(voter.window_len));
  }
  const auto k = probabilities.rows();
  const std::size_t windows = window_count(frames, voter.window_len, voter.stride);
  std::vector<std::size_t> out;
  out.reserve(windows);

  std::vector<std::size_t> frame_label;
  if (voter.mode == VoteMode::Majority) frame_label = argmax_columns(probabilities);

  for (std::size_t w = 0; w < windows; ++w) {
    const auto begin = static_cast<Eigen::Index>(w * voter.stride);
    const auto len = static_cast<Eigen::Index>(voter.window_len);
    if (voter.mode == VoteMode::Soft) {
      // argmax of the sum equals argmax of the mean
      const Eigen::VectorXd total = probabilities.middleCols(begin, len).rowwise().sum();
      out.push_back(argmax(total));
    } else {
      Eigen::VectorXi tally = Eigen::VectorXi::Zero(k);
      for (Eigen::Index f = begin; f < begin + len; ++f) ++tally(static_cast<Eigen::Index>(frame_label[static_cast<std::size_t>(f)]));
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < k; ++c)
        if (tally(c) > tally(best)) best = c;
      out.push_back(static_cast<std::size_t>(best));
    }
  }
  return out;
}

}  // namespace exrec::eval
