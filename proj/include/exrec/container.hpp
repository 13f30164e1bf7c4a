#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "exrec/error.hpp"

namespace exrec::container {

// Layout:
//   8 bytes  magic
//   u32 LE   format version
//   u64 LE   header length
//   header   UTF-8 JSON; its "arrays" member lists {name, rows, cols}
//   payload  each array in listed order, row-major, f64 little-endian

struct NamedArray {
  std::string name;
  Eigen::MatrixXd value;
};

struct Contents {
  std::uint32_t version = 0;
  nlohmann::json header;
  std::vector<NamedArray> arrays;

  const Eigen::MatrixXd& array(std::string_view name, ErrorKind corrupt = ErrorKind::CorruptModelFile) const {
    for (const auto& a : arrays)
      if (a.name == name) return a.value;
    throw Error(corrupt, "missing array '" + std::string(name) + "'");
  }
};

namespace detail {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const unsigned char* bytes) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

inline void read_exact(std::istream& in, void* dst, std::size_t n, ErrorKind corrupt, std::string_view what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw Error(corrupt, "truncated " + std::string(what));
}

}  // namespace detail

inline void write(std::ostream& out, std::string_view magic, std::uint32_t version, nlohmann::json header,
                  const std::vector<NamedArray>& arrays) {
  if (magic.size() != 8) throw Error(ErrorKind::Internal, "container magic must be 8 bytes");
  auto& listing = header["arrays"] = nlohmann::json::array();
  for (const auto& a : arrays) listing.push_back({{"name", a.name}, {"rows", a.value.rows()}, {"cols", a.value.cols()}});
  const std::string text = header.dump();

  std::string bytes(magic);
  detail::put_le<std::uint32_t>(bytes, version);
  detail::put_le<std::uint64_t>(bytes, text.size());
  bytes += text;
  for (const auto& a : arrays) {
    for (Eigen::Index r = 0; r < a.value.rows(); ++r)
      for (Eigen::Index c = 0; c < a.value.cols(); ++c) detail::put_le(bytes, std::bit_cast<std::uint64_t>(a.value(r, c)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::SinkFailure, "container write failed");
}

/// Reads a container, rejecting wrong magic, unknown versions, truncation
/// and trailing bytes.
inline Contents read(std::istream& in, std::string_view magic, std::uint32_t supported_version,
                     ErrorKind corrupt = ErrorKind::CorruptModelFile) {
  std::array<char, 8> got{};
  detail::read_exact(in, got.data(), got.size(), corrupt, "magic");
  if (std::string_view(got.data(), got.size()) != magic) throw Error(corrupt, "bad magic");

  unsigned char word[8];
  detail::read_exact(in, word, 4, corrupt, "version");
  Contents contents;
  contents.version = detail::get_le<std::uint32_t>(word);
  if (contents.version != supported_version) {
    throw Error(ErrorKind::UnsupportedVersion, "format version " + std::to_string(contents.version) + ", supported " +
                                                   std::to_string(supported_version));
  }
  detail::read_exact(in, word, 8, corrupt, "header length");
  const auto header_len = detail::get_le<std::uint64_t>(word);
  if (header_len > (std::uint64_t{1} << 30)) throw Error(corrupt, "implausible header length");
  std::string text(header_len, '\0');
  detail::read_exact(in, text.data(), text.size(), corrupt, "header");
  try {
    contents.header = nlohmann::json::parse(text);
    for (const auto& entry : contents.header.at("arrays")) {
      NamedArray a;
      a.name = entry.at("name").get<std::string>();
      const auto rows = entry.at("rows").get<std::int64_t>();
      const auto cols = entry.at("cols").get<std::int64_t>();
      if (rows < 0 || cols < 0 || (cols > 0 && rows > std::numeric_limits<std::int32_t>::max() / cols)) {
        throw Error(corrupt, "bad shape for '" + a.name + "'");
      }
      a.value.resize(rows, cols);
      contents.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(corrupt, std::string("header: ") + e.what());
  }
  for (auto& a : contents.arrays) {
    const auto count = static_cast<std::size_t>(a.value.size());
    std::vector<unsigned char> raw(count * 8);
    detail::read_exact(in, raw.data(), raw.size(), corrupt, "array '" + a.name + "'");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < a.value.rows(); ++r)
      for (Eigen::Index c = 0; c < a.value.cols(); ++c, ++k)
        a.value(r, c) = std::bit_cast<double>(detail::get_le<std::uint64_t>(raw.data() + 8 * k));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(corrupt, "trailing bytes after payload");
  return contents;
}

}  // namespace exrec::container
