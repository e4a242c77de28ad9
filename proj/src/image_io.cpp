#include "framecache/image_io.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace framecache {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : b_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_uint(const char* what) {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) {
      throw std::runtime_error(std::string("pnm: bad or missing ") + what);
    }
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > (1L << 24)) {
        throw std::runtime_error(std::string("pnm: ") + what + " too large");
      }
    }
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void end_header() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
      throw std::runtime_error("pnm: malformed header");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

Frame load_frame_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' ||
      (bytes[1] != '5' && bytes[1] != '6')) {
    throw std::runtime_error("pnm: unsupported magic (expected P5 or P6)");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader hr(bytes.subspan(2));
  const int width = hr.read_uint("width");
  const int height = hr.read_uint("height");
  const int maxval = hr.read_uint("maxval");
  if (maxval != 255) {
    throw std::runtime_error("pnm: unsupported maxval " +
                             std::to_string(maxval));
  }
  if (width < 1 || height < 1) throw std::runtime_error("pnm: empty image");
  hr.end_header();

  const std::size_t offset = 2 + hr.pos();
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - offset < need) {
    throw std::runtime_error("pnm: truncated pixel data (need " +
                             std::to_string(need) + " bytes, have " +
                             std::to_string(bytes.size() - offset) + ")");
  }
  const std::uint8_t* px = bytes.data() + offset;
  Frame frame(channels, height, width);
  const std::size_t plane = frame.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < channels; ++c) {
      frame.storage()[c * plane + i] = px[i * channels + c];
    }
  }
  return frame;
}

std::vector<std::uint8_t> encode_pnm(const Frame& frame) {
  if (frame.channels() != 1 && frame.channels() != 3) {
    throw std::invalid_argument("pnm: only 1 or 3 channels can be encoded");
  }
  const std::string header = std::string(frame.channels() == 1 ? "P5" : "P6") +
                             "\n" + std::to_string(frame.width()) + " " +
                             std::to_string(frame.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::size_t plane = frame.plane_size();
  out.reserve(out.size() + frame.size());
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < frame.channels(); ++c) {
      out.push_back(frame.storage()[c * plane + i]);
    }
  }
  return out;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Frame read_frame_file(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  try {
    return load_frame_pnm(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_frame_file(const std::filesystem::path& path, const Frame& frame) {
  write_binary_file(path, encode_pnm(frame));
}

FeatureMap preprocess(const Frame& frame, std::span<const float> mean,
                      float scale) {
  if (mean.size() != 1 && mean.size() != static_cast<std::size_t>(frame.channels())) {
    throw std::invalid_argument("preprocess: expected 1 or " +
                                std::to_string(frame.channels()) +
                                " mean values, got " +
                                std::to_string(mean.size()));
  }
  FeatureMap out(frame.channels(), frame.height(), frame.width());
  for (int c = 0; c < frame.channels(); ++c) {
    const float m = mean.size() == 1 ? mean[0] : mean[c];
    auto src = frame.plane(c);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = (static_cast<float>(src[i]) - m) * scale;
    }
  }
  return out;
}

}  // namespace framecache
