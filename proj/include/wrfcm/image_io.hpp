#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "wrfcm/core.hpp"

namespace wrfcm {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void io_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

inline ImageTensor load_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) io_fail(path, "cannot open file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_fail(path, "libpng init failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_fail(path, "not a valid PNG file");
  }

  png_init_io(png, file.get());
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth > 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_fail(path, "unsupported bit depth: " + std::to_string(bit_depth) +
                      " (only 8-bit images are supported)");
  }
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_fail(path, "unsupported channel count: " + std::to_string(channels));
  }

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * height);
  row_ptrs.resize(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = pixels.data() + y * row_bytes;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageTensor image(width, height, channels);
  for (int y = 0; y < height; ++y) {
    const png_byte* row = pixels.data() + static_cast<std::size_t>(y) * row_bytes;
    for (int x = 0; x < width; ++x) {
      for (int l = 0; l < channels; ++l) {
        image.at(y * width + x, l) = static_cast<double>(row[x * channels + l]);
      }
    }
  }
  return image;
}

inline void save_png(const ImageTensor& image, const std::string& path) {
  image.validate();
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) io_fail(path, "cannot open file for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    io_fail(path, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    io_fail(path, "PNG write failed");
  }

  png_init_io(png, file.get());
  const int color_type =
      image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, image.width, image.height, 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int l = 0; l < image.channels; ++l) {
        const double v = std::clamp(image.at(y * image.width + x, l), 0.0, 255.0);
        row[static_cast<std::size_t>(x) * image.channels + l] =
            static_cast<png_byte>(std::lround(v));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline ImageTensor load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open file");
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") io_fail(path, "not a PGM file");

  auto next_value = [&](long& out) {
    // skip whitespace and # comments
    for (;;) {
      const int ch = in.peek();
      if (ch == '#') {
        std::string line;
        std::getline(in, line);
      } else if (ch != EOF && std::isspace(static_cast<unsigned char>(ch))) {
        in.get();
      } else {
        break;
      }
    }
    if (!(in >> out)) io_fail(path, "truncated PGM header");
  };

  long width = 0, height = 0, maxval = 0;
  next_value(width);
  next_value(height);
  next_value(maxval);
  if (width < 1 || height < 1) io_fail(path, "invalid PGM dimensions");
  if (maxval > 255) {
    io_fail(path, "unsupported bit depth: maxval " + std::to_string(maxval));
  }
  if (maxval < 1) io_fail(path, "invalid PGM maxval");

  ImageTensor image(static_cast<int>(width), static_cast<int>(height), 1);
  const long count = width * height;
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(count);
    in.read(reinterpret_cast<char*>(bytes.data()), count);
    if (in.gcount() != count) io_fail(path, "truncated PGM data");
    for (long j = 0; j < count; ++j) image.data[j] = bytes[j];
  } else {
    for (long j = 0; j < count; ++j) {
      long v;
      if (!(in >> v)) io_fail(path, "truncated PGM data");
      image.data[j] = static_cast<double>(v);
    }
  }
  return image;
}

inline void save_pgm(const ImageTensor& image, const std::string& path) {
  image.validate();
  if (image.channels != 1) {
    io_fail(path, "PGM supports grayscale only; use PNG for color");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open file for writing");
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  for (double v : image.data) {
    out.put(static_cast<char>(
        static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)))));
  }
  if (!out) io_fail(path, "write failed");
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

/// Load an 8-bit grayscale PGM or 8-bit gray/RGB PNG; the format is detected
/// from the file's magic bytes. Intensities are mapped to doubles in [0, 255].
inline ImageTensor load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) detail::io_fail(path, "cannot open file");
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 0x89 && magic[1] == 'P') return detail::load_png(path);
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) {
    return detail::load_pgm(path);
  }
  detail::io_fail(path, "unsupported image format (expected 8-bit PNG or PGM)");
}

/// Save as PNG or PGM depending on the extension. Intensities are clamped to
/// [0, 255] and rounded to 8 bits; integer-valued in-range data round-trips
/// losslessly.
inline void save_image(const ImageTensor& image, const std::string& path) {
  if (detail::has_suffix(path, ".png")) {
    detail::save_png(image, path);
  } else if (detail::has_suffix(path, ".pgm")) {
    detail::save_pgm(image, path);
  } else {
    detail::io_fail(path, "unsupported output extension (use .png or .pgm)");
  }
}

/// Gray level used to visualize label i out of c; levels are spread over
/// the full 8-bit range so label PNGs round-trip exactly.
inline int label_to_gray(int label, int clusters) {
  if (clusters <= 1) return 0;
  return static_cast<int>(std::lround(255.0 * (label - 1) / (clusters - 1)));
}

inline int gray_to_label(double gray, int clusters) {
  if (clusters <= 1) return 1;
  int best = 1;
  double best_err = std::abs(gray - label_to_gray(1, clusters));
  for (int i = 2; i <= clusters; ++i) {
    const double err = std::abs(gray - label_to_gray(i, clusters));
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  return best;
}

inline ImageTensor label_map_to_image(const LabelMap& labels, int clusters) {
  labels.validate(clusters);
  ImageTensor out(labels.width, labels.height, 1);
  for (int j = 0; j < labels.pixels(); ++j) {
    out.data[j] = static_cast<double>(label_to_gray(labels.labels[j], clusters));
  }
  return out;
}

inline LabelMap image_to_label_map(const ImageTensor& image, int clusters) {
  if (image.channels != 1) {
    throw std::invalid_argument("image_to_label_map: label images must be grayscale");
  }
  LabelMap labels(image.width, image.height);
  for (int j = 0; j < image.pixels(); ++j) {
    labels.labels[j] = gray_to_label(image.data[j], clusters);
  }
  return labels;
}

}  // namespace wrfcm
