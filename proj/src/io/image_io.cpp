#include "gazeforge/io/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "gazeforge/error.hpp"

namespace gazeforge::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) {
    throw Error(ErrorCode::io, std::string("cannot ") + (mode[0] == 'r' ? "read " : "write ") + path.string(),
                {path.string()});
  }
  return f;
}

}  // namespace

LabelGrid read_gray_png(const std::filesystem::path& path) {
  FilePtr file = open(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::io, "not a PNG file: " + path.string(), {path.string()});
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::io, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::io, "corrupt PNG: " + path.string(), {path.string()});
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::validation, "expected a grayscale or indexed PNG: " + path.string(), {path.string()});
  }
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
  if (color != PNG_COLOR_TYPE_PALETTE && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_PALETTE && depth < 8) png_set_packing(png);
  if (depth == 16) png_set_swap(png);  // host order on little-endian machines
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);

  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = buffer.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  LabelGrid out(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  for (png_uint_32 r = 0; r < height; ++r) {
    for (png_uint_32 c = 0; c < width; ++c) {
      if (depth == 16) {
        const std::uint8_t* p = rows[r] + 2 * c;
        out(r, c) = static_cast<std::int32_t>(p[0] | (p[1] << 8));
      } else {
        out(r, c) = rows[r][c];
      }
    }
  }
  return out;
}

void write_gray_png(const std::filesystem::path& path, const Gray16& pixels, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::parameter, "PNG bit depth must be 8 or 16");
  if (bit_depth == 8 && (pixels > 255).any()) throw Error(ErrorCode::domain, "8-bit PNG values must be <= 255");
  if (pixels.size() == 0) throw Error(ErrorCode::empty, "cannot write an empty image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr file = open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::io, "libpng initialisation failed");
  }
  const auto h = pixels.rows(), w = pixels.cols();
  const int bytes = bit_depth / 8;
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(h * w * bytes));
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const std::uint16_t v = pixels(r, c);
      std::uint8_t* p = buffer.data() + (r * w + c) * bytes;
      if (bytes == 1) {
        p[0] = static_cast<std::uint8_t>(v);
      } else {
        p[0] = static_cast<std::uint8_t>(v >> 8);  // PNG stores big-endian
        p[1] = static_cast<std::uint8_t>(v & 0xFF);
      }
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (Eigen::Index r = 0; r < h; ++r) rows[r] = buffer.data() + r * w * bytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io, "PNG encoding failed: " + path.string(), {path.string()});
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_label_png(const std::filesystem::path& path, const LabelGrid& labels) {
  if ((labels < 0).any() || (labels > 255).any()) {
    throw Error(ErrorCode::domain, "label values must lie in 0..255 for an 8-bit mask: " + path.string());
  }
  write_gray_png(path, labels.cast<std::uint16_t>(), 8);
}

}  // namespace gazeforge::io
