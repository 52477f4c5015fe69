#include "studio/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "studio/error.hpp"

namespace studio {

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->size) png_error(png, "truncated PNG");
  std::memcpy(out, cur->data + cur->offset, length);
  cur->offset += length;
}

[[noreturn]] void png_error_throw(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text != nullptr) *text = message;
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace

Bytes encode_png(const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0) throw Error(Errc::shape_error, "empty image");
  Bytes out;
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_throw, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io_error, "PNG encode failed: " + message);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(image.at(0, y)));
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error(Errc::decode_error, "not a PNG stream");
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_throw, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes.data(), bytes.size(), 0};
  RgbImage image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::decode_error, "PNG decode failed: " + message);
  }
  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) png_error(png, "unexpected row layout");
  image = RgbImage(w, h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = image.at(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

RgbImage resize(const RgbImage& src, int width, int height, Resample mode) {
  RgbImage out(width, height);
  if (src.width <= 0 || src.height <= 0) return out;
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::uint8_t* dst = out.at(x, y);
      if (mode == Resample::nearest) {
        const int ix = std::min(src.width - 1, static_cast<int>((x + 0.5) * sx));
        const int iy = std::min(src.height - 1, static_cast<int>((y + 0.5) * sy));
        std::memcpy(dst, src.at(ix, iy), 3);
        continue;
      }
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
      const double ax = fx - x0, ay = fy - y0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(x0, y0)[c] * (1 - ax) + src.at(x1, y0)[c] * ax;
        const double bottom = src.at(x0, y1)[c] * (1 - ax) + src.at(x1, y1)[c] * ax;
        dst[c] = static_cast<std::uint8_t>(std::lround(top * (1 - ay) + bottom * ay));
      }
    }
  }
  return out;
}

RgbImage letterbox(const RgbImage& src, int width, int height, Resample mode) {
  RgbImage canvas(width, height, 0);
  if (src.width <= 0 || src.height <= 0) return canvas;
  const double scale = std::min(static_cast<double>(width) / src.width, static_cast<double>(height) / src.height);
  const int w = std::max(1, static_cast<int>(std::lround(src.width * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(src.height * scale)));
  const RgbImage scaled = resize(src, std::min(w, width), std::min(h, height), mode);
  const int ox = (width - scaled.width) / 2;
  const int oy = (height - scaled.height) / 2;
  for (int y = 0; y < scaled.height; ++y)
    std::memcpy(canvas.at(ox, oy + y), scaled.at(0, y), static_cast<std::size_t>(scaled.width) * 3);
  return canvas;
}

}  // namespace studio
