#include "faceattr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace faceattr {
namespace {

std::string lower_ext(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

unsigned char to_u8(float v) {
  float scaled = std::round(v * 255.0f);
  return static_cast<unsigned char>(std::clamp(scaled, 0.0f, 255.0f));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageF read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt png: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported png channel count in " + path);
  }

  std::vector<unsigned char> buffer(static_cast<std::size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y)
    rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageF img(static_cast<int>(width), static_cast<int>(height), channels);
  for (std::size_t i = 0; i < buffer.size(); ++i)
    img.data()[i] = static_cast<float>(buffer[i]) / 255.0f;
  return img;
}

void write_png(const ImageF& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<unsigned char> rowbuf(static_cast<std::size_t>(img.width()) *
                                    img.channels());
  for (int y = 0; y < img.height(); ++y) {
    const float* src = img.row(y);
    for (std::size_t i = 0; i < rowbuf.size(); ++i) rowbuf[i] = to_u8(src[i]);
    png_write_row(png, rowbuf.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageF read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw IoError("unsupported pnm magic in " + path);
  int channels = magic == "P5" ? 1 : 3;

  auto next_int = [&in, &path]() {
    // Skip whitespace and '#' comments between header fields.
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw IoError("bad pnm header in " + path);
    return v;
  };
  long width = next_int();
  long height = next_int();
  long maxval = next_int();
  if (maxval != 255) throw IoError("pnm maxval must be 255 in " + path);
  in.get();  // single whitespace before raster

  ImageF img(static_cast<int>(width), static_cast<int>(height), channels);
  std::vector<unsigned char> buffer(img.size());
  in.read(reinterpret_cast<char*>(buffer.data()),
          static_cast<std::streamsize>(buffer.size()));
  if (static_cast<std::size_t>(in.gcount()) != buffer.size())
    throw IoError("truncated pnm raster in " + path);
  for (std::size_t i = 0; i < buffer.size(); ++i)
    img.data()[i] = static_cast<float>(buffer[i]) / 255.0f;
  return img;
}

void write_pnm(const ImageF& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << (img.channels() == 1 ? "P5" : "P6") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> buffer(img.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = to_u8(img.data()[i]);
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size()));
  if (!out) throw IoError("short write to " + path);
}

}  // namespace

ImageF read_image(const std::string& path) {
  std::string ext = lower_ext(path);
  if (ext == "png") return read_png(path);
  if (ext == "ppm" || ext == "pgm" || ext == "pnm") return read_pnm(path);
  throw IoError("unsupported image format: " + path);
}

void write_image(const ImageF& img, const std::string& path) {
  if (img.empty()) throw IoError("refusing to write empty image");
  std::string ext = lower_ext(path);
  if (ext == "png") return write_png(img, path);
  if (ext == "ppm" || ext == "pgm" || ext == "pnm") return write_pnm(img, path);
  throw IoError("unsupported image format: " + path);
}

}  // namespace faceattr
