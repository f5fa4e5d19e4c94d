#include "ace/image.hpp"

#include "ace/fileio.hpp"

#include <png.h>

#include <cstdio>
#include <csetjmp>
#include <memory>
#include <vector>

#include <jpeglib.h>

namespace ace {

BBox bounding_box(const Mask& mask) {
  int x0 = int(mask.cols()), y0 = int(mask.rows()), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.rows(); ++y)
    for (int x = 0; x < mask.cols(); ++x)
      if (mask(y, x)) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

RgbImage quantize8(const RgbImage& image) {
  RgbImage out = image;
  out.pixels = (image.pixels.cwiseMax(0.0f).cwiseMin(1.0f) * 255.0f).round() / 255.0f;
  return out;
}

namespace {

RgbImage from_bytes(const std::vector<unsigned char>& bytes, int width, int height) {
  RgbImage image(width, height);
  for (Eigen::Index i = 0; i < image.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) image.pixels(i, c) = float(bytes[std::size_t(i) * 3 + c]) / 255.0f;
  return image;
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    fail(ErrorKind::io, "cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> bytes(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&img);
    fail(ErrorKind::io, "cannot decode PNG " + path.string() + ": " + img.message);
  }
  return from_bytes(bytes, int(img.width), int(img.height));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RgbImage read_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) fail(ErrorKind::io, "cannot open " + path.string());

  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<unsigned char> bytes;
  int width = 0, height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorKind::io, "cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = int(cinfo.output_width);
  height = int(cinfo.output_height);
  bytes.resize(std::size_t(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = bytes.data() + std::size_t(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_bytes(bytes, width, height);
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

RgbImage read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::not_found, "no such image: " + path.string());
  const auto ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".jpg" || ext == ".jpeg") return read_jpeg(path);
  fail(ErrorKind::io, "unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  require(!image.empty(), "write_png: empty image");
  std::vector<unsigned char> bytes(std::size_t(image.pixel_count()) * 3);
  for (Eigen::Index i = 0; i < image.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c)
      bytes[std::size_t(i) * 3 + c] =
          static_cast<unsigned char>(std::lround(std::clamp(image.pixels(i, c), 0.0f, 1.0f) * 255.0f));

  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = png_uint_32(image.width);
  img.height = png_uint_32(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, bytes.data(), 0, nullptr))
    fail(ErrorKind::io, std::string("PNG encode failed: ") + img.message);
  std::string encoded(size, '\0');
  if (!png_image_write_to_memory(&img, encoded.data(), &size, 0, bytes.data(), 0, nullptr))
    fail(ErrorKind::io, std::string("PNG encode failed: ") + img.message);
  encoded.resize(size);
  atomic_write(path, encoded);
}

}  // namespace ace
