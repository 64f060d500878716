#pragma once

#include <cctype>
#include <csetjmp>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "shotmark/error.hpp"
#include "shotmark/imaging.hpp"

namespace shotmark {

namespace detail {

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const unsigned char* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) fail(ErrorKind::Io, "short write to '" + path.string() + "'");
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

} // namespace detail

inline std::vector<unsigned char> encode_png(const RasterImage& img) {
  require(!img.empty() && (img.channels == 1 || img.channels == 3), "encode_png: unsupported raster");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data.data(), 0, nullptr))
    fail(ErrorKind::Io, std::string("png encode: ") + image.message);
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data.data(), 0, nullptr))
    fail(ErrorKind::Io, std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

/// Gray PNGs stay single-channel; everything else becomes RGB.
inline RasterImage decode_png(const std::vector<unsigned char>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    fail(ErrorKind::Io, std::string("png decode: ") + image.message);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  RasterImage img(static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3);
  if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr))
    fail(ErrorKind::Io, std::string("png decode: ") + image.message);
  return img;
}

inline std::vector<unsigned char> encode_jpeg(const RasterImage& img, int quality) {
  require(!img.empty() && (img.channels == 1 || img.channels == 3), "encode_jpeg: unsupported raster");
  require(quality >= 1 && quality <= 100, "jpeg quality must be in [1, 100]");
  jpeg_compress_struct cinfo;
  detail::JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = detail::jpeg_error_exit;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    fail(ErrorKind::Io, std::string("jpeg encode: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = img.channels;
  cinfo.in_color_space = img.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(img.data.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<unsigned char> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

inline RasterImage decode_jpeg(const std::vector<unsigned char>& bytes) {
  jpeg_decompress_struct cinfo;
  detail::JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = detail::jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorKind::Io, std::string("jpeg decode: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  RasterImage img(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height),
                  cinfo.output_components);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPLE* row = img.data.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

inline RasterImage jpeg_round_trip(const RasterImage& img, int quality) {
  return decode_jpeg(encode_jpeg(img, quality));
}

/// Format from the file signature.
inline RasterImage read_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_bytes(path);
  try {
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
      return decode_jpeg(bytes);
  } catch (const Error& e) {
    fail(ErrorKind::Io, "'" + path.string() + "': " + e.what());
  }
  fail(ErrorKind::Io, "'" + path.string() + "': not a PNG or JPEG file");
}

/// Format from the extension: .jpg/.jpeg write JPEG, anything else PNG.
inline void write_image(const std::filesystem::path& path, const RasterImage& img, int jpeg_quality = 95) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  const auto bytes = (ext == ".jpg" || ext == ".jpeg") ? encode_jpeg(img, jpeg_quality) : encode_png(img);
  detail::write_bytes(path, bytes.data(), bytes.size());
}

} // namespace shotmark
