#include "demud/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include <png.h>
// jpeglib.h expects FILE and size_t to be declared first.
#include <jpeglib.h>

#include "demud/error.hpp"
#include "demud/io.hpp"

namespace demud {

namespace {

Image decode_png(const std::string& bytes, const std::string& name) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()) == 0) {
    throw DataError("corrupt PNG '" + name + "': " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image image(png.width, png.height);
  // Composite transparent pixels onto black.
  png_color background{0, 0, 0};
  if (png_image_finish_read(&png, &background, image.data.data(), 0, nullptr) == 0) {
    std::string message = png.message;
    png_image_free(&png);
    throw DataError("corrupt PNG '" + name + "': " + message);
  }
  return image;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr /*info*/, int /*level*/) {}

// Returns false (with message filled) on decode failure. No objects with
// destructors live across the setjmp boundary.
bool decode_jpeg_raw(const std::string& bytes, Image& image, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silence;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  image.width = cinfo.output_width;
  image.height = cinfo.output_height;
  image.data.assign(image.width * image.height * Image::kChannels, 0);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = image.data.data() + static_cast<std::size_t>(cinfo.output_scanline) * image.width * Image::kChannels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string name = path.string();
  static constexpr unsigned char kPngMagic[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPngMagic, 4) == 0) {
    return decode_png(bytes, name);
  }
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8 && static_cast<unsigned char>(bytes[2]) == 0xFF) {
    Image image;
    char message[JMSG_LENGTH_MAX] = {};
    if (!decode_jpeg_raw(bytes, image, message)) {
      throw DataError("corrupt JPEG '" + name + "': " + message);
    }
    return image;
  }
  throw DataError("unrecognized image format '" + name + "'");
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (!image.valid()) throw DataError("cannot encode an empty or inconsistent image");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&png, nullptr, &size, 0, image.data.data(), 0, nullptr) == 0) {
    throw IoError(std::string("PNG encoding failed: ") + png.message);
  }
  std::string buffer(size, '\0');
  if (png_image_write_to_memory(&png, buffer.data(), &size, 0, image.data.data(), 0, nullptr) == 0) {
    throw IoError(std::string("PNG encoding failed: ") + png.message);
  }
  buffer.resize(size);
  write_file_atomic(path, buffer);
}

}  // namespace demud
