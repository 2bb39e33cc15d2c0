#include "fer/image_io.hpp"

#include <png.h>

#include <array>
#include <cctype>
#include <fstream>
#include <memory>

#include "fer/error.hpp"

namespace fer {

namespace {

// Reads one PGM header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int pgm_int(std::istream& in, const char* what) {
  const std::string tok = pgm_token(in);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw DataError(std::string("PGM: bad ") + what);
  return std::stoi(tok);
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  if (pgm_token(in) != "P5") throw DataError(path.string() + ": not a binary PGM (P5)");
  const int w = pgm_int(in, "width");
  const int h = pgm_int(in, "height");
  const int maxval = pgm_int(in, "maxval");
  if (w < 1 || h < 1) throw DataError(path.string() + ": empty PGM");
  if (maxval < 1 || maxval > 255) throw DataError(path.string() + ": only 8-bit PGM is supported");
  // pgm_token consumed exactly one whitespace byte after maxval.
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw DataError(path.string() + ": truncated PGM raster");
  return GrayImage(w, h, std::move(buf));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
  if (!out) throw DataError("write failed: " + path.string());
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw DataError(path.string() + ": " + image.message);
  std::unique_ptr<png_image, void (*)(png_imagep)> guard(&image, png_image_free);

  const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
    throw DataError(path.string() + ": " + image.message);
  guard.release();

  if (!colour) return GrayImage(w, h, std::move(buf));
  GrayImage out(w, h);
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const int r = buf[3 * i], g = buf[3 * i + 1], b = buf[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::array<unsigned char, 8> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (in.gcount() == 8 && png_sig_cmp(magic.data(), 0, 8) == 0) return read_png(path);
  throw DataError(path.string() + ": unsupported image format (PGM P5 or PNG only)");
}

}  // namespace fer
