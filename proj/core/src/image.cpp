#include "ftb/image.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>

#include "ftb/error.hpp"

namespace ftb {

ImageF to_float(const ImageU8& img) {
  ImageF out(img.width(), img.height());
  const auto& src = img.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(src[i]) * (1.0f / 255.0f);
  }
  return out;
}

void write_pgm(const ImageU8& img, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data().data()),
          static_cast<std::streamsize>(img.data().size()));
  if (!f) throw IoError("short write: " + path.string());
}

namespace {

int next_pnm_int(std::istream& in, const std::filesystem::path& path) {
  // Skips whitespace and '#' comments between header tokens.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw IoError("truncated PGM header: " + path.string());
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

ImageU8 read_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::string magic(2, '\0');
  f.read(magic.data(), 2);
  if (magic != "P5") throw IoError("not a binary PGM: " + path.string());
  int w = next_pnm_int(f, path);
  int h = next_pnm_int(f, path);
  int maxval = next_pnm_int(f, path);
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw IoError("unsupported PGM geometry in " + path.string());
  }
  ImageU8 img(w, h);
  f.read(reinterpret_cast<char*>(img.data().data()),
         static_cast<std::streamsize>(img.data().size()));
  if (f.gcount() != static_cast<std::streamsize>(img.data().size())) {
    throw IoError("truncated PGM data: " + path.string());
  }
  return img;
}

int mask_area(const Mask& m) {
  int n = 0;
  for (auto v : m.data()) n += (v != 0);
  return n;
}

std::optional<Vec2> mask_centroid(const Mask& m) {
  double sx = 0, sy = 0;
  int n = 0;
  for (int y = 0; y < m.height(); ++y) {
    const auto* row = m.row(y);
    for (int x = 0; x < m.width(); ++x) {
      if (row[x]) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  return Vec2{sx / n, sy / n};
}

int mask_overlap(const Mask& a, const Mask& b) {
  int n = 0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) n += (da[i] && db[i]);
  return n;
}

Mask shift_mask(const Mask& m, int dx, int dy) {
  Mask out(m.width(), m.height(), 0);
  for (int y = 0; y < m.height(); ++y) {
    int sy = y - dy;
    if (sy < 0 || sy >= m.height()) continue;
    for (int x = 0; x < m.width(); ++x) {
      int sx = x - dx;
      if (sx < 0 || sx >= m.width()) continue;
      out.at(x, y) = m.at(sx, sy);
    }
  }
  return out;
}

double mask_iou(const Mask& a, const Mask& b) {
  int inter = mask_overlap(a, b);
  int uni = mask_area(a) + mask_area(b) - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

}  // namespace ftb
