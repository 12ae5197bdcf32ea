#include "ftb/wav.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ftb/error.hpp"

namespace ftb {

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                        static_cast<char>((v >> 16) & 0xff),
                        static_cast<char>((v >> 24) & 0xff)};
  f.write(b.data(), 4);
}

void put_u16(std::ofstream& f, std::uint16_t v) {
  std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  f.write(b.data(), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               int sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 4);
  // RIFF size: WAVE + fmt(8+16) + fact(8+4) + data(8+n)
  const std::uint32_t riff_size = 4 + 24 + 12 + 8 + data_bytes;

  f.write("RIFF", 4);
  put_u32(f, riff_size);
  f.write("WAVE", 4);

  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, 3);  // IEEE float
  put_u16(f, 1);  // mono
  put_u32(f, static_cast<std::uint32_t>(sample_rate));
  put_u32(f, static_cast<std::uint32_t>(sample_rate) * 4);
  put_u16(f, 4);   // block align
  put_u16(f, 32);  // bits per sample

  f.write("fact", 4);
  put_u32(f, 4);
  put_u32(f, static_cast<std::uint32_t>(samples.size()));

  f.write("data", 4);
  put_u32(f, data_bytes);
  static_assert(sizeof(float) == 4);
  f.write(reinterpret_cast<const char*>(samples.data()), data_bytes);
  if (!f) throw IoError("short write: " + path.string());
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());

  std::array<unsigned char, 12> riff{};
  f.read(reinterpret_cast<char*>(riff.data()), riff.size());
  if (f.gcount() != 12 || std::memcmp(riff.data(), "RIFF", 4) != 0 ||
      std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE file: " + path.string());
  }

  int format = 0, channels = 0, bits = 0, rate = 0;
  std::vector<unsigned char> data;
  bool have_fmt = false, have_data = false;

  while (f && !(have_fmt && have_data)) {
    std::array<unsigned char, 8> hdr{};
    f.read(reinterpret_cast<char*>(hdr.data()), hdr.size());
    if (f.gcount() != 8) break;
    std::uint32_t size = get_u32(hdr.data() + 4);
    if (std::memcmp(hdr.data(), "fmt ", 4) == 0) {
      std::vector<unsigned char> fmt(size);
      f.read(reinterpret_cast<char*>(fmt.data()), size);
      if (f.gcount() != static_cast<std::streamsize>(size) || size < 16) {
        throw IoError("bad fmt chunk: " + path.string());
      }
      format = get_u16(fmt.data());
      channels = get_u16(fmt.data() + 2);
      rate = static_cast<int>(get_u32(fmt.data() + 4));
      bits = get_u16(fmt.data() + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr.data(), "data", 4) == 0) {
      data.resize(size);
      f.read(reinterpret_cast<char*>(data.data()), size);
      if (f.gcount() != static_cast<std::streamsize>(size)) {
        throw IoError("truncated data chunk: " + path.string());
      }
      have_data = true;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data) throw IoError("missing fmt/data chunk: " + path.string());
  if (channels != 1) throw IoError("only mono WAV supported: " + path.string());

  WavData out;
  out.sample_rate = rate;
  if (format == 3 && bits == 32) {
    out.samples.resize(data.size() / 4);
    std::memcpy(out.samples.data(), data.data(), out.samples.size() * 4);
  } else if (format == 1 && bits == 16) {
    out.samples.resize(data.size() / 2);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      std::int16_t v;
      std::memcpy(&v, data.data() + 2 * i, 2);
      out.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else {
    throw IoError("unsupported WAV encoding (need float32 or int16 mono): " +
                  path.string());
  }
  return out;
}

}  // namespace ftb
