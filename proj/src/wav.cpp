#include "tsforge/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tsforge/error.hpp"

namespace tsforge {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

struct Parsed {
  WavInfo info;
  std::uint16_t format_tag = 0;
  std::size_t data_offset = 0;
  std::size_t data_bytes = 0;
};

Parsed parse_header(const std::uint8_t* bytes, std::size_t size, std::size_t file_size, const std::string& name) {
  if (size < 12 || std::memcmp(bytes, "RIFF", 4) != 0 || std::memcmp(bytes + 8, "WAVE", 4) != 0) {
    throw Error(name + ": not a RIFF/WAVE file");
  }
  Parsed p;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::uint8_t* chunk = bytes + pos;
    const std::uint32_t chunk_size = read_u32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16 || pos + 8 + 16 > size) throw Error(name + ": truncated fmt chunk");
      p.format_tag = read_u16(chunk + 8);
      p.info.channels = read_u16(chunk + 10);
      p.info.sample_rate_hz = static_cast<int>(read_u32(chunk + 12));
      p.info.bits_per_sample = read_u16(chunk + 22);
      if (p.format_tag == kFormatExtensible && chunk_size >= 40 && pos + 8 + 40 <= size) {
        p.format_tag = read_u16(chunk + 8 + 24);  // sub-format GUID starts with the format tag
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(name + ": data chunk precedes fmt chunk");
      p.data_offset = pos + 8;
      // Tolerate writers that leave the size field at 0 or 0xFFFFFFFF for streamed output.
      std::size_t available = file_size > p.data_offset ? file_size - p.data_offset : 0;
      p.data_bytes = std::min<std::size_t>(chunk_size, available);
      if (chunk_size == 0 || chunk_size == 0xFFFFFFFFu) p.data_bytes = available;
      const std::size_t frame_bytes = static_cast<std::size_t>(p.info.channels) * (p.info.bits_per_sample / 8);
      if (frame_bytes == 0) throw Error(name + ": invalid frame size");
      p.info.num_frames = p.data_bytes / frame_bytes;
      return p;
    }
    pos += 8 + chunk_size + (chunk_size & 1u);
  }
  throw Error(name + ": no data chunk");
}

void require_canonical(const Parsed& p, const std::string& name) {
  if (p.format_tag != kFormatPcm) throw Error(name + ": only PCM WAV is supported");
  if (p.info.bits_per_sample != 16) throw Error(name + ": only 16-bit WAV is supported");
  if (p.info.channels != 1) throw Error(name + ": only mono WAV is supported");
  if (p.info.sample_rate_hz != kSampleRate) {
    throw Error(name + ": sample rate " + std::to_string(p.info.sample_rate_hz) + " Hz, expected 16000");
  }
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

std::int16_t quantize_pcm16(double x) {
  x = std::clamp(x, -1.0, 1.0);
  return static_cast<std::int16_t>(std::lround(x * 32767.0));
}

double dequantize_pcm16(std::int16_t q) { return static_cast<double>(q) / 32767.0; }

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open");
  std::vector<std::uint8_t> head(4096);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  const auto file_size = static_cast<std::size_t>(std::filesystem::file_size(path));
  return parse_header(head.data(), head.size(), file_size, path.string()).info;
}

Waveform decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& source_name) {
  Parsed p = parse_header(bytes.data(), bytes.size(), bytes.size(), source_name);
  require_canonical(p, source_name);
  Waveform w;
  w.sample_rate_hz = p.info.sample_rate_hz;
  w.samples.resize(p.info.num_frames);
  const std::uint8_t* data = bytes.data() + p.data_offset;
  for (std::size_t i = 0; i < p.info.num_frames; ++i) {
    w.samples[i] = dequantize_pcm16(static_cast<std::int16_t>(read_u16(data + 2 * i)));
  }
  return w;
}

Waveform read_wav(const std::filesystem::path& path) { return decode_wav(slurp(path), path.string()); }

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  const std::size_t data_bytes = w.samples.size() * 2;
  if (data_bytes > 0xFFFFFFFFull - 36) throw Error("waveform too long for RIFF");
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_bytes));
  for (double x : w.samples) put_u16(out, static_cast<std::uint16_t>(quantize_pcm16(x)));
  return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  const auto bytes = encode_wav(w);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace tsforge
