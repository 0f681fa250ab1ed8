#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tsforge {

inline constexpr int kSampleRate = 16000;

// Mono floating-point audio. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

  bool operator==(const Waveform&) const = default;
};

struct WavInfo {
  int sample_rate_hz = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::size_t num_frames = 0;

  double duration_s() const { return sample_rate_hz ? static_cast<double>(num_frames) / sample_rate_hz : 0.0; }
};

// 16-bit PCM quantization used by the WAV writer and its inverse.
std::int16_t quantize_pcm16(double x);
double dequantize_pcm16(std::int16_t q);

// Reads the RIFF header only. Throws tsforge::Error on a malformed file.
WavInfo read_wav_info(const std::filesystem::path& path);

// Reads mono 16-bit PCM at 16 kHz. Anything else is rejected; no resampling.
Waveform read_wav(const std::filesystem::path& path);

// Writes RIFF/WAVE, PCM 16-bit little-endian, mono. Samples outside [-1, 1] are clipped.
void write_wav(const std::filesystem::path& path, const Waveform& w);

std::vector<std::uint8_t> encode_wav(const Waveform& w);
Waveform decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& source_name = "<memory>");

}  // namespace tsforge
