#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tsforge/wav.hpp"

using namespace tsforge;
using testing::TempDir;

TEST_CASE("pcm16 quantization round trip is exact on the grid") {
  for (int q = -32767; q <= 32767; q += 97) {
    CHECK(quantize_pcm16(dequantize_pcm16(static_cast<std::int16_t>(q))) == q);
  }
  CHECK(quantize_pcm16(1.5) == 32767);
  CHECK(quantize_pcm16(-1.5) == -32767);
}

TEST_CASE("wav write/read round trip") {
  TempDir dir("wav");
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Waveform w;
  for (int i = 0; i < 1234; ++i) w.samples.push_back(dequantize_pcm16(quantize_pcm16(u(gen))));
  write_wav(dir / "a.wav", w);
  const Waveform r = read_wav(dir / "a.wav");
  CHECK(r == w);
  const auto info = read_wav_info(dir / "a.wav");
  CHECK(info.num_frames == 1234);
  CHECK(testing::slurp(dir / "a.wav").size() == 44 + 2 * 1234);

  // second write of the decoded audio is byte-identical
  write_wav(dir / "b.wav", r);
  CHECK(testing::slurp(dir / "a.wav") == testing::slurp(dir / "b.wav"));
}

TEST_CASE("wav reader rejects unsupported formats") {
  Waveform w{std::vector<double>(10, 0.25), kSampleRate};
  auto bytes = encode_wav(w);
  CHECK(decode_wav(bytes) == Waveform{std::vector<double>(10, dequantize_pcm16(quantize_pcm16(0.25))), kSampleRate});

  auto stereo = bytes;
  stereo[22] = 2;
  CHECK_THROWS(decode_wav(stereo));
  auto rate = bytes;
  rate[24] = 0x44;
  rate[25] = 0xAC;
  CHECK_THROWS(decode_wav(rate));
  auto bits = bytes;
  bits[34] = 8;
  CHECK_THROWS(decode_wav(bits));
  CHECK_THROWS(decode_wav(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20)));
  auto riff = bytes;
  riff[0] = 'X';
  CHECK_THROWS(decode_wav(riff));
  CHECK_THROWS(read_wav("/nonexistent/file.wav"));
}
