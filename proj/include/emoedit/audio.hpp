#pragma once

// Waveform decoding, resampling and segment framing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emoedit/error.hpp"

namespace emoedit {

// All feature extraction runs at this rate.
inline constexpr int kAnalysisRate = 16000;

struct Waveform {
  std::vector<double> samples;  // mono, each in [-1, 1]
  int sample_rate = kAnalysisRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
  bool operator==(const Waveform&) const = default;
};

struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  double duration() const { return end_s - start_s; }
};

enum class Window { hann, rectangular };

struct FrameParams {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  Window window = Window::hann;
};

// One analysis frame. `valid` real samples starting at waveform index
// `start_sample` are stored at `offset` within the frame buffer; the rest of
// the buffer is zero.
struct FrameSpan {
  std::int64_t start_sample = 0;
  std::size_t valid = 0;
  std::size_t offset = 0;
  bool operator==(const FrameSpan&) const = default;
};

struct FrameGrid {
  int sample_rate = kAnalysisRate;
  std::size_t frame_length = 0;
  std::size_t hop = 0;
  Window window = Window::hann;
  std::vector<FrameSpan> frames;

  double hop_s() const { return static_cast<double>(hop) / sample_rate; }
  std::size_t full_frames() const {
    return static_cast<std::size_t>(std::count_if(
        frames.begin(), frames.end(),
        [&](const FrameSpan& f) { return f.valid == frame_length; }));
  }
  bool operator==(const FrameGrid&) const = default;
};

struct FramedSegment {
  FrameGrid grid;
  std::vector<double> data;  // frames.size() x frame_length, row-major, unwindowed

  std::size_t size() const { return grid.frames.size(); }
  std::span<const double> frame(std::size_t i) const {
    return {data.data() + i * grid.frame_length, grid.frame_length};
  }
  // Only the real (non-padding) samples of frame i.
  std::span<const double> valid_samples(std::size_t i) const {
    const FrameSpan& f = grid.frames[i];
    return frame(i).subspan(f.offset, f.valid);
  }
};

namespace detail {

inline std::uint32_t read_u32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

inline std::uint16_t read_u16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

[[noreturn]] inline void wav_error(const std::string& what, std::size_t offset) {
  throw Error("audio", errc::kParse, what + " at byte " + std::to_string(offset), offset);
}

}  // namespace detail

// Decodes a RIFF/WAVE file holding PCM16 or IEEE float32 samples. Stereo is
// averaged to mono. PCM16 is scaled by 1/32768; float samples are clamped to
// [-1, 1].
inline Waveform decode_wav(std::string_view bytes) {
  using detail::read_u16;
  using detail::read_u32;
  using detail::wav_error;

  if (bytes.size() < 12) wav_error("truncated RIFF header", bytes.size());
  if (bytes.substr(0, 4) != "RIFF") wav_error("missing RIFF tag", 0);
  if (bytes.substr(8, 4) != "WAVE") wav_error("missing WAVE tag", 8);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;

  std::size_t pos = 12;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 8) wav_error("truncated chunk header", pos);
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) wav_error("chunk '" + std::string(id) + "' overruns file", pos + 4);

    if (id == "fmt ") {
      if (size < 16) wav_error("fmt chunk too short", pos + 4);
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      block_align = read_u16(bytes, body + 12);
      bits = read_u16(bytes, body + 14);
      if (format == 0xFFFE) {  // WAVE_FORMAT_EXTENSIBLE: sub-format GUID starts at +24
        if (size < 40) wav_error("extensible fmt chunk too short", pos + 4);
        format = read_u16(bytes, body + 24);
      }
      if (rate == 0) wav_error("zero sample rate", body + 4);
      if (channels == 0) wav_error("zero channel count", body + 2);
      const bool pcm16 = format == 1 && bits == 16;
      const bool float32 = format == 3 && bits == 32;
      if (!pcm16 && !float32) {
        throw Error("audio", errc::kUnsupportedFormat,
                    "codec " + std::to_string(format) + " with " + std::to_string(bits) +
                        " bits per sample (supported: PCM16, float32)");
      }
      if (channels > 2) {
        throw Error("audio", errc::kUnsupportedFormat,
                    std::to_string(channels) + " channels (supported: mono, stereo)");
      }
      if (block_align != channels * bits / 8) wav_error("inconsistent block align", body + 12);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) wav_error("data chunk before fmt chunk", pos);
      if (size % block_align != 0) wav_error("data size not a multiple of block align", pos + 4);
      const std::size_t n = size / block_align;
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(n);
      const std::size_t bytes_per_sample = bits / 8;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t at = body + i * block_align + c * bytes_per_sample;
          double v;
          if (format == 1) {
            v = static_cast<std::int16_t>(read_u16(bytes, at)) / 32768.0;
          } else {
            const std::uint32_t raw = read_u32(bytes, at);
            float f;
            std::memcpy(&f, &raw, sizeof f);
            if (!std::isfinite(f)) wav_error("non-finite float sample", at);
            v = std::clamp(static_cast<double>(f), -1.0, 1.0);
          }
          acc += v;
        }
        w.samples[i] = acc / channels;
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) wav_error("no fmt chunk", bytes.size());
  wav_error("no data chunk", bytes.size());
}

// 16-bit PCM mono. Samples are rounded to the nearest code and saturated.
inline std::string encode_wav_pcm16(const Waveform& w) {
  using detail::put_u16;
  using detail::put_u32;
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : w.samples) {
    const double scaled = std::round(s * 32768.0);
    const auto code = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(code));
  }
  return out;
}

inline std::string encode_wav_float32(const Waveform& w, int channels = 1) {
  using detail::put_u16;
  using detail::put_u32;
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 4 * channels);
  std::string out;
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 3);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate * 4 * channels));
  put_u16(out, static_cast<std::uint16_t>(4 * channels));
  put_u16(out, 32);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : w.samples) {
    const float f = static_cast<float>(s);
    std::uint32_t raw;
    std::memcpy(&raw, &f, sizeof raw);
    for (int c = 0; c < channels; ++c) put_u32(out, raw);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling: Kaiser-windowed sinc, evaluated polyphase over the exact rational
// ratio so the result is a deterministic function of the input.

struct ResampleParams {
  int zero_crossings = 16;
  double kaiser_beta = 8.0;
  double rolloff = 0.97;
};

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

inline Waveform resample(const Waveform& w, int target_rate, const ResampleParams& p = {}) {
  if (target_rate <= 0) {
    throw Error("audio", errc::kInvalidArgument, "target rate must be positive");
  }
  if (target_rate == w.sample_rate || w.samples.empty()) {
    Waveform out = w;
    out.sample_rate = target_rate;
    return out;
  }
  const std::int64_t src = w.sample_rate;
  const std::int64_t dst = target_rate;
  const std::int64_t g = std::gcd(src, dst);
  const std::int64_t up = dst / g;  // number of distinct fractional phases
  const std::int64_t down = src / g;

  // cutoff in cycles per input sample
  const double fc = 0.5 * std::min(1.0, static_cast<double>(dst) / src) * p.rolloff;
  const double half_width = p.zero_crossings / (2.0 * fc);
  const auto reach = static_cast<std::int64_t>(std::ceil(half_width));
  const double i0_beta = std::cyl_bessel_i(0.0, p.kaiser_beta);

  auto tap = [&](double t) {
    if (std::abs(t) >= half_width) return 0.0;
    const double r = t / half_width;
    const double win = std::cyl_bessel_i(0.0, p.kaiser_beta * std::sqrt(1.0 - r * r)) / i0_beta;
    return 2.0 * fc * detail::sinc(2.0 * fc * t) * win;
  };

  // kernel[phase][k] weights x[base - reach + k] for output time base + phase/up
  const std::size_t taps = static_cast<std::size_t>(2 * reach + 2);
  std::vector<double> kernel(static_cast<std::size_t>(up) * taps);
  for (std::int64_t ph = 0; ph < up; ++ph) {
    const double frac = static_cast<double>(ph) / up;
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const double t = frac - (static_cast<double>(k) - reach);
      sum += kernel[ph * taps + k] = tap(t);
    }
    for (std::size_t k = 0; k < taps; ++k) kernel[ph * taps + k] /= sum;
  }

  const auto n_in = static_cast<std::int64_t>(w.samples.size());
  const std::int64_t n_out = (n_in * dst + src / 2) / src;
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const std::int64_t ph = num % up;
    const double* kr = &kernel[ph * taps];
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const std::int64_t idx = base - reach + static_cast<std::int64_t>(k);
      if (idx >= 0 && idx < n_in) acc += kr[k] * w.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(n)] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

inline Waveform to_analysis_rate(const Waveform& w) { return resample(w, kAnalysisRate); }

// ---------------------------------------------------------------------------
// Framing

inline std::vector<double> window_coefficients(Window window, std::size_t n) {
  std::vector<double> c(n, 1.0);
  if (window == Window::hann && n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / (n - 1));
    }
  }
  return c;
}

// Sample range [first, last) of an interval. Intervals may overrun the audio by
// up to 1 ms (aligner rounding); anything further is rejected.
inline std::pair<std::int64_t, std::int64_t> segment_samples(const Waveform& w,
                                                              const TimeInterval& seg) {
  constexpr double kSlack = 1e-3;
  if (!std::isfinite(seg.start_s) || !std::isfinite(seg.end_s) || seg.end_s <= seg.start_s) {
    throw Error("audio", errc::kInvalidSegment,
                "empty or negative interval [" + std::to_string(seg.start_s) + ", " +
                    std::to_string(seg.end_s) + "]");
  }
  if (seg.start_s < -kSlack || seg.end_s > w.duration_s() + kSlack) {
    throw Error("audio", errc::kInvalidSegment,
                "interval [" + std::to_string(seg.start_s) + ", " + std::to_string(seg.end_s) +
                    "] outside waveform of " + std::to_string(w.duration_s()) + " s");
  }
  const auto n = static_cast<std::int64_t>(w.samples.size());
  std::int64_t first = std::clamp<std::int64_t>(std::llround(seg.start_s * w.sample_rate), 0, n);
  std::int64_t last = std::clamp<std::int64_t>(std::llround(seg.end_s * w.sample_rate), 0, n);
  if (last <= first) {
    // positive but sub-sample interval: keep the one sample it touches
    if (first >= n) {
      throw Error("audio", errc::kInvalidSegment, "interval starts at end of waveform");
    }
    last = first + 1;
  }
  return {first, last};
}

// Frames a segment. Frames hold only segment samples: a segment shorter than a
// frame yields one frame with the samples centered and zeros around them, and
// a trailing remainder that full frames miss gets one extra zero-padded frame.
inline FramedSegment frame(const Waveform& w, const TimeInterval& seg, const FrameParams& params = {}) {
  if (params.frame_ms <= 0.0 || params.hop_ms <= 0.0) {
    throw Error("audio", errc::kInvalidArgument, "frame and hop lengths must be positive");
  }
  const auto [first, last] = segment_samples(w, seg);
  const std::size_t n = static_cast<std::size_t>(last - first);

  FramedSegment out;
  FrameGrid& g = out.grid;
  g.sample_rate = w.sample_rate;
  g.frame_length = static_cast<std::size_t>(std::max<long long>(1, std::llround(params.frame_ms * w.sample_rate / 1000.0)));
  g.hop = static_cast<std::size_t>(std::max<long long>(1, std::llround(params.hop_ms * w.sample_rate / 1000.0)));
  g.window = params.window;

  if (n < g.frame_length) {
    g.frames.push_back({first, n, (g.frame_length - n) / 2});
  } else {
    const std::size_t full = (n - g.frame_length) / g.hop + 1;
    for (std::size_t i = 0; i < full; ++i) {
      g.frames.push_back({first + static_cast<std::int64_t>(i * g.hop), g.frame_length, 0});
    }
    const std::size_t covered = (full - 1) * g.hop + g.frame_length;
    if (covered < n) {
      const std::size_t start = full * g.hop;
      g.frames.push_back({first + static_cast<std::int64_t>(start), n - start, 0});
    }
  }

  out.data.assign(g.frames.size() * g.frame_length, 0.0);
  for (std::size_t i = 0; i < g.frames.size(); ++i) {
    const FrameSpan& f = g.frames[i];
    std::copy_n(w.samples.begin() + f.start_sample, f.valid,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * g.frame_length + f.offset));
  }
  return out;
}

}  // namespace emoedit
