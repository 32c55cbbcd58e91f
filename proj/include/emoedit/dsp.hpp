#pragma once

// Small numeric building blocks shared by the feature extractor and the
// evaluation metrics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "emoedit/error.hpp"

namespace emoedit::dsp {

// In-place iterative radix-2 FFT. The size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw Error("dsp", errc::kInvalidArgument, "fft size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Magnitude spectrum (n_fft/2 + 1 bins) of a real frame zero-padded to n_fft.
inline std::vector<double> magnitude_spectrum(std::span<const double> frame, std::size_t n_fft) {
  std::vector<std::complex<double>> buf(n_fft);
  const std::size_t n = std::min(frame.size(), n_fft);
  for (std::size_t i = 0; i < n; ++i) buf[i] = frame[i];
  fft(buf);
  std::vector<double> mag(n_fft / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters equally spaced on the mel scale, applied to a power
// spectrum of n_fft/2 + 1 bins.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t n_filters, std::size_t n_fft, double sample_rate, double low_hz, double high_hz)
      : n_bins_(n_fft / 2 + 1), weights_(n_filters, std::vector<double>(n_fft / 2 + 1, 0.0)) {
    const double mlo = hz_to_mel(low_hz), mhi = hz_to_mel(high_hz);
    std::vector<double> edges(n_filters + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / (n_filters + 1));
    }
    for (std::size_t m = 0; m < n_filters; ++m) {
      const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
      for (std::size_t k = 0; k < n_bins_; ++k) {
        const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
        double wgt = 0.0;
        if (f > left && f <= center) wgt = (f - left) / (center - left);
        else if (f > center && f < right) wgt = (right - f) / (right - center);
        weights_[m][k] = wgt;
      }
    }
  }

  std::vector<double> apply(std::span<const double> power) const {
    std::vector<double> out(weights_.size(), 0.0);
    for (std::size_t m = 0; m < weights_.size(); ++m) {
      for (std::size_t k = 0; k < n_bins_; ++k) out[m] += weights_[m][k] * power[k];
    }
    return out;
  }

  std::size_t size() const { return weights_.size(); }

 private:
  std::size_t n_bins_;
  std::vector<std::vector<double>> weights_;
};

// Orthonormal DCT-II rows first..last (inclusive) of an n-point transform.
class Dct {
 public:
  Dct(std::size_t n, std::size_t first, std::size_t last) : n_(n) {
    for (std::size_t k = first; k <= last; ++k) {
      std::vector<double> row(n);
      const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        row[i] = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (i + 0.5) / n);
      }
      rows_.push_back(std::move(row));
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(rows_.size(), 0.0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (std::size_t i = 0; i < n_; ++i) out[r] += rows_[r][i] * x[i];
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<std::vector<double>> rows_;
};

// ---------------------------------------------------------------------------
// Statistics

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation.
inline double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Inclusive linear-interpolation percentile, q in [0, 1]: position q * (n - 1)
// in the sorted values.
inline double percentile(std::span<const double> v, double q) {
  if (v.empty()) return 0.0;
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

// Least-squares slope of y against x; 0 when fewer than two points or x is constant.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  const double mx = mean(x.first(n)), my = mean(y.first(n));
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace emoedit::dsp
