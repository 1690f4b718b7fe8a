// sercl/dsp.cc

// Copyright 2026  The sercl authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sercl/dsp.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sercl/error.h"

namespace sercl {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_clip(const AudioClip &clip) {
  if (clip.sample_rate <= 0) throw DataError("AudioClip: sample_rate <= 0");
  for (double s : clip.samples) {
    if (!std::isfinite(s)) throw DataError("AudioClip: non-finite sample");
  }
}

double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace

int DspConfig::window_samples(double sample_rate) const {
  return static_cast<int>(std::llround(window_len * sample_rate));
}

int DspConfig::hop_samples(double sample_rate) const {
  return static_cast<int>(std::llround(hop_len * sample_rate));
}

void DspConfig::validate(double sample_rate) const {
  if (hop_len <= 0) throw DataError("DspConfig: hop_len must be positive");
  if (window_len < hop_len) {
    throw DataError("DspConfig: window_len must be >= hop_len");
  }
  if (dft_len < window_samples(sample_rate)) {
    throw DataError("DspConfig: dft_len smaller than the window");
  }
  if (!is_power_of_two(dft_len)) {
    throw DataError("DspConfig: dft_len must be a power of two");
  }
  if (mel_bands < 1) throw DataError("DspConfig: mel_bands must be >= 1");
  if (log_floor <= 0) throw DataError("DspConfig: log_floor must be positive");
  if (max_duration <= 0) {
    throw DataError("DspConfig: max_duration must be positive");
  }
}

int frame_count(std::int64_t n_samples, int win, int hop) {
  if (n_samples < win) return 0;
  return static_cast<int>((n_samples - win) / hop) + 1;
}

std::vector<double> hamming_window(int length) {
  std::vector<double> w(static_cast<size_t>(length));
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int n = 0; n < length; ++n) {
    w[static_cast<size_t>(n)] =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  }
  return w;
}

Tensor mel_filterbank(int mel_bands, int dft_len, double sample_rate) {
  const int n_bins = dft_len / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);

  // Band edges equally spaced on the mel scale, mel_bands + 2 of them.
  std::vector<double> edges_hz(static_cast<size_t>(mel_bands) + 2);
  for (int k = 0; k < mel_bands + 2; ++k) {
    edges_hz[static_cast<size_t>(k)] =
        mel_to_hz(mel_max * k / (mel_bands + 1));
  }

  Tensor fb = Tensor::zeros({mel_bands, n_bins});
  for (int k = 0; k < mel_bands; ++k) {
    const double lo = edges_hz[static_cast<size_t>(k)];
    const double mid = edges_hz[static_cast<size_t>(k) + 1];
    const double hi = edges_hz[static_cast<size_t>(k) + 2];
    const double norm = 2.0 / (hi - lo);
    for (int i = 0; i < n_bins; ++i) {
      const double f = i * sample_rate / dft_len;
      double w = 0.0;
      if (f > lo && f < hi) {
        w = (f <= mid) ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
      fb.at(k, i) = w * norm;
    }
  }
  return fb;
}

AudioClip truncate_middle(const AudioClip &clip, double max_duration) {
  check_clip(clip);
  if (max_duration <= 0) throw DataError("truncate_middle: max_duration <= 0");
  const std::int64_t n = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t max_len =
      static_cast<std::int64_t>(std::llround(max_duration * clip.sample_rate));
  if (n <= max_len) return clip;
  const std::int64_t start = (n - max_len) / 2;
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + start,
                     clip.samples.begin() + start + max_len);
  return out;
}

Spectrogram magnitude_spectrogram(const AudioClip &clip, const DspConfig &cfg) {
  check_clip(clip);
  cfg.validate(clip.sample_rate);
  const int win = cfg.window_samples(clip.sample_rate);
  const int hop = cfg.hop_samples(clip.sample_rate);
  const int n_frames =
      frame_count(static_cast<std::int64_t>(clip.samples.size()), win, hop);
  if (n_frames < 1) {
    throw DataError("spectrogram: clip shorter than one window");
  }
  const int n_bins = cfg.dft_len / 2 + 1;
  const std::vector<double> window = hamming_window(win);

  Spectrogram spec;
  spec.values = Tensor::zeros({n_frames, n_bins});
  std::vector<double> re(static_cast<size_t>(cfg.dft_len));
  std::vector<double> im(static_cast<size_t>(cfg.dft_len));
  for (int t = 0; t < n_frames; ++t) {
    const std::int64_t off = static_cast<std::int64_t>(t) * hop;
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (int i = 0; i < win; ++i) {
      re[static_cast<size_t>(i)] =
          clip.samples[static_cast<size_t>(off + i)] *
          window[static_cast<size_t>(i)];
    }
    detail::fft_inplace(re, im);
    for (int b = 0; b < n_bins; ++b) {
      spec.values.at(t, b) = std::hypot(re[static_cast<size_t>(b)],
                                        im[static_cast<size_t>(b)]);
    }
  }
  return spec;
}

Spectrogram stft_spectrogram(const AudioClip &clip, const DspConfig &cfg) {
  Spectrogram spec = magnitude_spectrogram(clip, cfg);
  for (double &x : spec.values.v) x = std::log(std::max(x, cfg.log_floor));
  return spec;
}

Spectrogram mel_spectrogram(const AudioClip &clip, const DspConfig &cfg) {
  Spectrogram mag = magnitude_spectrogram(clip, cfg);
  const Tensor fb =
      mel_filterbank(cfg.mel_bands, cfg.dft_len, clip.sample_rate);
  const int n_frames = mag.n_frames();
  const int n_bins = mag.n_bins();

  Spectrogram mel;
  mel.values = Tensor::zeros({n_frames, cfg.mel_bands});
  for (int t = 0; t < n_frames; ++t) {
    for (int k = 0; k < cfg.mel_bands; ++k) {
      double acc = 0.0;
      for (int b = 0; b < n_bins; ++b) {
        acc += fb.at(k, b) * mag.values.at(t, b);
      }
      mel.values.at(t, k) = std::log(std::max(acc, cfg.log_floor));
    }
  }
  return mel;
}

namespace detail {

void fft_inplace(std::vector<double> &re, std::vector<double> &im) {
  const size_t n = re.size();
  if (n != im.size() || !is_power_of_two(static_cast<int>(n))) {
    throw Error("fft_inplace: size must be a power of two");
  }
  // bit reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const double wr = std::cos(ang);
    const double wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t k = 0; k < len / 2; ++k) {
        const size_t a = i + k;
        const size_t b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

}  // namespace detail

}  // namespace sercl
