// sercl/dsp.h

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

#ifndef SERCL_DSP_H_
#define SERCL_DSP_H_

#include <vector>

#include "sercl/tensor.h"

namespace sercl {

// Mono waveform with a known sample rate.
struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Framing and filterbank parameters. Windows are Hamming, frames are
// zero-padded to dft_len, and the final partial frame is dropped.
struct DspConfig {
  double window_len = 0.040;   // seconds
  double hop_len = 0.010;      // seconds
  int dft_len = 1024;          // samples, power of two
  int mel_bands = 128;
  double max_duration = 14.0;  // seconds
  double log_floor = 1e-10;

  int window_samples(double sample_rate) const;
  int hop_samples(double sample_rate) const;
  void validate(double sample_rate) const;
};

// Log-magnitude time-frequency matrix, n_frames x n_bins.
struct Spectrogram {
  Tensor values;  // rank 2

  int n_frames() const { return values.dim(0); }
  int n_bins() const { return values.dim(1); }
};

// Number of full frames for a signal of n_samples given window/hop sizes.
int frame_count(std::int64_t n_samples, int win, int hop);

// Hamming window coefficients w[n] = 0.54 - 0.46*cos(2*pi*n/(W-1)).
std::vector<double> hamming_window(int length);

// Triangular mel filterbank, mel_bands x (dft_len/2 + 1). HTK mel scale
// mel(f) = 2595*log10(1 + f/700), bands from 0 Hz to Nyquist, rows
// area-normalized (each triangle scaled by 2 / band width in Hz).
Tensor mel_filterbank(int mel_bands, int dft_len, double sample_rate);

// Center slice of at most max_duration seconds; clips at or under the
// limit are returned unchanged. Idempotent.
AudioClip truncate_middle(const AudioClip &clip, double max_duration);

// Pre-log STFT magnitude, n_frames x (dft_len/2 + 1).
Spectrogram magnitude_spectrogram(const AudioClip &clip, const DspConfig &cfg);

// log(max(|STFT|, log_floor)), natural log.
Spectrogram stft_spectrogram(const AudioClip &clip, const DspConfig &cfg);

// log(max(mel_filterbank * |STFT|, log_floor)), n_frames x mel_bands.
Spectrogram mel_spectrogram(const AudioClip &clip, const DspConfig &cfg);

namespace detail {
// In-place iterative radix-2 FFT; re/im must have equal power-of-two size.
void fft_inplace(std::vector<double> &re, std::vector<double> &im);
}  // namespace detail

}  // namespace sercl

#endif  // SERCL_DSP_H_
