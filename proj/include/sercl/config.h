// sercl/config.h

// Copyright 2026  The sercl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SERCL_CONFIG_H_
#define SERCL_CONFIG_H_

#include <string>
#include <vector>

#include "sercl/dsp.h"
#include "sercl/encoder.h"
#include "sercl/trainer.h"

namespace sercl {

// Everything a run needs, merged from defaults, an optional config file and
// command line flags, in that order of increasing precedence.
struct RunConfig {
  DspConfig dsp;
  EncoderConfig encoder;
  TrainConfig train;

  std::string frontend = "mel";  // "mel" or "stft"
  std::string data_dir;
  std::string out_dir = ".";
  std::vector<std::string> class_names = {"calm", "happy", "angry", "sad"};

  int synth_total = 1000;
  int cv_repeats = 5;
  std::vector<double> sweep_lambda = {0.0, 0.1, 0.3, 0.5, 1.0};
  std::vector<double> sweep_alpha = {0.1, 0.3, 0.5, 0.7, 0.9};

  // Applies one `key = value` assignment. Unknown keys are usage errors.
  void set(const std::string &key, const std::string &value);

  // Reads a flat key = value file. '#' starts a comment, blank lines are
  // skipped.
  void load_file(const std::string &path);

  // Derives encoder.input_bins from the frontend and validates every part.
  void finalize();

  int spectrogram_bins() const;
};

std::vector<ConvLayerSpec> parse_conv_stack(const std::string &text);
std::string format_conv_stack(const std::vector<ConvLayerSpec> &stack);

}  // namespace sercl

#endif  // SERCL_CONFIG_H_
