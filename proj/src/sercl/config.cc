// sercl/config.cc

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

#include "sercl/config.h"

#include <cstdio>
#include <sstream>

#include "sercl/error.h"
#include "sercl/io.h"

namespace sercl {

namespace {

std::string trim(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string &key, const std::string &value) {
  size_t used = 0;
  double d = 0;
  try {
    d = std::stod(value, &used);
  } catch (const std::exception &) {
    throw UsageError("config: " + key + " expects a number, got '" + value +
                     "'");
  }
  if (used != value.size()) {
    throw UsageError("config: " + key + " expects a number, got '" + value +
                     "'");
  }
  return d;
}

int parse_int(const std::string &key, const std::string &value) {
  size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(value, &used);
  } catch (const std::exception &) {
    throw UsageError("config: " + key + " expects an integer, got '" + value +
                     "'");
  }
  if (used != value.size()) {
    throw UsageError("config: " + key + " expects an integer, got '" + value +
                     "'");
  }
  return static_cast<int>(n);
}

bool parse_bool(const std::string &key, const std::string &value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw UsageError("config: " + key + " expects 0/1/true/false, got '" +
                   value + "'");
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

std::vector<double> parse_real_list(const std::string &key,
                                    const std::string &value) {
  std::vector<double> out;
  for (const std::string &p : split(value, ',')) {
    if (p.empty()) {
      throw UsageError("config: " + key + " has an empty list entry");
    }
    out.push_back(parse_real(key, p));
  }
  return out;
}

}  // namespace

std::vector<ConvLayerSpec> parse_conv_stack(const std::string &text) {
  // Layer syntax: <out>c<kh>x<kw>s<stride>[p<pool>], layers joined by ','.
  std::vector<ConvLayerSpec> stack;
  for (const std::string &part : split(text, ',')) {
    ConvLayerSpec layer;
    int pool = 1;
    char tail = 0;
    int got = std::sscanf(part.c_str(), "%dc%dx%ds%dp%d%c", &layer.out_channels,
                          &layer.kernel_h, &layer.kernel_w, &layer.stride,
                          &pool, &tail);
    if (got != 5) {
      pool = 1;
      got = std::sscanf(part.c_str(), "%dc%dx%ds%d%c", &layer.out_channels,
                        &layer.kernel_h, &layer.kernel_w, &layer.stride, &tail);
      if (got != 4) {
        throw UsageError("config: bad conv layer '" + part +
                         "', expected e.g. 32c3x3s1p2");
      }
    }
    layer.pool = pool;
    stack.push_back(layer);
  }
  return stack;
}

std::string format_conv_stack(const std::vector<ConvLayerSpec> &stack) {
  std::ostringstream out;
  for (size_t i = 0; i < stack.size(); ++i) {
    if (i) out << ',';
    out << stack[i].out_channels << 'c' << stack[i].kernel_h << 'x'
        << stack[i].kernel_w << 's' << stack[i].stride;
    if (stack[i].pool > 1) out << 'p' << stack[i].pool;
  }
  return out.str();
}

void RunConfig::set(const std::string &key, const std::string &value) {
  if (key == "frontend") {
    if (value != "mel" && value != "stft") {
      throw UsageError("config: frontend must be mel or stft, got '" + value +
                       "'");
    }
    frontend = value;
  } else if (key == "data_dir") {
    data_dir = value;
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "class_names") {
    class_names = split(value, ',');
  } else if (key == "dsp.window_len") {
    dsp.window_len = parse_real(key, value);
  } else if (key == "dsp.hop_len") {
    dsp.hop_len = parse_real(key, value);
  } else if (key == "dsp.dft_len") {
    dsp.dft_len = parse_int(key, value);
  } else if (key == "dsp.mel_bands") {
    dsp.mel_bands = parse_int(key, value);
  } else if (key == "dsp.max_duration") {
    dsp.max_duration = parse_real(key, value);
  } else if (key == "dsp.log_floor") {
    dsp.log_floor = parse_real(key, value);
  } else if (key == "encoder.conv_stack") {
    encoder.conv_stack = parse_conv_stack(value);
  } else if (key == "encoder.rnn_width") {
    encoder.rnn_width = parse_int(key, value);
  } else if (key == "encoder.feature_dim") {
    encoder.feature_dim = parse_int(key, value);
  } else if (key == "encoder.n_classes") {
    encoder.n_classes = parse_int(key, value);
  } else if (key == "train.learning_rate") {
    train.learning_rate = parse_real(key, value);
  } else if (key == "train.batch_size") {
    train.batch_size = parse_int(key, value);
  } else if (key == "train.lambda") {
    train.lambda = parse_real(key, value);
  } else if (key == "train.alpha") {
    train.alpha = parse_real(key, value);
  } else if (key == "train.max_epochs") {
    train.max_epochs = parse_int(key, value);
  } else if (key == "train.seed") {
    train.seed = parse_int(key, value);
  } else if (key == "train.beta1") {
    train.beta1 = parse_real(key, value);
  } else if (key == "train.beta2") {
    train.beta2 = parse_real(key, value);
  } else if (key == "train.eps") {
    train.eps = parse_real(key, value);
  } else if (key == "train.clip_norm") {
    train.clip_norm = parse_real(key, value);
  } else if (key == "train.weighted") {
    train.weighted = parse_bool(key, value);
  } else if (key == "synth.total") {
    synth_total = parse_int(key, value);
  } else if (key == "cv.repeats") {
    cv_repeats = parse_int(key, value);
  } else if (key == "sweep.lambda") {
    sweep_lambda = parse_real_list(key, value);
  } else if (key == "sweep.alpha") {
    sweep_alpha = parse_real_list(key, value);
  } else {
    throw UsageError("config: unknown key '" + key + "'");
  }
}

void RunConfig::load_file(const std::string &path) {
  // A config file named on the command line is part of the invocation, so
  // failing to read it is a usage error, not a data error.
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError &e) {
    throw UsageError(e.what());
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config " + path + ": line " + std::to_string(lineno) +
                       " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError("config " + path + ": line " + std::to_string(lineno) +
                       " has an empty key");
    }
    set(key, value);
  }
}

int RunConfig::spectrogram_bins() const {
  return frontend == "mel" ? dsp.mel_bands : dsp.dft_len / 2 + 1;
}

void RunConfig::finalize() {
  if (frontend != "mel" && frontend != "stft") {
    throw UsageError("config: frontend must be mel or stft, got '" + frontend +
                     "'");
  }
  dsp.validate(16000.0);
  encoder.input_bins = spectrogram_bins();
  encoder.validate();
  train.validate();
  if (static_cast<int>(class_names.size()) != encoder.n_classes) {
    throw UsageError("config: " + std::to_string(class_names.size()) +
                     " class names for " + std::to_string(encoder.n_classes) +
                     " classes");
  }
  for (const std::string &name : class_names) {
    if (name.empty()) throw UsageError("config: empty class name");
  }
  if (synth_total < 1) throw UsageError("config: synth.total must be >= 1");
  if (cv_repeats < 1) throw UsageError("config: cv.repeats must be >= 1");
  if (sweep_lambda.empty() || sweep_alpha.empty()) {
    throw UsageError("config: sweep grids must be non-empty");
  }
  for (double l : sweep_lambda) {
    if (l < 0) throw UsageError("config: sweep.lambda entries must be >= 0");
  }
  for (double a : sweep_alpha) {
    if (a < 0 || a > 1) {
      throw UsageError("config: sweep.alpha entries must be in [0, 1]");
    }
  }
}

}  // namespace sercl
