// sercl/corpus.h

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

#ifndef SERCL_CORPUS_H_
#define SERCL_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sercl/dsp.h"

namespace sercl {

// Tone-complex recipe standing in for one emotion class: fundamental range,
// harmonic stack, amplitude modulation, noise floor.
struct ClassRecipe {
  std::string name;
  double f0_lo = 0.0, f0_hi = 0.0;    // Hz
  double am_rate = 0.0;               // Hz
  double noise = 0.0;                 // additive gaussian level
  double dur_lo = 0.0, dur_hi = 0.0;  // seconds
};

struct SynthSpec {
  std::vector<ClassRecipe> classes;
  std::vector<double> proportions;  // sums to 1
  int total = 0;
  std::uint64_t seed = 0;
  double sample_rate = 16000.0;

  // Four separable classes at paper-like imbalance (.309/.199/.296/.196).
  static SynthSpec default_four(int total, std::uint64_t seed);

  void validate() const;  // throws UsageError
};

struct SynthCorpus {
  std::vector<AudioClip> clips;
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
};

// Largest-remainder apportionment of total over the proportions.
std::vector<int> apportion_counts(const std::vector<double> &proportions,
                                  int total);

// Pure function of the spec: bit-identical corpora for equal specs.
SynthCorpus generate_synthetic_corpus(const SynthSpec &spec);

// --------------------------------------------------------------- manifest

struct ManifestRecord {
  std::string path;
  int label = -1;
  std::string subset;  // optional tag, may be empty
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::vector<std::string> class_names;
};

// CSV with header `path,label,subset`; label column holds class names.
// Distinct errors for a missing file, an unknown label (naming the row),
// and a malformed row. An empty record list is fine.
Manifest read_manifest(const std::string &path,
                       const std::vector<std::string> &class_names);
void write_manifest(const std::string &path, const Manifest &m);

// ------------------------------------------------------------------- wav

// RIFF/WAVE, PCM 16-bit mono at 16 kHz only; samples scaled by 1/32768.
AudioClip read_wav(const std::string &path);
void write_wav(const std::string &path, const AudioClip &clip);

// Writes clips as WAV files plus manifest.csv into dir.
void export_corpus(const SynthCorpus &corpus,
                   const std::vector<std::string> &class_names,
                   const std::string &dir);

}  // namespace sercl

#endif  // SERCL_CORPUS_H_
