// sercl/corpus.cc

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

#include "sercl/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sercl/error.h"
#include "sercl/rng.h"

namespace sercl {

namespace {

constexpr double kTau = 2.0 * 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

SynthSpec SynthSpec::default_four(int total, std::uint64_t seed) {
  SynthSpec s;
  s.classes = {
      {"calm", 150.0, 210.0, 2.0, 0.05, 0.8, 2.5},
      {"happy", 260.0, 340.0, 5.0, 0.05, 0.8, 2.5},
      {"angry", 420.0, 520.0, 9.0, 0.05, 0.8, 2.5},
      {"sad", 640.0, 780.0, 14.0, 0.05, 0.8, 2.5},
  };
  s.proportions = {0.309, 0.199, 0.296, 0.196};
  s.total = total;
  s.seed = seed;
  return s;
}

void SynthSpec::validate() const {
  if (classes.empty()) throw UsageError("synth: no classes");
  if (proportions.size() != classes.size()) {
    throw UsageError("synth: proportions do not match classes");
  }
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0)) throw UsageError("synth: proportions must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw UsageError("synth: proportions must sum to 1");
  }
  if (total < static_cast<int>(classes.size())) {
    throw UsageError("synth: total smaller than the class count");
  }
  if (!(sample_rate > 0.0)) throw UsageError("synth: bad sample rate");
  for (const ClassRecipe &c : classes) {
    if (!(c.f0_lo > 0.0) || c.f0_hi < c.f0_lo) {
      throw UsageError("synth: bad fundamental range for " + c.name);
    }
    if (!(c.dur_lo > 0.3) || c.dur_hi < c.dur_lo || c.dur_hi > 14.0) {
      throw UsageError("synth: durations for " + c.name +
                       " must lie in (0.3, 14] seconds");
    }
    if (c.am_rate < 0.0 || c.noise < 0.0) {
      throw UsageError("synth: negative modulation or noise for " + c.name);
    }
  }
}

std::vector<int> apportion_counts(const std::vector<double> &proportions,
                                  int total) {
  if (proportions.empty() || total < 0) {
    throw UsageError("apportion: bad arguments");
  }
  const size_t n = proportions.size();
  std::vector<int> counts(n, 0);
  std::vector<std::pair<double, size_t>> remainders(n);
  int assigned = 0;
  for (size_t j = 0; j < n; ++j) {
    const double exact = proportions[j] * total;
    counts[j] = static_cast<int>(std::floor(exact));
    assigned += counts[j];
    remainders[j] = {exact - std::floor(exact), j};
  }
  // ties broken toward the earlier class
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) {
    counts[remainders[static_cast<size_t>(k)].second] += 1;
  }
  return counts;
}

namespace {

AudioClip synth_clip(const ClassRecipe &r, double sample_rate, Rng &rng) {
  const double f0 = rng.uniform(r.f0_lo, r.f0_hi);
  const double dur = rng.uniform(r.dur_lo, r.dur_hi);
  const double am_phase = rng.uniform(0.0, kTau);
  constexpr int kHarmonics = 4;
  double phase[kHarmonics];
  for (double &p : phase) p = rng.uniform(0.0, kTau);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  const auto n = static_cast<std::int64_t>(std::llround(dur * sample_rate));
  clip.samples.resize(static_cast<size_t>(n));
  const double nyquist = sample_rate / 2.0;
  double peak = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double s = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
      const double f = f0 * (k + 1);
      if (f >= nyquist) break;
      s += std::sin(kTau * f * t + phase[k]) / ((k + 1) * (k + 1));
    }
    const double am =
        r.am_rate > 0.0
            ? (1.0 + 0.5 * std::sin(kTau * r.am_rate * t + am_phase)) / 1.5
            : 1.0;
    double x = s * am;
    if (r.noise > 0.0) x += r.noise * rng.gaussian();
    clip.samples[static_cast<size_t>(i)] = x;
    peak = std::max(peak, std::abs(x));
  }
  if (peak > 0.0) {
    const double scale = 0.7 / peak;
    for (double &x : clip.samples) x *= scale;
  }
  return clip;
}

}  // namespace

SynthCorpus generate_synthetic_corpus(const SynthSpec &spec) {
  spec.validate();
  const std::vector<int> counts = apportion_counts(spec.proportions, spec.total);

  std::vector<int> labels;
  labels.reserve(static_cast<size_t>(spec.total));
  for (size_t j = 0; j < counts.size(); ++j) {
    labels.insert(labels.end(), static_cast<size_t>(counts[j]),
                  static_cast<int>(j));
  }
  Rng order_rng(splitmix64(spec.seed));
  for (size_t i = labels.size(); i > 1; --i) {
    std::swap(labels[i - 1], labels[static_cast<size_t>(order_rng.below(i))]);
  }

  SynthCorpus corpus;
  corpus.labels = labels;
  corpus.clips.reserve(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    Rng rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(i) + 1)));
    corpus.clips.push_back(synth_clip(
        spec.classes[static_cast<size_t>(labels[i])], spec.sample_rate, rng));
  }
  return corpus;
}

// ------------------------------------------------------------------ manifest

Manifest read_manifest(const std::string &path,
                       const std::vector<std::string> &class_names) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path);
  Manifest m;
  m.class_names = class_names;
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("manifest: missing header row in " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,label,subset") {
    throw DataError("manifest: bad header in " + path);
  }
  std::set<std::string> seen;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t c1 = line.find(',');
    const size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos) {
      throw DataError("manifest: malformed row " + std::to_string(row) +
                      " in " + path);
    }
    ManifestRecord rec;
    rec.path = line.substr(0, c1);
    const std::string label = line.substr(c1 + 1, c2 - c1 - 1);
    rec.subset = line.substr(c2 + 1);
    if (rec.path.empty()) {
      throw DataError("manifest: malformed row " + std::to_string(row) +
                      " in " + path);
    }
    const auto it = std::find(class_names.begin(), class_names.end(), label);
    if (it == class_names.end()) {
      throw DataError("manifest: unknown label '" + label + "' at row " +
                      std::to_string(row) + " in " + path);
    }
    rec.label = static_cast<int>(it - class_names.begin());
    if (!seen.insert(rec.path).second) {
      throw DataError("manifest: duplicate path '" + rec.path + "' at row " +
                      std::to_string(row) + " in " + path);
    }
    m.records.push_back(std::move(rec));
  }
  return m;
}

void write_manifest(const std::string &path, const Manifest &m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("manifest: cannot write " + path);
  out << "path,label,subset\n";
  for (const ManifestRecord &rec : m.records) {
    if (rec.label < 0 || rec.label >= static_cast<int>(m.class_names.size())) {
      throw DataError("manifest: record label out of range");
    }
    out << rec.path << ','
        << m.class_names[static_cast<size_t>(rec.label)] << ',' << rec.subset
        << '\n';
  }
  if (!out.good()) throw DataError("manifest: write failed for " + path);
}

// ----------------------------------------------------------------------- wav

namespace {

constexpr double kWavRate = 16000.0;

std::uint32_t read_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char *p) {
  return static_cast<std::uint16_t>(static_cast<std::uint32_t>(p[0]) |
                                    (static_cast<std::uint32_t>(p[1]) << 8));
}

void put_u32(std::string &s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string &s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioClip read_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("wav: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw DataError("wav: " + path + " is not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const std::uint32_t chunk_len = read_u32(p + off + 4);
    const size_t body = off + 8;
    if (body + chunk_len > bytes.size()) {
      throw DataError("wav: truncated chunk in " + path);
    }
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DataError("wav: short fmt chunk in " + path);
      format = read_u16(p + body);
      channels = read_u16(p + body + 2);
      rate = read_u32(p + body + 4);
      bits = read_u16(p + body + 14);
      have_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    off = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data_off == 0) {
    throw DataError("wav: missing fmt or data chunk in " + path);
  }
  if (format != 1) {
    throw DataError("wav: " + path + " is not PCM (format tag " +
                    std::to_string(format) + ")");
  }
  if (channels != 1) {
    throw DataError("wav: " + path + " has " + std::to_string(channels) +
                    " channels, expected mono");
  }
  if (bits != 16) {
    throw DataError("wav: " + path + " has " + std::to_string(bits) +
                    "-bit samples, expected 16");
  }
  if (rate != static_cast<std::uint32_t>(kWavRate)) {
    throw DataError("wav: " + path + " sampled at " + std::to_string(rate) +
                    " Hz, expected 16000");
  }
  if (data_len % 2 != 0) throw DataError("wav: odd data size in " + path);

  AudioClip clip;
  clip.sample_rate = kWavRate;
  const size_t n = data_len / 2;
  clip.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const auto u = read_u16(p + data_off + 2 * i);
    const auto s = static_cast<std::int16_t>(u);
    clip.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return clip;
}

void write_wav(const std::string &path, const AudioClip &clip) {
  if (clip.sample_rate != kWavRate) {
    throw DataError("wav: writer only supports 16 kHz clips");
  }
  const auto n = clip.samples.size();
  const std::uint32_t data_len = static_cast<std::uint32_t>(2 * n);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(kWavRate));
  put_u32(out, static_cast<std::uint32_t>(kWavRate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (double x : clip.samples) {
    double q = std::floor(x * 32768.0 + 0.5);
    q = std::min(32767.0, std::max(-32768.0, q));
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f.good()) throw DataError("wav: write failed for " + path);
}

void export_corpus(const SynthCorpus &corpus,
                   const std::vector<std::string> &class_names,
                   const std::string &dir) {
  if (corpus.clips.size() != corpus.labels.size()) {
    throw DataError("export: clip and label counts differ");
  }
  std::filesystem::create_directories(dir);
  Manifest m;
  m.class_names = class_names;
  char name[32];
  for (size_t i = 0; i < corpus.clips.size(); ++i) {
    std::snprintf(name, sizeof name, "utt_%05zu.wav", i);
    write_wav(dir + "/" + name, corpus.clips[i]);
    ManifestRecord rec;
    rec.path = name;
    rec.label = corpus.labels[i];
    m.records.push_back(std::move(rec));
  }
  write_manifest(dir + "/manifest.csv", m);
}

}  // namespace sercl
