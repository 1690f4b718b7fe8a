// sercl/io.cc

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

#include "sercl/io.h"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "sercl/error.h"

namespace sercl {

namespace {

constexpr char kSpecMagic[8] = {'S', 'E', 'R', 'S', 'P', 'E', 'C', '\0'};
constexpr char kCkptMagic[8] = {'S', 'E', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32 = 0;

void put_u32(std::string &s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f64(std::string &s, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i) {
    s.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

void put_f32(std::string &s, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  for (int i = 0; i < 4; ++i) {
    s.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

// Owns the bytes so callers may hand it temporaries.
class Reader {
 public:
  Reader(std::string bytes, std::string what)
      : buf_(std::move(bytes)),
        p_(reinterpret_cast<const unsigned char *>(buf_.data())),
        len_(buf_.size()),
        what_(std::move(what)) {}

  void expect_magic(const char magic[8]) {
    if (len_ < 8 || std::memcmp(p_, magic, 8) != 0) {
      throw DataError(what_ + ": bad magic");
    }
    off_ = 8;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p_[off_ + static_cast<size_t>(i)];
    off_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p_[off_ + static_cast<size_t>(i)];
    off_ += 8;
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }

  float f32() {
    need(4);
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | p_[off_ + static_cast<size_t>(i)];
    off_ += 4;
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }

  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char *>(p_ + off_), n);
    off_ += n;
    return s;
  }

  bool done() const { return off_ == len_; }

  size_t remaining() const { return len_ - off_; }

 private:
  void need(size_t n) {
    if (n > len_ - off_) throw DataError(what_ + ": truncated file");
  }

  std::string buf_;
  const unsigned char *p_;
  size_t len_;
  size_t off_ = 0;
  std::string what_;
};

}  // namespace

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void atomic_write_file(const std::string &path, const std::string &bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " into place: " +
                    ec.message());
  }
}

void write_spectrogram(const std::string &path, const Spectrogram &s) {
  if (s.values.rank() != 2) throw DataError("spectrogram: values must be 2-d");
  std::string out(kSpecMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, kDtypeF32);
  put_u32(out, static_cast<std::uint32_t>(s.n_frames()));
  put_u32(out, static_cast<std::uint32_t>(s.n_bins()));
  for (double v : s.values.v) put_f32(out, static_cast<float>(v));
  atomic_write_file(path, out);
}

Spectrogram read_spectrogram(const std::string &path) {
  Reader r(read_file(path), "spectrogram " + path);
  r.expect_magic(kSpecMagic);
  if (r.u32() != kVersion) {
    throw DataError("spectrogram " + path + ": unsupported version");
  }
  if (r.u32() != kDtypeF32) {
    throw DataError("spectrogram " + path + ": unsupported dtype");
  }
  const auto frames = static_cast<int>(r.u32());
  const auto bins = static_cast<int>(r.u32());
  if (frames < 1 || bins < 1) {
    throw DataError("spectrogram " + path + ": empty dimensions");
  }
  Spectrogram s;
  s.values = Tensor::zeros({frames, bins});
  for (double &v : s.values.v) v = static_cast<double>(r.f32());
  if (!r.done()) throw DataError("spectrogram " + path + ": trailing bytes");
  return s;
}

// ----------------------------------------------------------------- tensors

std::string encode_tensors(
    const std::vector<std::pair<std::string, const Tensor *>> &tensors) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto &[name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t->rank()));
    for (int d : t->shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t->v) put_f64(out, v);
  }
  return out;
}

namespace {

std::vector<std::pair<std::string, Tensor>> decode_tensor_list(Reader &r) {
  const std::uint32_t count = r.u32();
  // Each record is at least 12 header bytes; larger counts are garbage.
  if (count > r.remaining() / 12) {
    throw DataError("tensor blob: implausible tensor count");
  }
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw DataError("tensor " + name + ": absurd rank");
    std::vector<int> shape;
    std::int64_t numel = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = static_cast<int>(r.u32());
      if (d < 1) throw DataError("tensor " + name + ": non-positive dim");
      if (numel > (std::int64_t{1} << 40) / d) {
        throw DataError("tensor " + name + ": absurd element count");
      }
      shape.push_back(d);
      numel *= d;
    }
    if (numel > static_cast<std::int64_t>(r.remaining() / 8)) {
      throw DataError("tensor " + name + ": truncated payload");
    }
    Tensor t = Tensor::zeros(shape.empty() ? std::vector<int>{1} : shape);
    t.shape = shape;
    t.v.resize(static_cast<size_t>(numel));
    for (double &v : t.v) v = r.f64();
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> decode_tensors(
    const std::string &bytes) {
  Reader r(bytes, "tensor blob");
  auto out = decode_tensor_list(r);
  if (!r.done()) throw DataError("tensor blob: trailing bytes");
  return out;
}

// -------------------------------------------------------------- checkpoint

void write_checkpoint(const std::string &path, const Checkpoint &ck) {
  ck.config.validate();
  ck.centers.validate();

  std::vector<std::pair<std::string, const Tensor *>> tensors =
      ck.params.named();

  Tensor stack = Tensor::zeros(
      {static_cast<int>(ck.config.conv_stack.size()), 5});
  for (size_t i = 0; i < ck.config.conv_stack.size(); ++i) {
    const ConvLayerSpec &l = ck.config.conv_stack[i];
    const int r = static_cast<int>(i);
    stack.at(r, 0) = l.out_channels;
    stack.at(r, 1) = l.kernel_h;
    stack.at(r, 2) = l.kernel_w;
    stack.at(r, 3) = l.stride;
    stack.at(r, 4) = l.pool;
  }
  const Tensor dims = Tensor::vec(
      {static_cast<double>(ck.config.input_bins),
       static_cast<double>(ck.config.rnn_width),
       static_cast<double>(ck.config.feature_dim),
       static_cast<double>(ck.config.n_classes)});
  const Tensor alpha = Tensor::vec({ck.centers.alpha});
  const Tensor iter = Tensor::vec({static_cast<double>(ck.centers.iteration)});
  tensors.emplace_back("cfg.conv_stack", &stack);
  tensors.emplace_back("cfg.dims", &dims);
  tensors.emplace_back("centers.c", &ck.centers.centers);
  tensors.emplace_back("centers.alpha", &alpha);
  tensors.emplace_back("centers.iteration", &iter);

  std::string out(kCkptMagic, 8);
  put_u32(out, kVersion);
  out += encode_tensors(tensors);
  atomic_write_file(path, out);
}

Checkpoint read_checkpoint(const std::string &path) {
  Reader r(read_file(path), "checkpoint " + path);
  r.expect_magic(kCkptMagic);
  if (r.u32() != kVersion) {
    throw DataError("checkpoint " + path + ": unsupported version");
  }
  auto list = decode_tensor_list(r);
  if (!r.done()) throw DataError("checkpoint " + path + ": trailing bytes");

  std::map<std::string, Tensor> by_name;
  for (auto &[name, t] : list) {
    if (!by_name.emplace(name, std::move(t)).second) {
      throw DataError("checkpoint " + path + ": duplicate tensor " + name);
    }
  }
  auto take = [&by_name, &path](const std::string &name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw DataError("checkpoint " + path + ": missing tensor " + name);
    }
    Tensor t = std::move(it->second);
    by_name.erase(it);
    return t;
  };

  Checkpoint ck;
  const Tensor stack = take("cfg.conv_stack");
  if (stack.rank() != 2 || stack.dim(1) != 5) {
    throw DataError("checkpoint " + path + ": bad cfg.conv_stack");
  }
  ck.config.conv_stack.clear();
  for (int i = 0; i < stack.dim(0); ++i) {
    ConvLayerSpec l;
    l.out_channels = static_cast<int>(stack.at(i, 0));
    l.kernel_h = static_cast<int>(stack.at(i, 1));
    l.kernel_w = static_cast<int>(stack.at(i, 2));
    l.stride = static_cast<int>(stack.at(i, 3));
    l.pool = static_cast<int>(stack.at(i, 4));
    ck.config.conv_stack.push_back(l);
  }
  const Tensor dims = take("cfg.dims");
  if (dims.numel() != 4) {
    throw DataError("checkpoint " + path + ": bad cfg.dims");
  }
  ck.config.input_bins = static_cast<int>(dims.at(0));
  ck.config.rnn_width = static_cast<int>(dims.at(1));
  ck.config.feature_dim = static_cast<int>(dims.at(2));
  ck.config.n_classes = static_cast<int>(dims.at(3));
  ck.config.validate();

  ck.centers.centers = take("centers.c");
  ck.centers.alpha = take("centers.alpha").at(0);
  ck.centers.iteration =
      static_cast<std::int64_t>(take("centers.iteration").at(0));
  ck.centers.validate();
  if (ck.centers.n_classes() != ck.config.n_classes ||
      ck.centers.feature_dim() != ck.config.feature_dim) {
    throw DataError("checkpoint " + path + ": centers do not match config");
  }

  // size the parameter struct, then fill every named tensor
  ck.params.conv.resize(ck.config.conv_stack.size());
  for (auto &[name, tensor] : ck.params.named()) {
    *tensor = take(name);
  }
  if (!by_name.empty()) {
    throw DataError("checkpoint " + path + ": unexpected tensor " +
                    by_name.begin()->first);
  }
  return ck;
}

}  // namespace sercl
