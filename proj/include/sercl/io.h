// sercl/io.h

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

#ifndef SERCL_IO_H_
#define SERCL_IO_H_

#include <string>
#include <utility>
#include <vector>

#include "sercl/dsp.h"
#include "sercl/encoder.h"
#include "sercl/losses.h"

namespace sercl {

// Whole-file read; DataError when missing.
std::string read_file(const std::string &path);

// Writes to a temp file in the target directory, then renames into place,
// so readers never observe a partial artifact.
void atomic_write_file(const std::string &path, const std::string &bytes);

// Spectrogram container: magic "SERSPEC\0", u32 version, u32 dtype (0 =
// f32), u32 n_frames, u32 n_bins, then row-major little-endian floats.
void write_spectrogram(const std::string &path, const Spectrogram &s);
Spectrogram read_spectrogram(const std::string &path);

// Checkpoint: magic "SERCKPT\0", u32 version, u32 tensor count, then per
// tensor u32 name length, name bytes, u32 rank, u32 dims, little-endian
// doubles. Carries the encoder config, all model parameters, and the
// center bank, so a checkpoint alone rebuilds the model.
struct Checkpoint {
  EncoderConfig config;
  ModelParams params;
  CenterBank centers;
};

void write_checkpoint(const std::string &path, const Checkpoint &ck);
Checkpoint read_checkpoint(const std::string &path);

// Low-level named-tensor serialization, exposed for tests.
std::string encode_tensors(
    const std::vector<std::pair<std::string, const Tensor *>> &tensors);
std::vector<std::pair<std::string, Tensor>> decode_tensors(
    const std::string &bytes);

}  // namespace sercl

#endif  // SERCL_IO_H_
