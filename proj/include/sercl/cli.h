// sercl/cli.h

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

#ifndef SERCL_CLI_H_
#define SERCL_CLI_H_

#include <string>
#include <vector>

namespace sercl {

// Runs one subcommand. Args exclude the program name. Returns the process
// exit code: 0 success, 1 usage, 2 bad data, 3 numeric failure.
int dispatch(const std::vector<std::string> &args);

}  // namespace sercl

#endif  // SERCL_CLI_H_
