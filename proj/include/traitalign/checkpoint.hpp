// Copyright 2026 The traitalign Authors
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

#pragma once

#include <string>
#include <vector>

#include "traitalign/tensor.hpp"

namespace traitalign {

struct NamedTensor {
    std::string name;
    TensorPtr tensor;
};

/// Parameter checkpoint, bit-exact round trip. Layout: magic "TACP",
/// version u32, then per-tensor records of
///   name_len u32 | name utf-8 | rank u64 | dims u64... | payload f64 LE.
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace traitalign
