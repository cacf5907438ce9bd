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

#include "traitalign/checkpoint.hpp"

#include <fstream>

#include "io_util.hpp"
#include "traitalign/errors.hpp"

namespace traitalign {

namespace {
constexpr char kMagic[4] = {'T', 'A', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot open for write: " + path);
    os.write(kMagic, 4);
    ioutil::write_u32(os, kVersion);
    for (const auto& nt : tensors) {
        ioutil::write_u32(os, static_cast<std::uint32_t>(nt.name.size()));
        os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
        ioutil::write_u64(os, nt.tensor->rank());
        for (std::size_t d : nt.tensor->shape) ioutil::write_u64(os, d);
        for (double v : nt.tensor->data) ioutil::write_f64(os, v);
    }
    if (!os) throw DataError("checkpoint: write failed: " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4)) {
        throw DataError("checkpoint: bad magic in " + path);
    }
    const auto version = ioutil::read_u32(is, "checkpoint version");
    if (version != kVersion) throw DataError("checkpoint: unsupported version");

    std::vector<NamedTensor> out;
    while (true) {
        is.peek();
        if (is.eof()) break;
        const auto name_len = ioutil::read_u32(is, "checkpoint record name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw DataError("checkpoint: truncated name");
        const auto rank = ioutil::read_u64(is, "checkpoint record rank");
        std::vector<std::size_t> shape(rank);
        std::size_t n = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(ioutil::read_u64(is, "checkpoint record dim"));
            n *= d;
        }
        std::vector<double> payload(n);
        for (auto& v : payload) v = ioutil::read_f64(is, "checkpoint payload");
        out.push_back({std::move(name), Tensor::from(std::move(shape), std::move(payload))});
    }
    return out;
}

}  // namespace traitalign
