#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wavetts/tensor.h"

namespace wavetts::train {

// Versioned container of named blobs. Each f64 blob payload uses the same
// layout as the feature cache files (dims as 32-bit little-endian integers,
// then row-major 64-bit floats); u64 blobs hold RNG states and counters.
struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::vector<uint64_t>> words;

    void put(const std::string& name, const Tensor& t) { tensors[name] = t.detach(); }
    void put_words(const std::string& name, std::vector<uint64_t> w) {
        words[name] = std::move(w);
    }
    void put_scalar(const std::string& name, double v) { put(name, Tensor::scalar(v)); }

    const Tensor& get(const std::string& name) const;
    const std::vector<uint64_t>& get_words(const std::string& name) const;
    double get_scalar(const std::string& name) const { return get(name).item(); }
    bool has(const std::string& name) const { return tensors.count(name) || words.count(name); }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace wavetts::train
