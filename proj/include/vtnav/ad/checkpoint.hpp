#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtnav/ad/parameters.hpp"

namespace vtnav::ad {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary container: "VTNAVCKPT", u32 version, metadata (string pairs), then per
// tensor its name, shape and raw little-endian float32 values, closed by an FNV-1a
// checksum over every preceding byte.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    struct Entry {
        Shape shape;
        std::vector<float> values;
        bool operator==(const Entry&) const = default;
    };

    std::map<std::string, std::string> metadata;
    std::map<std::string, Entry> tensors;

    bool operator==(const Checkpoint&) const = default;

    std::vector<unsigned char> serialize() const;
    static Checkpoint deserialize(const std::vector<unsigned char>& bytes);

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

    // Adds every parameter whose name starts with `prefix`.
    template <typename T>
    void store(const ParameterSet<T>& params, const std::string& prefix = "");
    // Fills every parameter whose name starts with `prefix`; missing names are an error.
    template <typename T>
    void restore(ParameterSet<T>& params, const std::string& prefix = "") const;
};

template <typename T>
void Checkpoint::store(const ParameterSet<T>& params, const std::string& prefix) {
    for (const auto& e : params.entries()) {
        if (e.name.rfind(prefix, 0) != 0) continue;
        Entry entry{e.tensor.shape(), {}};
        entry.values.reserve(e.tensor.numel());
        for (T v : e.tensor.values()) entry.values.push_back(static_cast<float>(v));
        tensors[e.name] = std::move(entry);
    }
}

template <typename T>
void Checkpoint::restore(ParameterSet<T>& params, const std::string& prefix) const {
    for (auto& e : params.entries()) {
        if (e.name.rfind(prefix, 0) != 0) continue;
        auto it = tensors.find(e.name);
        if (it == tensors.end()) throw CheckpointError("checkpoint lacks parameter " + e.name);
        if (it->second.shape != e.tensor.shape())
            throw CheckpointError("shape mismatch for " + e.name + ": checkpoint " + to_string(it->second.shape) +
                                  ", model " + to_string(e.tensor.shape()));
        auto dst = e.tensor.mutable_values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(it->second.values[i]);
    }
}

}  // namespace vtnav::ad
