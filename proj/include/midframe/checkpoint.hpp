#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "midframe/nets.hpp"

namespace midframe {

// Checkpoint container: little-endian, versioned, named float32 tensors.
// Layout: magic 'MFCK' (u32), version (u32), training step (u64),
// tensor count (u32), then per tensor: name length (u32), name bytes,
// ndim (u32), dims (u32 each), raw float32 data.
inline constexpr uint32_t kCheckpointMagic = 0x4B43464Du;
inline constexpr uint32_t kCheckpointVersion = 1;

template <class S>
void save_tensors(const std::vector<nn::Param<S>*>& params, uint64_t step,
                  const std::string& path) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
        const uint32_t count = static_cast<uint32_t>(params.size());
        out.write(reinterpret_cast<const char*>(&kCheckpointMagic), 4);
        out.write(reinterpret_cast<const char*>(&kCheckpointVersion), 4);
        out.write(reinterpret_cast<const char*>(&step), 8);
        out.write(reinterpret_cast<const char*>(&count), 4);
        for (auto* p : params) {
            const uint32_t nlen = static_cast<uint32_t>(p->name.size());
            out.write(reinterpret_cast<const char*>(&nlen), 4);
            out.write(p->name.data(), nlen);
            const uint32_t ndim = static_cast<uint32_t>(p->shape.size());
            out.write(reinterpret_cast<const char*>(&ndim), 4);
            for (int d : p->shape) {
                const uint32_t du = static_cast<uint32_t>(d);
                out.write(reinterpret_cast<const char*>(&du), 4);
            }
            for (S v : p->v) {
                const float f = static_cast<float>(v);
                out.write(reinterpret_cast<const char*>(&f), 4);
            }
        }
        if (!out) throw std::runtime_error("save_checkpoint: write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

template <class S>
uint64_t load_tensors(const std::vector<nn::Param<S>*>& params,
                      const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    uint32_t magic = 0, version = 0, count = 0;
    uint64_t step = 0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&step), 8);
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in || magic != kCheckpointMagic)
        throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
    if (version != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported format version " +
                                 std::to_string(version));
    if (count != params.size())
        throw std::runtime_error("load_checkpoint: tensor count mismatch (" +
                                 std::to_string(count) + " in file, " +
                                 std::to_string(params.size()) + " expected)");
    for (auto* p : params) {
        uint32_t nlen = 0;
        in.read(reinterpret_cast<char*>(&nlen), 4);
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        if (name != p->name)
            throw std::runtime_error("load_checkpoint: tensor name mismatch: expected " +
                                     p->name + ", found " + name);
        uint32_t ndim = 0;
        in.read(reinterpret_cast<char*>(&ndim), 4);
        std::vector<int> shape(ndim);
        for (uint32_t i = 0; i < ndim; ++i) {
            uint32_t d = 0;
            in.read(reinterpret_cast<char*>(&d), 4);
            shape[i] = static_cast<int>(d);
        }
        if (shape != p->shape)
            throw std::runtime_error("load_checkpoint: shape mismatch for tensor " +
                                     p->name);
        for (S& v : p->v) {
            float f;
            in.read(reinterpret_cast<char*>(&f), 4);
            v = static_cast<S>(f);
        }
        if (!in) throw std::runtime_error("load_checkpoint: truncated file: " + path);
    }
    return step;
}

template <class S>
void save_checkpoint(NetPair<S>& nets, const std::string& path) {
    save_tensors(nets.parameters(), nets.step, path);
}

template <class S>
void load_checkpoint(NetPair<S>& nets, const std::string& path) {
    nets.step = load_tensors(nets.parameters(), path);
}

}  // namespace midframe
