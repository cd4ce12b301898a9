#include "vtnav/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vtnav/util/hash.hpp"

namespace vtnav::ad {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[] = "VTNAVCKPT";
constexpr std::size_t kMagicSize = sizeof(kMagic) - 1;

class Writer {
public:
    template <typename U>
    void pod(U v) {
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        out.insert(out.end(), p, p + sizeof(U));
    }
    void str(const std::string& s) {
        pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
    std::vector<unsigned char> out;
};

class Reader {
public:
    explicit Reader(const std::vector<unsigned char>& b, std::size_t end) : bytes(b), limit(end) {}
    template <typename U>
    U pod() {
        need(sizeof(U));
        U v;
        std::memcpy(&v, bytes.data() + pos, sizeof(U));
        pos += sizeof(U);
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
    void need(std::size_t n) const {
        if (pos + n > limit) throw CheckpointError("checkpoint truncated");
    }
    const std::vector<unsigned char>& bytes;
    std::size_t limit;
    std::size_t pos = 0;
};

}  // namespace

std::vector<unsigned char> Checkpoint::serialize() const {
    Writer w;
    w.out.insert(w.out.end(), kMagic, kMagic + kMagicSize);
    w.pod<std::uint32_t>(kVersion);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(metadata.size()));
    for (const auto& [k, v] : metadata) {
        w.str(k);
        w.str(v);
    }
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, e] : tensors) {
        if (numel(e.shape) != e.values.size()) throw CheckpointError("entry " + name + " has inconsistent shape");
        w.str(name);
        w.pod<std::uint32_t>(static_cast<std::uint32_t>(e.shape.size()));
        for (std::size_t d : e.shape) w.pod<std::uint64_t>(d);
        w.pod<std::uint64_t>(e.values.size());
        const auto* p = reinterpret_cast<const unsigned char*>(e.values.data());
        w.out.insert(w.out.end(), p, p + e.values.size() * sizeof(float));
    }
    Fnv1a h;
    h.update(w.out.data(), w.out.size());
    w.pod<std::uint64_t>(h.digest());
    return std::move(w.out);
}

Checkpoint Checkpoint::deserialize(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kMagicSize + 4 + 8 || std::memcmp(bytes.data(), kMagic, kMagicSize) != 0)
        throw CheckpointError("not a VTNAVCKPT file");
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, 8);
    Fnv1a h;
    h.update(bytes.data(), body);
    if (h.digest() != stored) throw CheckpointError("checkpoint checksum mismatch");

    Reader r(bytes, body);
    r.pos = kMagicSize;
    const auto version = r.pod<std::uint32_t>();
    if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    const auto nmeta = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < nmeta; ++i) {
        auto k = r.str();
        ck.metadata[k] = r.str();
    }
    const auto count = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name = r.str();
        Entry e;
        const auto rank = r.pod<std::uint32_t>();
        for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(static_cast<std::size_t>(r.pod<std::uint64_t>()));
        const auto n = r.pod<std::uint64_t>();
        if (n != numel(e.shape)) throw CheckpointError("entry " + name + " has inconsistent shape");
        r.need(n * sizeof(float));
        e.values.resize(n);
        std::memcpy(e.values.data(), bytes.data() + r.pos, n * sizeof(float));
        r.pos += n * sizeof(float);
        ck.tensors[name] = std::move(e);
    }
    if (r.pos != body) throw CheckpointError("trailing bytes in checkpoint");
    return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace vtnav::ad
