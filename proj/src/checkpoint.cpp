#include "wavetts/checkpoint.h"

#include <fstream>

#include "wavetts/error.h"

namespace wavetts::train {

namespace {

constexpr char kMagic[8] = {'W', 'T', 'T', 'S', 'C', 'K', 'P', 'T'};

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_u64(std::ostream& out, uint64_t v) {
    write_u32(out, static_cast<uint32_t>(v & 0xffffffffULL));
    write_u32(out, static_cast<uint32_t>(v >> 32));
}

uint64_t read_u64(std::istream& in) {
    const uint64_t lo = read_u32(in);
    const uint64_t hi = read_u32(in);
    return lo | (hi << 32);
}

void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& in) {
    const uint32_t n = read_u32(in);
    if (n > 4096) throw IoError("checkpoint: implausible name length");
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw IoError("checkpoint: missing tensor blob '" + name + "'");
    return it->second;
}

const std::vector<uint64_t>& Checkpoint::get_words(const std::string& name) const {
    auto it = words.find(name);
    if (it == words.end()) throw IoError("checkpoint: missing word blob '" + name + "'");
    return it->second;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u32(out, static_cast<uint32_t>(tensors.size() + words.size()));
    for (const auto& [name, t] : tensors) {
        write_str(out, name);
        write_u32(out, 0);  // dtype f64
        write_u32(out, static_cast<uint32_t>(t.shape().size()));
        for (size_t d : t.shape()) write_u32(out, static_cast<uint32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.numel() * 8));
    }
    for (const auto& [name, w] : words) {
        write_str(out, name);
        write_u32(out, 1);  // dtype u64
        write_u32(out, 1);
        write_u32(out, static_cast<uint32_t>(w.size()));
        for (uint64_t v : w) write_u64(out, v);
    }
    if (!out) throw IoError("short write on checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != std::string(kMagic, 8)) {
        throw IoError(path + ": not a checkpoint file");
    }
    const uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    const uint32_t count = read_u32(in);
    Checkpoint ck;
    for (uint32_t i = 0; i < count; ++i) {
        const std::string name = read_str(in);
        const uint32_t dtype = read_u32(in);
        const uint32_t ndim = read_u32(in);
        if (ndim > 8) throw IoError(path + ": bad blob rank");
        Shape shape(ndim);
        for (auto& d : shape) d = read_u32(in);
        if (dtype == 0) {
            std::vector<double> data(shape_numel(shape));
            in.read(reinterpret_cast<char*>(data.data()),
                    static_cast<std::streamsize>(data.size() * 8));
            ck.tensors[name] = Tensor::from_vector(shape, std::move(data));
        } else if (dtype == 1) {
            std::vector<uint64_t> w(shape_numel(shape));
            for (auto& v : w) v = read_u64(in);
            ck.words[name] = std::move(w);
        } else {
            throw IoError(path + ": unknown blob dtype " + std::to_string(dtype));
        }
        if (!in) throw IoError(path + ": truncated blob '" + name + "'");
    }
    return ck;
}

}  // namespace wavetts::train
