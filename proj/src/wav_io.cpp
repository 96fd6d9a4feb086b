#include "wavetts/wav_io.h"

#include <cstring>
#include <fstream>

#include "wavetts/error.h"

namespace wavetts {

namespace {

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open WAV file: " + path);

    char tag[5] = {0};
    in.read(tag, 4);
    if (std::strncmp(tag, "RIFF", 4) != 0) {
        throw IoError(path + ": not a RIFF file (chunk id '" + std::string(tag, 4) + "')");
    }
    read_u32(in);  // riff size
    in.read(tag, 4);
    if (std::strncmp(tag, "WAVE", 4) != 0) {
        throw IoError(path + ": RIFF form is not WAVE");
    }

    bool fmt_seen = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    Waveform w;

    while (in.read(tag, 4)) {
        const uint32_t size = read_u32(in);
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            format = read_u16(in);
            channels = read_u16(in);
            rate = read_u32(in);
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            if (size > 16) in.ignore(size - 16);
            fmt_seen = true;
        } else if (std::strncmp(tag, "data", 4) == 0) {
            if (!fmt_seen) throw IoError(path + ": data chunk before fmt chunk");
            if (format != 1) {
                throw IoError(path + ": format tag " + std::to_string(format) +
                              " is not PCM (1)");
            }
            if (channels != 1) {
                throw IoError(path + ": " + std::to_string(channels) +
                              " channels, expected mono (1)");
            }
            if (bits != 16) {
                throw IoError(path + ": " + std::to_string(bits) +
                              " bits per sample, expected 16");
            }
            if (rate != 16000) {
                throw IoError(path + ": sample rate " + std::to_string(rate) +
                              " Hz, expected 16000");
            }
            const size_t n = size / 2;
            w.samples.resize(n);
            std::vector<unsigned char> raw(size);
            in.read(reinterpret_cast<char*>(raw.data()), size);
            if (!in) throw IoError(path + ": truncated data chunk");
            for (size_t i = 0; i < n; ++i) {
                w.samples[i] = static_cast<int16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
            }
            w.sample_rate = static_cast<int>(rate);
            return w;
        } else {
            in.ignore(size + (size & 1));
        }
    }
    throw IoError(path + ": no data chunk found");
}

void write_wav(const std::string& path, const Waveform& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write WAV file: " + path);
    const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
    out.write("RIFF", 4);
    write_u32(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1);  // PCM
    write_u16(out, 1);  // mono
    write_u32(out, static_cast<uint32_t>(w.sample_rate));
    write_u32(out, static_cast<uint32_t>(w.sample_rate * 2));
    write_u16(out, 2);
    write_u16(out, 16);
    out.write("data", 4);
    write_u32(out, data_size);
    for (int16_t s : w.samples) {
        write_u16(out, static_cast<uint16_t>(s));
    }
    if (!out) throw IoError("short write on WAV file: " + path);
}

}  // namespace wavetts
