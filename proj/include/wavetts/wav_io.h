#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wavetts {

struct Waveform {
    std::vector<int16_t> samples;
    int sample_rate = 16000;
};

// Reads a RIFF/WAVE file. Accepts only PCM, mono, 16-bit, 16 kHz; anything
// else is rejected with a message naming the offending property.
Waveform read_wav(const std::string& path);

void write_wav(const std::string& path, const Waveform& w);

}  // namespace wavetts
