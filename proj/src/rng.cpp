#include "wavetts/rng.h"

#include <cmath>

namespace wavetts {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {
inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

RngStream::RngStream(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
}

uint64_t RngStream::next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    // u1 nudged away from 0 so log() stays finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

uint64_t RngStream::below(uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling to avoid modulo bias.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

NamedRng::NamedRng(uint64_t master_seed) : master_seed_(master_seed) {}

RngStream& NamedRng::stream(const std::string& name) {
    auto it = streams_.find(name);
    if (it == streams_.end()) {
        it = streams_.emplace(name, RngStream(master_seed_ ^ fnv1a64(name))).first;
    }
    return it->second;
}

std::map<std::string, std::array<uint64_t, 4>> NamedRng::states() const {
    std::map<std::string, std::array<uint64_t, 4>> out;
    for (const auto& [name, s] : streams_) out[name] = s.state();
    return out;
}

void NamedRng::restore(const std::map<std::string, std::array<uint64_t, 4>>& states) {
    for (const auto& [name, s] : states) stream(name).set_state(s);
}

}  // namespace wavetts
