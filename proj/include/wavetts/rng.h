#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wavetts {

// xoshiro256** generator. Chosen over std::mt19937 because its 4-word state
// serializes trivially into checkpoints and behaves identically on every
// platform, which the bit-exact resume contract depends on.
class RngStream {
  public:
    RngStream() : RngStream(0) {}
    explicit RngStream(uint64_t seed);

    uint64_t next_u64();
    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller; the spare value is discarded so the
    // state advances by exactly two words per draw.
    double normal();
    // Uniform integer in [0, n).
    uint64_t below(uint64_t n);

    std::array<uint64_t, 4> state() const { return state_; }
    void set_state(const std::array<uint64_t, 4>& s) { state_ = s; }

  private:
    std::array<uint64_t, 4> state_;
};

// Named, independent streams derived from one master seed. Every random
// decision in the system (init, data order, epsilon draws, DML position
// selection, sampling) goes through a named stream so that introducing a new
// consumer never perturbs existing draws.
class NamedRng {
  public:
    NamedRng() : NamedRng(0) {}
    explicit NamedRng(uint64_t master_seed);

    uint64_t master_seed() const { return master_seed_; }
    RngStream& stream(const std::string& name);

    std::map<std::string, std::array<uint64_t, 4>> states() const;
    void restore(const std::map<std::string, std::array<uint64_t, 4>>& states);

  private:
    uint64_t master_seed_;
    std::map<std::string, RngStream> streams_;
};

uint64_t fnv1a64(const std::string& s);
uint64_t splitmix64(uint64_t& x);

}  // namespace wavetts
