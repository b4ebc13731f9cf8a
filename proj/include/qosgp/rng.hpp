#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace qosgp {

using Rng = std::mt19937_64;

// Stream purposes for substream derivation. Each replication gets its own
// family of substreams keyed by (master seed, replication, purpose).
enum class Stream : std::uint64_t {
  Simulation = 0,
  Restarts = 1,
  Split = 2,
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed for substream (replication, purpose, index) of a master seed. Two
// rounds of splitmix64 over distinct odd multipliers keep nearby indices
// statistically unrelated.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, Stream purpose,
                          std::uint64_t index = 0);

// FNV-1a over the textual generator state.
std::uint64_t state_digest(const Rng& rng);

std::string to_hex(std::uint64_t value);

}  // namespace qosgp
