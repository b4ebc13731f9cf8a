#include "qosgp/rng.hpp"

#include <cstdio>
#include <sstream>

namespace qosgp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, Stream purpose,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (replication * 0xD1B54A32D192ED03ULL));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(purpose) * 0x8CB92BA72F3D8DD7ULL));
  return splitmix64(h ^ (index * 0xABC98388FB8FAC03ULL));
}

std::uint64_t state_digest(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace qosgp
