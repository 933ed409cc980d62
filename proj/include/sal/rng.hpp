#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "sal/util.hpp"

namespace sal {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for a named stream derived from a root seed.  Each consumer owns a
// tagged stream so adding or reordering one consumer cannot shift the draws
// seen by any other.
inline std::uint64_t stream_seed(std::uint64_t root, std::string_view tag) {
  return splitmix64(root ^ splitmix64(fnv1a64(tag.data(), tag.size())));
}

inline Rng make_rng(std::uint64_t root, std::string_view tag) {
  return Rng(stream_seed(root, tag));
}

// mt19937_64 state round-trip through its standard text serialization.
inline std::string rng_state_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  require(!is.fail(), "malformed random-generator state string");
}

}  // namespace sal
