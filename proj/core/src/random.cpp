#include "lqgame/random.hpp"

namespace lqgame {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t tag) {
  return splitmix64(splitmix64(master) ^ (tag * 0x9E3779B97F4A7C15ULL));
}

std::uint64_t member_seed(std::uint64_t master, std::uint64_t index) {
  return stream_seed(master, kMemberTagBase + index);
}

}  // namespace lqgame
