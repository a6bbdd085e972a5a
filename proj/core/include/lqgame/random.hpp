#pragma once

// Seed derivation and Wiener increment sources.
//
// Every random source in a run is seeded by hashing the master seed together
// with a fixed stream tag:
//
//   stream_seed(master, tag) = splitmix64(splitmix64(master) ^ (tag * 0x9E3779B97F4A7C15))
//
// Tags are permanent (see StreamTag); new streams get new tags so existing
// streams never shift. Ensemble members use tag kMemberTagBase + index.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace lqgame {

enum class StreamTag : std::uint64_t {
  PlantNoise = 1,      ///< w
  Dither1 = 2,         ///< v1
  Dither2 = 3,         ///< v2
  Regularization = 4,  ///< eta_k draws
  Probe = 5,           ///< perturbation directions for continuity probes
};

inline constexpr std::uint64_t kMemberTagBase = 1ULL << 32;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t tag);
inline std::uint64_t stream_seed(std::uint64_t master, StreamTag tag) {
  return stream_seed(master, static_cast<std::uint64_t>(tag));
}
/// Master seed of the i-th member of an ensemble.
std::uint64_t member_seed(std::uint64_t master, std::uint64_t index);

/// Standard Brownian increments: each component ~ N(0, h).
class WienerIncrements {
 public:
  explicit WienerIncrements(std::uint64_t seed) : engine_(seed) {}

  void draw(Eigen::Ref<Eigen::VectorXd> out, double h) {
    const double sd = std::sqrt(h);
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = sd * normal_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// The three independent Wiener sources of one trajectory plus the seed of the
/// regularization draws.
struct WienerStreams {
  explicit WienerStreams(std::uint64_t master)
      : w(stream_seed(master, StreamTag::PlantNoise)),
        v1(stream_seed(master, StreamTag::Dither1)),
        v2(stream_seed(master, StreamTag::Dither2)),
        eta_seed(stream_seed(master, StreamTag::Regularization)) {}

  WienerIncrements w;
  WienerIncrements v1;
  WienerIncrements v2;
  std::uint64_t eta_seed;
};

}  // namespace lqgame
