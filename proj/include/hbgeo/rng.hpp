#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hbgeo {

/// Seeded random stream. Independent streams are derived by folding stream
/// identifiers (chain index, stage tag, ...) into the seed sequence, so a
/// given (seed, ids...) tuple always reproduces the same draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {});

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Gamma draw parameterised by shape and rate (mean shape/rate).
  double gamma(double shape, double rate);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stage tags folded into stream seeds.
inline constexpr std::uint64_t kStreamStageOne = 1;
inline constexpr std::uint64_t kStreamPrediction = 2;
inline constexpr std::uint64_t kStreamStageThree = 3;
inline constexpr std::uint64_t kStreamValidation = 4;
inline constexpr std::uint64_t kStreamGrid = 5;
inline constexpr std::uint64_t kStreamSimulation = 6;

}  // namespace hbgeo
