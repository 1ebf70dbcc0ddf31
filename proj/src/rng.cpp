#include "hbgeo/rng.hpp"

#include <vector>

namespace hbgeo {

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * ids.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto id : ids) push(id);
  return std::seed_seq(words.begin(), words.end());
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  auto seq = make_seed_seq(seed, ids);
  engine_.seed(seq);
}

double RngStream::gamma(double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

}  // namespace hbgeo
