// Copyright 2026 The idesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDESIGN_RNG_H_
#define IDESIGN_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace idesign {

using Rng = std::mt19937_64;

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives the seed of an independent stream from a root seed and a tuple of
// stream coordinates (agent index, episode index, ...).
inline uint64_t StreamSeed(uint64_t seed, std::initializer_list<uint64_t> ids) {
  uint64_t h = SplitMix64(seed);
  for (uint64_t id : ids) h = SplitMix64(h ^ SplitMix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng MakeRng(uint64_t seed, std::initializer_list<uint64_t> ids) {
  return Rng(StreamSeed(seed, ids));
}

// Uniform in [0, 1). Avoids std::uniform_real_distribution so streams are
// identical across standard library implementations.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; stateless so a stream's draws depend only on
// the number of calls.
double StandardNormal(Rng& rng);

}  // namespace idesign

#endif  // IDESIGN_RNG_H_
