//
// Copyright 2026 The dprelease Authors
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
//

#ifndef DPRELEASE_RANDOM_SOURCE_H_
#define DPRELEASE_RANDOM_SOURCE_H_

#include <cstdint>
#include <optional>
#include <random>

namespace dprelease {

enum class NoiseMode { kNoisy, kNoiseOff };

// Owns the randomness for one sequence of mechanism invocations. A source is
// single-owner: it is movable but not copyable, and must not be shared
// between threads. Identical seed, mode and call sequence give identical
// draws.
//
// Noise-off mode is for deterministic tests only. Additive samplers return 0
// and selection mechanisms return their argmax; the release pipeline refuses
// to publish with such a source.
class RandomSource {
 public:
  static RandomSource Seeded(uint64_t seed,
                             NoiseMode mode = NoiseMode::kNoisy) {
    return RandomSource(seed, mode);
  }

  static RandomSource FromEntropy() {
    std::random_device device;
    const uint64_t seed =
        (static_cast<uint64_t>(device()) << 32) ^ static_cast<uint64_t>(device());
    RandomSource source(seed, NoiseMode::kNoisy);
    source.seed_.reset();
    return source;
  }

  static RandomSource NoiseOff() { return RandomSource(0, NoiseMode::kNoiseOff); }

  RandomSource(RandomSource&&) = default;
  RandomSource& operator=(RandomSource&&) = default;
  RandomSource(const RandomSource&) = delete;
  RandomSource& operator=(const RandomSource&) = delete;

  NoiseMode mode() const { return mode_; }
  bool noise_off() const { return mode_ == NoiseMode::kNoiseOff; }
  // Unset for entropy-seeded sources.
  std::optional<uint64_t> seed() const { return seed_; }

  uint64_t NextBits() { return engine_(); }

  // Uniform on the open interval (0, 1): the top 53 bits of one engine draw,
  // offset by half a step so neither endpoint is reachable.
  double UniformOpen() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Derives an independent child source, e.g. one per tester pair or thread.
  RandomSource Fork() { return RandomSource(engine_(), mode_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  RandomSource(uint64_t seed, NoiseMode mode)
      : engine_(seed), seed_(seed), mode_(mode) {}

  std::mt19937_64 engine_;
  std::optional<uint64_t> seed_;
  NoiseMode mode_;
};

}  // namespace dprelease

#endif  // DPRELEASE_RANDOM_SOURCE_H_
