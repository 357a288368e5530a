#pragma once

#include <cstdint>

namespace claimaudit {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-derived random substream. Each (seed, iteration, claim, cell)
/// tuple yields an independent stream, so resampling results do not depend
/// on the order bootstrap iterations execute in.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t iteration, std::uint64_t claim_ordinal,
               std::uint64_t cell_ordinal) {
    state_ = mix64(seed + 0x9e3779b97f4a7c15ULL);
    state_ = mix64(state_ ^ mix64(iteration + 0xd1b54a32d192ed03ULL));
    state_ = mix64(state_ ^ mix64(claim_ordinal + 0x8cb92ba72f3d8dd7ULL));
    state_ = mix64(state_ ^ mix64(cell_ordinal + 0xe703b7bdfa5cbf11ULL));
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform index in [0, n). n must be > 0.
  std::size_t bounded(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace claimaudit
