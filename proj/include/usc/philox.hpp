#pragma once

#include <array>
#include <cstdint>

namespace usc {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: output depends only on
// (key, counter), so streams can be split per trajectory and per step.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    auto key = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  // Uniform double in [0,1) with 53 random bits, addressed by (stream, index).
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    auto r = (*this)({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)});
    std::uint64_t bits = (std::uint64_t{r[0]} << 32 | r[1]) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

}  // namespace usc
