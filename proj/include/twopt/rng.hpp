#ifndef TWOPT_RNG_HPP
#define TWOPT_RNG_HPP

#include <array>
#include <cstdint>

namespace twopt {

/// Philox4x32-10 block function (Salmon et al. 2011).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Uniform draw in the open interval (0,1) addressed by (seed, run, client,
/// draw). Every address is an independent stream, so results do not depend on
/// how runs are split across workers.
double uniform01(std::uint64_t seed, std::uint64_t run, std::uint32_t client, std::uint32_t draw);

/// Mixes a seed with a label into a new seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label);

}  // namespace twopt

#endif  // TWOPT_RNG_HPP
