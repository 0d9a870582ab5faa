#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace bose2d {

using Engine = std::mt19937_64;

/// Engine for stream `stream` derived from the master seed. Independent of
/// how streams are later scheduled onto workers.
inline Engine make_stream(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x62307365u};
  return Engine(seq);
}

/// Samples assigned to `stream` when `total` samples are split over `streams`.
inline std::size_t stream_share(std::size_t total, std::size_t streams, std::size_t stream) {
  return total / streams + (stream < total % streams ? 1 : 0);
}

/// Worker count from BOSE2D_WORKERS (default: OpenMP's choice). Results never
/// depend on this value.
int worker_count();

/// Applies worker_count() to the OpenMP runtime.
void configure_workers();

}  // namespace bose2d
