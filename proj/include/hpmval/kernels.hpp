#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "hpmval/events.hpp"
#include "hpmval/traffic.hpp"

namespace hpmval {

enum class CacheLevel : std::uint8_t { L2, L3, MEM };

std::string_view to_string(CacheLevel level);
CacheLevel cache_level_from_string(std::string_view name);
Boundary boundary_for_level(CacheLevel level);

enum class Placement : std::uint8_t { intra_socket, inter_socket };

std::string_view to_string(Placement p);

// Benchmark identity and shape. `cpus` lists logical CPU ids to pin to; an
// entry of -1 runs that thread unpinned.
struct KernelSpec {
  KernelId kernel = KernelId::copy;
  std::uint64_t elements = 0;   // per vector, 8-byte reals, multiple of 8
  std::uint64_t iterations = 1;
  std::vector<int> cpus = {-1};
  CacheLevel target_level = CacheLevel::MEM;
  double scalar = 1.0;          // c in store/stream/daxpy

  std::uint64_t matrix_n = 0;       // triangular_mvm
  std::uint64_t lines_per_step = 0; // producer_consumer
  std::uint64_t steps = 0;
  Placement placement = Placement::intra_socket;
};

struct RunRecord {
  KernelSpec spec;
  double runtime_s = 0.0;
  double checksum = 0.0;
  std::vector<std::uint64_t> per_thread_work;  // elements processed per thread
  bool pinned = true;               // false: at least one affinity request failed
  bool placement_fallback = false;  // requested placement infeasible on this host
};

// Element count whose working set streams through `level`: num_arrays
// aligned vectors of that many 8-byte elements together exceed twice the
// next-inner cache and stay below half the target cache (for MEM: at least
// four times L3). Result is a multiple of 8.
std::uint64_t size_for_level(CacheLevel level, const MachineModel& machine, int num_arrays);

// Contiguous per-thread element ranges, aligned to 8 elements.
std::vector<std::pair<std::uint64_t, std::uint64_t>> chunk_bounds(std::uint64_t elements,
                                                                  unsigned num_threads);

// Runs one of the seven streaming kernels. Arrays are 64-byte aligned and
// first-touch initialized by the owning thread; the measured region is
// delimited by barriers and excludes allocation and initialization. Inputs
// are initialized to 1.0 and destinations to 0.0, so checksums have closed
// forms (e.g. copy -> elements, triad -> 2*elements for scalar 1).
RunRecord run_streaming(const KernelSpec& spec);

// y = U x for an upper-triangular all-ones U and all-ones x, repeated
// `iterations` times with a barrier between sweeps. Threads own the
// contiguous row blocks from triangular_row_blocks. checksum = sum of y
// = n(n+1)/2.
RunRecord run_triangular_mvm(std::uint64_t n, std::uint64_t iterations,
                             unsigned num_threads = 2,
                             const std::vector<int>& cpus = {});

// Producer writes lines_per_step fresh cache lines per step, consumer reads
// and accumulates them; a single shared flag with bounded spin-and-pause
// synchronizes the two. Buffer value at global double index i is i+1, so
// checksum = T(T+1)/2 with T = lines_per_step*steps*8.
RunRecord run_producer_consumer(std::uint64_t lines_per_step, std::uint64_t steps,
                                Placement placement, const MachineModel& machine);

// Logical CPU ids for a two-thread placement on `machine`, checked against
// the host's CPU count. Falls back to {0, 1} when the requested placement
// does not fit; the second member reports whether a fallback happened.
std::pair<std::array<int, 2>, bool> placement_cpus(Placement placement,
                                                   const MachineModel& machine);

}  // namespace hpmval
