#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace hpmval {

enum class KernelId : std::uint8_t {
  load,
  store,
  copy,
  stream,
  daxpy,
  triad,
  ddot,
  triangular_mvm,
  producer_consumer,
};

std::string_view to_string(KernelId id);
KernelId kernel_from_string(std::string_view name);
bool is_streaming(KernelId id);

// Memory-hierarchy boundaries at which traffic is counted.
enum class Boundary : std::uint8_t { L1_L2, L2_L3, L3_MEM };

std::string_view to_string(Boundary b);

// Expected data movement across one boundary for one benchmark
// configuration. bytes_in flows toward the core, bytes_out away from it.
struct TrafficPrediction {
  Boundary boundary = Boundary::L3_MEM;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;

  std::uint64_t total_bytes() const { return bytes_in + bytes_out; }
  std::uint64_t lines_in(int cache_line_bytes = 64) const {
    return bytes_in / static_cast<std::uint64_t>(cache_line_bytes);
  }
  std::uint64_t lines_out(int cache_line_bytes = 64) const {
    return bytes_out / static_cast<std::uint64_t>(cache_line_bytes);
  }
  std::uint64_t total_lines(int cache_line_bytes = 64) const {
    return total_bytes() / static_cast<std::uint64_t>(cache_line_bytes);
  }

  friend bool operator==(const TrafficPrediction&, const TrafficPrediction&) = default;
};

// Per-element byte movement of a streaming kernel for one sweep, with
// write-allocate counted on every stored line that is not also loaded.
struct PerElementTraffic {
  int bytes_in = 0;
  int bytes_out = 0;
  int loads = 0;      // 8-byte loads per element
  int stores = 0;     // 8-byte stores per element
  bool arithmetic = false;  // carries a multiply-add per element
};

PerElementTraffic per_element_traffic(KernelId streaming_kernel);

// Number of 64-byte-aligned arrays the kernel touches.
int array_count(KernelId streaming_kernel);

// Closed-form traffic for a streaming kernel. The same per-sweep volume
// applies at every boundary once the working set exceeds the inner cache.
// elements must be positive and a multiple of 8 so vectors are line-aligned.
TrafficPrediction expected_traffic(KernelId kernel, Boundary boundary, std::uint64_t elements,
                                   std::uint64_t iterations);

// Brute-force check of expected_traffic: replays every scalar access of one
// sweep over line-aligned vectors and counts line fills (first read, or
// write-allocate on first write) and dirty-line evictions.
TrafficPrediction trace_oracle(KernelId kernel, std::uint64_t elements);

// Model count of AVX calculation instructions: two FLOPs per element, four
// lanes per instruction. Kernels without arithmetic yield 0. For
// triangular_mvm, `elements` is the per-thread matrix-element count.
double expected_avx_calc(KernelId kernel, std::uint64_t elements, std::uint64_t iterations);

// Work split of an upper-triangular n x n matrix over contiguous row blocks.
struct WorkPartition {
  std::vector<std::uint64_t> counts;  // matrix elements per thread
  std::vector<double> ratio;          // counts normalized to the smallest share

  std::uint64_t total() const;
  // Largest normalized share; equals counts[0]/counts[1] for two threads
  // with a heavier first block.
  double imbalance() const;
};

WorkPartition triangular_partition(std::uint64_t n, unsigned num_threads);

// Row ranges [first, last) backing triangular_partition, exposed for the
// kernel runner.
std::vector<std::pair<std::uint64_t, std::uint64_t>> triangular_row_blocks(std::uint64_t n,
                                                                           unsigned num_threads);

// Cache lines handed from producer to consumer over a whole run.
std::uint64_t false_sharing_model(std::uint64_t lines_per_step, std::uint64_t steps);

}  // namespace hpmval
