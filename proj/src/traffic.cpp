#include "hpmval/traffic.hpp"

#include <algorithm>
#include <set>

#include "hpmval/error.hpp"

namespace hpmval {

std::string_view to_string(KernelId id) {
  switch (id) {
    case KernelId::load: return "load";
    case KernelId::store: return "store";
    case KernelId::copy: return "copy";
    case KernelId::stream: return "stream";
    case KernelId::daxpy: return "daxpy";
    case KernelId::triad: return "triad";
    case KernelId::ddot: return "ddot";
    case KernelId::triangular_mvm: return "triangular_mvm";
    case KernelId::producer_consumer: return "producer_consumer";
  }
  return "load";
}

KernelId kernel_from_string(std::string_view name) {
  for (KernelId id : {KernelId::load, KernelId::store, KernelId::copy, KernelId::stream,
                      KernelId::daxpy, KernelId::triad, KernelId::ddot,
                      KernelId::triangular_mvm, KernelId::producer_consumer}) {
    if (to_string(id) == name) return id;
  }
  throw Error("unknown kernel '" + std::string(name) + "'");
}

bool is_streaming(KernelId id) {
  switch (id) {
    case KernelId::load:
    case KernelId::store:
    case KernelId::copy:
    case KernelId::stream:
    case KernelId::daxpy:
    case KernelId::triad:
    case KernelId::ddot:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(Boundary b) {
  switch (b) {
    case Boundary::L1_L2: return "L1_L2";
    case Boundary::L2_L3: return "L2_L3";
    case Boundary::L3_MEM: return "L3_MEM";
  }
  return "L3_MEM";
}

PerElementTraffic per_element_traffic(KernelId k) {
  switch (k) {
    case KernelId::load:   return {8, 0, 1, 0, false};   // s += A[i]
    case KernelId::store:  return {8, 8, 0, 1, false};   // A[i] = c, allocate + write back
    case KernelId::copy:   return {16, 8, 1, 1, false};  // A[i] = B[i]
    case KernelId::stream: return {24, 8, 2, 1, true};   // A[i] = B[i]*c + C[i]
    case KernelId::daxpy:  return {16, 8, 2, 1, true};   // A[i] = B[i]*c + A[i], load of A doubles as the allocate
    case KernelId::triad:  return {32, 8, 3, 1, true};   // A[i] = B[i]*C[i] + D[i]
    case KernelId::ddot:   return {16, 0, 2, 0, true};   // s += A[i]*B[i]
    default:
      throw Error("per-element traffic undefined for kernel '" +
                  std::string(to_string(k)) + "'");
  }
}

int array_count(KernelId k) {
  switch (k) {
    case KernelId::load:
    case KernelId::store:
      return 1;
    case KernelId::copy:
    case KernelId::daxpy:
    case KernelId::ddot:
      return 2;
    case KernelId::stream:
      return 3;
    case KernelId::triad:
      return 4;
    default:
      throw Error("array count undefined for kernel '" + std::string(to_string(k)) + "'");
  }
}

namespace {

void require_streaming_elements(KernelId k, std::uint64_t elements) {
  if (!is_streaming(k)) {
    throw Error("kernel '" + std::string(to_string(k)) + "' is not a streaming kernel");
  }
  if (elements == 0) throw Error("element count must be positive");
  if (elements % 8 != 0) {
    throw Error("element count must be a multiple of 8 to keep vectors line-aligned");
  }
}

}  // namespace

TrafficPrediction expected_traffic(KernelId kernel, Boundary boundary, std::uint64_t elements,
                                   std::uint64_t iterations) {
  require_streaming_elements(kernel, elements);
  if (iterations == 0) throw Error("iteration count must be positive");
  PerElementTraffic per = per_element_traffic(kernel);
  TrafficPrediction p;
  p.boundary = boundary;
  p.bytes_in = static_cast<std::uint64_t>(per.bytes_in) * elements * iterations;
  p.bytes_out = static_cast<std::uint64_t>(per.bytes_out) * elements * iterations;
  return p;
}

namespace {

struct AccessTrace {
  // One scalar access: array index, element index, write flag.
  struct Access {
    int array;
    std::uint64_t element;
    bool write;
  };
  std::vector<Access> per_element;  // template replayed for every i
};

AccessTrace trace_for(KernelId k) {
  // Array 0 is the destination (or the only vector), arrays 1..3 are inputs.
  AccessTrace t;
  switch (k) {
    case KernelId::load:
      t.per_element = {{0, 0, false}};
      break;
    case KernelId::store:
      t.per_element = {{0, 0, true}};
      break;
    case KernelId::copy:
      t.per_element = {{1, 0, false}, {0, 0, true}};
      break;
    case KernelId::stream:
      t.per_element = {{1, 0, false}, {2, 0, false}, {0, 0, true}};
      break;
    case KernelId::daxpy:
      t.per_element = {{1, 0, false}, {0, 0, false}, {0, 0, true}};
      break;
    case KernelId::triad:
      t.per_element = {{1, 0, false}, {2, 0, false}, {3, 0, false}, {0, 0, true}};
      break;
    case KernelId::ddot:
      t.per_element = {{0, 0, false}, {1, 0, false}};
      break;
    default:
      throw Error("no access trace for kernel '" + std::string(to_string(k)) + "'");
  }
  return t;
}

}  // namespace

TrafficPrediction trace_oracle(KernelId kernel, std::uint64_t elements) {
  require_streaming_elements(kernel, elements);
  if (elements > 1'000'000) {
    throw Error("trace oracle capped at 1e6 elements");
  }
  constexpr std::uint64_t kLineBytes = 64;
  constexpr std::uint64_t kElemBytes = 8;

  AccessTrace trace = trace_for(kernel);
  std::set<std::pair<int, std::uint64_t>> present;
  std::set<std::pair<int, std::uint64_t>> dirty;
  std::uint64_t lines_in = 0;

  for (std::uint64_t i = 0; i < elements; ++i) {
    for (const auto& a : trace.per_element) {
      std::pair<int, std::uint64_t> line{a.array, i * kElemBytes / kLineBytes};
      if (present.insert(line).second) ++lines_in;  // first touch fills the line
      if (a.write) dirty.insert(line);              // dirty lines are written back
    }
  }

  TrafficPrediction p;
  p.boundary = Boundary::L3_MEM;
  p.bytes_in = lines_in * kLineBytes;
  p.bytes_out = static_cast<std::uint64_t>(dirty.size()) * kLineBytes;
  return p;
}

double expected_avx_calc(KernelId kernel, std::uint64_t elements, std::uint64_t iterations) {
  switch (kernel) {
    case KernelId::stream:
    case KernelId::daxpy:
    case KernelId::triad:
    case KernelId::ddot:
    case KernelId::triangular_mvm:
      // One multiply and one add per element, four 8-byte lanes per
      // instruction.
      return static_cast<double>(elements) * static_cast<double>(iterations) * 2.0 / 4.0;
    default:
      return 0.0;
  }
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> triangular_row_blocks(
    std::uint64_t n, unsigned num_threads) {
  if (num_threads == 0) throw Error("thread count must be positive");
  if (n < num_threads) throw Error("matrix order smaller than thread count");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> blocks;
  blocks.reserve(num_threads);
  for (unsigned t = 0; t < num_threads; ++t) {
    std::uint64_t first = n * t / num_threads;
    std::uint64_t last = n * (t + 1) / num_threads;
    blocks.emplace_back(first, last);
  }
  return blocks;
}

WorkPartition triangular_partition(std::uint64_t n, unsigned num_threads) {
  WorkPartition part;
  for (auto [first, last] : triangular_row_blocks(n, num_threads)) {
    // Row i of an upper triangle holds n - i elements.
    std::uint64_t count = 0;
    for (std::uint64_t i = first; i < last; ++i) count += n - i;
    part.counts.push_back(count);
  }
  std::uint64_t smallest = *std::min_element(part.counts.begin(), part.counts.end());
  part.ratio.reserve(part.counts.size());
  for (std::uint64_t c : part.counts) {
    part.ratio.push_back(smallest == 0 ? 0.0
                                       : static_cast<double>(c) / static_cast<double>(smallest));
  }
  return part;
}

std::uint64_t WorkPartition::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t c : counts) sum += c;
  return sum;
}

double WorkPartition::imbalance() const {
  return ratio.empty() ? 0.0 : *std::max_element(ratio.begin(), ratio.end());
}

std::uint64_t false_sharing_model(std::uint64_t lines_per_step, std::uint64_t steps) {
  if (lines_per_step == 0 || steps == 0) {
    throw Error("lines_per_step and steps must be positive");
  }
  return lines_per_step * steps;
}

}  // namespace hpmval
