#include "hpmval/kernels.hpp"

#include <atomic>
#include <barrier>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <thread>

#include "hpmval/error.hpp"

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace hpmval {

std::string_view to_string(CacheLevel level) {
  switch (level) {
    case CacheLevel::L2: return "L2";
    case CacheLevel::L3: return "L3";
    case CacheLevel::MEM: return "MEM";
  }
  return "MEM";
}

CacheLevel cache_level_from_string(std::string_view name) {
  if (name == "L2") return CacheLevel::L2;
  if (name == "L3") return CacheLevel::L3;
  if (name == "MEM") return CacheLevel::MEM;
  throw Error("unknown cache level '" + std::string(name) + "'");
}

Boundary boundary_for_level(CacheLevel level) {
  switch (level) {
    case CacheLevel::L2: return Boundary::L1_L2;
    case CacheLevel::L3: return Boundary::L2_L3;
    case CacheLevel::MEM: return Boundary::L3_MEM;
  }
  return Boundary::L3_MEM;
}

std::string_view to_string(Placement p) {
  return p == Placement::intra_socket ? "intra_socket" : "inter_socket";
}

namespace {

constexpr std::size_t kAlign = 64;

struct FreeDeleter {
  void operator()(double* p) const { std::free(p); }
};

using AlignedArray = std::unique_ptr<double[], FreeDeleter>;

AlignedArray alloc_doubles(std::uint64_t n) {
  std::size_t bytes = (static_cast<std::size_t>(n) * sizeof(double) + kAlign - 1) / kAlign * kAlign;
  void* p = std::aligned_alloc(kAlign, bytes);
  if (p == nullptr) throw Error("allocation of " + std::to_string(bytes) + " bytes failed");
  return AlignedArray(static_cast<double*>(p));
}

// Keeps the optimizer from collapsing repeated sweeps.
inline void clobber_memory() { asm volatile("" ::: "memory"); }

template <typename T>
inline void do_not_optimize(const T& value) {
  asm volatile("" : : "r,m"(value) : "memory");
}

inline void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_ia32_pause();
#else
  std::this_thread::yield();
#endif
}

bool pin_current_thread(int cpu) {
#if defined(__linux__)
  if (cpu < 0) return true;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
#else
  (void)cpu;
  return cpu < 0;
#endif
}

double seconds_since(std::chrono::steady_clock::time_point t0,
                     std::chrono::steady_clock::time_point t1) {
  double s = std::chrono::duration<double>(t1 - t0).count();
  // Clocks can report identical ticks for very short regions.
  return s > 0.0 ? s : 1e-9;
}

// Spawns one worker per entry of `cpus`, brackets `body` between entry and
// exit barriers and measures the wall time of the bracketed region.
struct TeamOutcome {
  double runtime_s = 0.0;
  bool all_pinned = true;
};

template <typename Body>
TeamOutcome run_team(const std::vector<int>& cpus, Body&& body) {
  const unsigned num_threads = static_cast<unsigned>(cpus.size());
  std::barrier sync(static_cast<std::ptrdiff_t>(num_threads) + 1);
  std::atomic<bool> all_pinned{true};

  std::vector<std::thread> team;
  team.reserve(num_threads);
  for (unsigned t = 0; t < num_threads; ++t) {
    team.emplace_back([&, t] {
      if (!pin_current_thread(cpus[t])) all_pinned.store(false, std::memory_order_relaxed);
      body(t, sync);
    });
  }

  sync.arrive_and_wait();  // workers finished init
  auto t0 = std::chrono::steady_clock::now();
  sync.arrive_and_wait();  // workers finished the measured region
  auto t1 = std::chrono::steady_clock::now();
  for (std::thread& th : team) th.join();

  return {seconds_since(t0, t1), all_pinned.load()};
}

void validate_streaming_spec(const KernelSpec& spec) {
  if (!is_streaming(spec.kernel)) {
    throw Error("run_streaming requires a streaming kernel");
  }
  if (spec.elements == 0 || spec.elements % 8 != 0) {
    throw Error("elements must be a positive multiple of 8");
  }
  if (spec.iterations == 0) throw Error("iterations must be positive");
  if (spec.cpus.empty()) throw Error("thread list must not be empty");
  for (std::size_t i = 0; i < spec.cpus.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.cpus.size(); ++j) {
      if (spec.cpus[i] >= 0 && spec.cpus[i] == spec.cpus[j]) {
        throw Error("thread list contains duplicate CPU ids");
      }
    }
  }
}

}  // namespace

std::uint64_t size_for_level(CacheLevel level, const MachineModel& machine, int num_arrays) {
  machine.validate();
  if (num_arrays <= 0) throw Error("num_arrays must be positive");
  const std::uint64_t per_element = static_cast<std::uint64_t>(num_arrays) * 8;

  auto round_up8 = [](std::uint64_t e) { return (e + 7) / 8 * 8; };

  if (level == CacheLevel::MEM) {
    // No upper bound; anything at least four L3 capacities qualifies.
    std::uint64_t min_bytes = 4 * machine.l3_bytes;
    return round_up8((min_bytes + per_element - 1) / per_element);
  }

  std::uint64_t inner = level == CacheLevel::L2 ? machine.l1_bytes : machine.l2_bytes;
  std::uint64_t target = level == CacheLevel::L2 ? machine.l2_bytes : machine.l3_bytes;
  std::uint64_t min_bytes = 2 * inner;
  std::uint64_t max_bytes = target / 2;
  std::uint64_t lo = round_up8((min_bytes + per_element - 1) / per_element);
  std::uint64_t hi = max_bytes / per_element / 8 * 8;
  if (lo > hi || hi == 0) {
    throw Error("no working-set size streams through " + std::string(to_string(level)) +
                " for this machine model");
  }
  // Midpoint of the feasible window, kept line-aligned.
  std::uint64_t mid = round_up8((lo + hi) / 2);
  return std::min(mid, hi);
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> chunk_bounds(std::uint64_t elements,
                                                                  unsigned num_threads) {
  if (num_threads == 0) throw Error("thread count must be positive");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bounds;
  bounds.reserve(num_threads);
  const std::uint64_t blocks = elements / 8;
  for (unsigned t = 0; t < num_threads; ++t) {
    std::uint64_t first = blocks * t / num_threads * 8;
    std::uint64_t last = blocks * (t + 1) / num_threads * 8;
    bounds.emplace_back(first, last);
  }
  return bounds;
}

RunRecord run_streaming(const KernelSpec& spec) {
  validate_streaming_spec(spec);
  const unsigned num_threads = static_cast<unsigned>(spec.cpus.size());
  const int arrays = array_count(spec.kernel);
  const double c = spec.scalar;

  std::vector<AlignedArray> buf;
  for (int a = 0; a < arrays; ++a) buf.push_back(alloc_doubles(spec.elements));
  double* v[4] = {nullptr, nullptr, nullptr, nullptr};
  for (int a = 0; a < arrays; ++a) v[a] = buf[static_cast<std::size_t>(a)].get();

  auto chunks = chunk_bounds(spec.elements, num_threads);
  std::vector<double> partial(num_threads, 0.0);

  const KernelId k = spec.kernel;
  const bool dst_is_output = k == KernelId::store || k == KernelId::copy ||
                             k == KernelId::stream || k == KernelId::daxpy ||
                             k == KernelId::triad;

  auto outcome = run_team(spec.cpus, [&](unsigned t, std::barrier<>& sync) {
    auto [lo, hi] = chunks[t];
    // First-touch init by the owning thread: inputs 1.0, destination 0.0.
    for (int a = 0; a < arrays; ++a) {
      double init = (a == 0 && dst_is_output) ? 0.0 : 1.0;
      for (std::uint64_t i = lo; i < hi; ++i) v[a][i] = init;
    }

    sync.arrive_and_wait();
    double s = 0.0;
    for (std::uint64_t it = 0; it < spec.iterations; ++it) {
      switch (k) {
        case KernelId::load: {
          s = 0.0;
          for (std::uint64_t i = lo; i < hi; ++i) s += v[0][i];
          break;
        }
        case KernelId::store:
          for (std::uint64_t i = lo; i < hi; ++i) v[0][i] = c;
          break;
        case KernelId::copy:
          for (std::uint64_t i = lo; i < hi; ++i) v[0][i] = v[1][i];
          break;
        case KernelId::stream:
          for (std::uint64_t i = lo; i < hi; ++i) v[0][i] = v[1][i] * c + v[2][i];
          break;
        case KernelId::daxpy:
          for (std::uint64_t i = lo; i < hi; ++i) v[0][i] = v[1][i] * c + v[0][i];
          break;
        case KernelId::triad:
          for (std::uint64_t i = lo; i < hi; ++i) v[0][i] = v[1][i] * v[2][i] + v[3][i];
          break;
        case KernelId::ddot: {
          s = 0.0;
          for (std::uint64_t i = lo; i < hi; ++i) s += v[0][i] * v[1][i];
          break;
        }
        default:
          break;
      }
      do_not_optimize(s);
      clobber_memory();
    }
    partial[t] = s;
    sync.arrive_and_wait();
  });

  RunRecord rec;
  rec.spec = spec;
  rec.runtime_s = outcome.runtime_s;
  rec.pinned = outcome.all_pinned;
  for (auto [lo, hi] : chunks) rec.per_thread_work.push_back(hi - lo);

  if (dst_is_output) {
    double sum = 0.0;
    for (std::uint64_t i = 0; i < spec.elements; ++i) sum += v[0][i];
    rec.checksum = sum;
  } else {
    // Reduction kernels: combine per-thread partials in thread order.
    double sum = 0.0;
    for (double p : partial) sum += p;
    rec.checksum = sum;
  }
  return rec;
}

RunRecord run_triangular_mvm(std::uint64_t n, std::uint64_t iterations, unsigned num_threads,
                             const std::vector<int>& cpus) {
  if (n < 2) throw Error("matrix order too small to split");
  if (iterations == 0) throw Error("iterations must be positive");
  if (num_threads == 0) throw Error("thread count must be positive");
  std::vector<int> team_cpus = cpus;
  if (team_cpus.empty()) team_cpus.assign(num_threads, -1);
  if (team_cpus.size() != num_threads) {
    throw Error("cpu list size does not match thread count");
  }

  auto blocks = triangular_row_blocks(n, num_threads);
  WorkPartition part = triangular_partition(n, num_threads);

  // Shared x, shared y; each thread owns its packed row block of U.
  AlignedArray x = alloc_doubles(n);
  AlignedArray y = alloc_doubles(n);
  for (std::uint64_t j = 0; j < n; ++j) x.get()[j] = 1.0;

  std::vector<AlignedArray> u(num_threads);
  std::barrier sweep_sync(static_cast<std::ptrdiff_t>(num_threads));

  auto outcome = run_team(team_cpus, [&](unsigned t, std::barrier<>& sync) {
    auto [r0, r1] = blocks[t];
    u[t] = alloc_doubles(part.counts[t]);
    double* ut = u[t].get();
    for (std::uint64_t i = 0; i < part.counts[t]; ++i) ut[i] = 1.0;
    for (std::uint64_t i = r0; i < r1; ++i) y.get()[i] = 0.0;

    sync.arrive_and_wait();
    for (std::uint64_t it = 0; it < iterations; ++it) {
      const double* row = ut;
      for (std::uint64_t i = r0; i < r1; ++i) {
        const std::uint64_t len = n - i;
        double s = 0.0;
        for (std::uint64_t j = 0; j < len; ++j) s += row[j] * x.get()[i + j];
        y.get()[i] = s;
        row += len;
      }
      clobber_memory();
      sweep_sync.arrive_and_wait();
    }
    sync.arrive_and_wait();
  });

  RunRecord rec;
  rec.spec.kernel = KernelId::triangular_mvm;
  rec.spec.matrix_n = n;
  rec.spec.iterations = iterations;
  rec.spec.cpus = team_cpus;
  rec.runtime_s = outcome.runtime_s;
  rec.pinned = outcome.all_pinned;
  rec.per_thread_work = part.counts;
  double sum = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) sum += y.get()[i];
  rec.checksum = sum;
  return rec;
}

std::pair<std::array<int, 2>, bool> placement_cpus(Placement placement,
                                                   const MachineModel& machine) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (placement == Placement::inter_socket) {
    int remote = machine.logical_cpus_per_socket();
    if (machine.sockets >= 2 && static_cast<unsigned>(remote) < hw) {
      return {{0, remote}, false};
    }
    return {{0, 1}, true};  // not enough sockets/CPUs; stay local
  }
  return {{0, 1}, false};
}

RunRecord run_producer_consumer(std::uint64_t lines_per_step, std::uint64_t steps,
                                Placement placement, const MachineModel& machine) {
  if (lines_per_step == 0 || steps == 0) {
    throw Error("lines_per_step and steps must be positive");
  }
  auto [cpus, fallback] = placement_cpus(placement, machine);

  const std::uint64_t doubles_per_step = lines_per_step * 8;
  const std::uint64_t total = doubles_per_step * steps;
  AlignedArray buf = alloc_doubles(total);

  std::atomic<std::uint32_t> flag{0};
  double consumer_sum = 0.0;

  auto wait_for = [&flag](std::uint32_t want) {
    unsigned spins = 0;
    while (flag.load(std::memory_order_acquire) != want) {
      cpu_relax();
      if (++spins % 1024 == 0) std::this_thread::yield();
    }
  };

  auto outcome = run_team({cpus[0], cpus[1]}, [&](unsigned t, std::barrier<>& sync) {
    if (t == 0) {
      // Producer owns the buffer pages.
      for (std::uint64_t i = 0; i < total; ++i) buf.get()[i] = 0.0;
    }
    sync.arrive_and_wait();
    if (t == 0) {
      for (std::uint64_t s = 0; s < steps; ++s) {
        wait_for(0);
        double* base = buf.get() + s * doubles_per_step;
        for (std::uint64_t i = 0; i < doubles_per_step; ++i) {
          base[i] = static_cast<double>(s * doubles_per_step + i + 1);
        }
        flag.store(1, std::memory_order_release);
      }
    } else {
      double sum = 0.0;
      for (std::uint64_t s = 0; s < steps; ++s) {
        wait_for(1);
        const double* base = buf.get() + s * doubles_per_step;
        for (std::uint64_t i = 0; i < doubles_per_step; ++i) sum += base[i];
        flag.store(0, std::memory_order_release);
      }
      consumer_sum = sum;
    }
    sync.arrive_and_wait();
  });

  RunRecord rec;
  rec.spec.kernel = KernelId::producer_consumer;
  rec.spec.lines_per_step = lines_per_step;
  rec.spec.steps = steps;
  rec.spec.placement = placement;
  rec.spec.cpus = {cpus[0], cpus[1]};
  rec.runtime_s = outcome.runtime_s;
  rec.pinned = outcome.all_pinned;
  rec.placement_fallback = fallback;
  rec.checksum = consumer_sum;
  std::uint64_t lines_total = lines_per_step * steps;
  rec.per_thread_work = {lines_total, lines_total};
  return rec;
}

}  // namespace hpmval
