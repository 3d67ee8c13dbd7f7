#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hpmval/events.hpp"
#include "hpmval/kernels.hpp"

namespace hpmval {

enum class BackendKind : std::uint8_t { sim, os };

std::string_view to_string(BackendKind kind);
BackendKind backend_from_string(std::string_view name);

enum class Erratum : std::uint8_t {
  hsw150_hitm_undercount,   // intra-socket HITM loads undercount by up to 40%
  avx_halfwide_overcount,   // vinsertf128 counted as an AVX calculation
  hsw149_offcore_filters,   // recognized but has no emulation
};

std::string_view to_string(Erratum e);
Erratum erratum_from_string(std::string_view name);

// Simulated-backend knobs. Noise is multiplicative uniform in
// [1-eps, 1+eps], drawn independently per event per read from streams
// derived from rng_seed, so toggling one erratum never shifts another
// event's draws.
struct SimConfig {
  double noise_epsilon = 0.0;
  std::uint64_t rng_seed = 0x5EED;
  std::set<Erratum> errata;
  double hsw150_factor_lo = 0.6;
  double hsw150_factor_hi = 1.0;
  std::uint64_t halfwide_inserts_per_iteration = 16;
  double bias_scale = 1.0;  // test hook: scales every modeled count

  void validate() const;
  bool has(Erratum e) const { return errata.count(e) != 0; }
};

struct CountFlags {
  bool uncore = false;       // socket-scoped count attributed to thread 0
  bool modeled = true;       // false: no model for this event and workload
  bool unavailable = false;  // OS backend could not program the event
  bool hardware = false;     // value came from real counters
};

struct Count {
  std::uint64_t value = 0;
  CountFlags flags;
};

// Per-thread counts for every configured event. Uncore events appear for
// every thread to keep the shape uniform; the aggregate sits on thread 0
// and the remaining threads hold zero, all marked `uncore`.
struct CountSample {
  std::vector<std::string> events;            // configured order
  std::vector<std::vector<Count>> per_thread; // [thread][event index]

  const Count& at(std::size_t thread, std::string_view event) const;
  std::uint64_t total(std::string_view event) const;
  std::size_t event_index(std::string_view event) const;  // throws Error
};

struct SessionOptions {
  int core_counter_cap = 4;  // 8 when SMT is off
};

int core_counter_cap_for(const MachineModel& machine);

// A configured counter session: the event list, the observed threads and
// the backend behind them. Owned by one orchestrating thread.
class Session {
 public:
  BackendKind kind() const { return kind_; }
  const std::vector<EventSpec>& events() const { return events_; }
  const std::vector<int>& thread_cpus() const { return thread_cpus_; }

  // OS backend region control; no-ops for the simulated backend.
  void start();
  void stop();

  ~Session();
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

 private:
  friend Session open_session(std::vector<EventSpec>, std::vector<int>, BackendKind,
                              SessionOptions);
  friend CountSample os_read(Session& session);
  Session() = default;

  BackendKind kind_ = BackendKind::sim;
  std::vector<EventSpec> events_;
  std::vector<int> thread_cpus_;
  struct OsState;
  std::unique_ptr<OsState> os_;
};

// Validates the event list against counter-slot limits and, for the OS
// backend, programs the events. Throws Error when the core-event count
// exceeds the cap, CapabilityError when the backend cannot serve the
// event set on this host, SessionError on OS-level failures.
Session open_session(std::vector<EventSpec> events, std::vector<int> thread_cpus,
                     BackendKind kind, SessionOptions opts = {});
Session open_session(const EventSetGroup& group, std::vector<int> thread_cpus,
                     BackendKind kind, SessionOptions opts = {});

// Deterministic model counts for a finished workload, with noise and errata
// applied. Pure: identical (workload, config) pairs produce identical
// samples. With noise_epsilon zero and no errata the counts equal the
// traffic model exactly.
CountSample sim_read(const Session& session, const RunRecord& workload, const SimConfig& config);

// Whatever the operating system reports; no accuracy contract.
CountSample os_read(Session& session);

}  // namespace hpmval
