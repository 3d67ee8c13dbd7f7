#include "hpmval/backend.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hpmval/error.hpp"

namespace hpmval {

std::string_view to_string(BackendKind kind) { return kind == BackendKind::sim ? "sim" : "os"; }

BackendKind backend_from_string(std::string_view name) {
  if (name == "sim") return BackendKind::sim;
  if (name == "os") return BackendKind::os;
  throw Error("unknown backend '" + std::string(name) + "'");
}

std::string_view to_string(Erratum e) {
  switch (e) {
    case Erratum::hsw150_hitm_undercount: return "hsw150_hitm_undercount";
    case Erratum::avx_halfwide_overcount: return "avx_halfwide_overcount";
    case Erratum::hsw149_offcore_filters: return "hsw149_offcore_filters";
  }
  return "hsw150_hitm_undercount";
}

Erratum erratum_from_string(std::string_view name) {
  if (name == "hsw150_hitm_undercount" || name == "hsw150") {
    return Erratum::hsw150_hitm_undercount;
  }
  if (name == "avx_halfwide_overcount" || name == "halfwide") {
    return Erratum::avx_halfwide_overcount;
  }
  if (name == "hsw149_offcore_filters" || name == "hsw149") {
    return Erratum::hsw149_offcore_filters;
  }
  throw Error("unknown erratum '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (noise_epsilon < 0.0) throw Error("noise_epsilon must be >= 0");
  if (!(hsw150_factor_lo <= hsw150_factor_hi)) {
    throw Error("hsw150 factor range requires lo <= hi");
  }
  if (hsw150_factor_lo < 0.6 || hsw150_factor_hi > 1.0) {
    throw Error("hsw150 factor range must lie within [0.6, 1.0]");
  }
  if (bias_scale <= 0.0) throw Error("bias_scale must be positive");
}

std::size_t CountSample::event_index(std::string_view event) const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i] == event) return i;
  }
  throw Error("event '" + std::string(event) + "' is not part of this sample");
}

const Count& CountSample::at(std::size_t thread, std::string_view event) const {
  return per_thread.at(thread)[event_index(event)];
}

std::uint64_t CountSample::total(std::string_view event) const {
  std::size_t idx = event_index(event);
  std::uint64_t sum = 0;
  for (const auto& row : per_thread) sum += row[idx].value;
  return sum;
}

int core_counter_cap_for(const MachineModel& machine) { return machine.smt_enabled ? 4 : 8; }

namespace os_detail {
// Implemented in os_backend.cpp, where Session::OsState is complete.
std::unique_ptr<Session::OsState> os_open(const std::vector<EventSpec>& events);
void os_start(Session::OsState& state);
void os_stop(Session::OsState& state);
void os_collect(Session::OsState& state, std::size_t num_threads, CountSample& out);
}  // namespace os_detail

Session open_session(std::vector<EventSpec> events, std::vector<int> thread_cpus,
                     BackendKind kind, SessionOptions opts) {
  if (events.empty()) throw Error("session needs at least one event");
  if (thread_cpus.empty()) throw Error("session needs at least one thread");
  int core_events = 0;
  for (const EventSpec& e : events) {
    if (e.core_scoped()) ++core_events;
  }
  if (core_events > opts.core_counter_cap) {
    throw Error("event set needs " + std::to_string(core_events) +
                " core counters but the cap is " + std::to_string(opts.core_counter_cap));
  }

  Session s;
  s.kind_ = kind;
  s.events_ = std::move(events);
  s.thread_cpus_ = std::move(thread_cpus);
  if (kind == BackendKind::os) {
    s.os_ = os_detail::os_open(s.events_);
  }
  return s;
}

Session open_session(const EventSetGroup& group, std::vector<int> thread_cpus,
                     BackendKind kind, SessionOptions opts) {
  return open_session(group.events, std::move(thread_cpus), kind, opts);
}

void Session::start() {
  if (kind_ == BackendKind::os && os_) os_detail::os_start(*os_);
}

void Session::stop() {
  if (kind_ == BackendKind::os && os_) os_detail::os_stop(*os_);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// One independent uniform draw per (seed, event, thread, purpose) tuple, so
// enabling an erratum or adding an event never shifts another stream.
double uniform_draw(std::uint64_t seed, std::string_view event, unsigned thread,
                    std::uint64_t purpose, double lo, double hi) {
  std::uint64_t mixed = splitmix64(seed ^ splitmix64(fnv1a(event) + purpose) ^
                                   splitmix64(0xA5A5A5A5ULL + thread));
  std::mt19937_64 eng(mixed);
  double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

struct ModelCount {
  double value = 0.0;
  bool modeled = true;
};

enum class Direction { in, out };

double streaming_lines(KernelId k, std::uint64_t elements, std::uint64_t iterations,
                       Direction dir) {
  if (elements == 0) return 0.0;
  PerElementTraffic per = per_element_traffic(k);
  double bytes = static_cast<double>(dir == Direction::in ? per.bytes_in : per.bytes_out) *
                 static_cast<double>(elements) * static_cast<double>(iterations);
  return bytes / 64.0;
}

double streaming_avx_moves(KernelId k, std::uint64_t elements, std::uint64_t iterations,
                           bool stores) {
  PerElementTraffic per = per_element_traffic(k);
  double ops = static_cast<double>(stores ? per.stores : per.loads);
  return ops * static_cast<double>(elements) * static_cast<double>(iterations) / 4.0;
}

// Event roles shared by the mappings below.
bool is_in_event(std::string_view n) {
  return n == "L1D.REPLACEMENT" || n == "L2_LINES_IN.ALL" || n == "UNC_M_CAS_COUNT.RD" ||
         n == "UNC_H_IMC_READS.NORMAL" || n == "LLC_LOOKUP.DATA_READ" ||
         n == "OFFCORE_RESPONSE:ALL_READS:L3_MISS";
}

bool is_out_event(std::string_view n) {
  return n == "L2_TRANS.L1D_WB" || n == "L2_TRANS.L2_WB" || n == "UNC_M_CAS_COUNT.WR" ||
         n == "UNC_H_IMC_WRITES.ALL" || n == "LLC_VICTIMS.M_STATE" ||
         n == "OFFCORE_RESPONSE:ALL_RFO:L3_MISS";
}

bool is_hitm_event(std::string_view n) {
  return n == "MEM_LOAD_UOPS_L3_HIT_RETIRED.XSNP_HITM" ||
         n == "MEM_LOAD_UOPS_L3_MISS_RETIRED.REMOTE_HITM" ||
         n == "OFFCORE_RESPONSE:LLC_HIT:HITM_OTHER_CORE" ||
         n == "OFFCORE_RESPONSE:LLC_MISS:REMOTE_HITM";
}

bool is_intra_hitm(std::string_view n) {
  return n == "MEM_LOAD_UOPS_L3_HIT_RETIRED.XSNP_HITM" ||
         n == "OFFCORE_RESPONSE:LLC_HIT:HITM_OTHER_CORE";
}

ModelCount model_streaming(const EventSpec& e, const RunRecord& w, const SimConfig& cfg,
                           std::uint64_t elements) {
  const KernelId k = w.spec.kernel;
  const std::uint64_t iters = w.spec.iterations;
  const std::string_view n = e.name;
  if (is_in_event(n)) return {streaming_lines(k, elements, iters, Direction::in), true};
  if (is_out_event(n)) return {streaming_lines(k, elements, iters, Direction::out), true};
  if (n == "UNC_H_BYPASS_IMC.TAKEN") return {0.0, true};  // reads take the normal path
  if (n == "AVX_INSTS.CALC") {
    double count = expected_avx_calc(k, elements, iters);
    if (cfg.has(Erratum::avx_halfwide_overcount)) {
      count += static_cast<double>(cfg.halfwide_inserts_per_iteration) *
               static_cast<double>(iters);
    }
    return {count, true};
  }
  if (n == "AVX_INSTS.LOADS") return {streaming_avx_moves(k, elements, iters, false), true};
  if (n == "AVX_INSTS.STORES") return {streaming_avx_moves(k, elements, iters, true), true};
  if (n == "AVX_INSTS.ALL") {
    return {streaming_avx_moves(k, elements, iters, false) +
                streaming_avx_moves(k, elements, iters, true) +
                expected_avx_calc(k, elements, iters),
            true};
  }
  if (n == "ARITH.DIVIDER_UOPS") return {0.0, true};
  if (is_hitm_event(n)) return {0.0, true};  // disjoint streams share nothing
  return {0.0, false};
}

ModelCount model_triangular_mvm(const EventSpec& e, const RunRecord& w, const SimConfig& cfg,
                                std::uint64_t elements) {
  // Work-share model: the matrix streams once per sweep; the x/y vector
  // traffic is deliberately not modeled.
  const std::uint64_t iters = w.spec.iterations;
  const std::string_view n = e.name;
  const double bytes = static_cast<double>(elements) * 8.0 * static_cast<double>(iters);
  if (is_in_event(n)) return {bytes / 64.0, true};
  if (is_out_event(n)) return {0.0, true};
  if (n == "UNC_H_BYPASS_IMC.TAKEN") return {0.0, true};
  if (n == "AVX_INSTS.CALC") {
    double count = expected_avx_calc(KernelId::triangular_mvm, elements, iters);
    if (cfg.has(Erratum::avx_halfwide_overcount)) {
      count += static_cast<double>(cfg.halfwide_inserts_per_iteration) *
               static_cast<double>(iters);
    }
    return {count, true};
  }
  if (n == "AVX_INSTS.LOADS") {
    return {static_cast<double>(elements) * static_cast<double>(iters) / 4.0, true};
  }
  if (n == "AVX_INSTS.ALL") {
    return {static_cast<double>(elements) * static_cast<double>(iters) / 4.0 +
                expected_avx_calc(KernelId::triangular_mvm, elements, iters),
            true};
  }
  if (n == "ARITH.DIVIDER_UOPS") return {0.0, true};
  if (is_hitm_event(n)) return {0.0, true};
  return {0.0, false};
}

ModelCount model_producer_consumer(const EventSpec& e, const RunRecord& w, unsigned thread,
                                   bool& wants_hsw150) {
  const std::string_view n = e.name;
  if (is_hitm_event(n)) {
    // The consumer (thread 1) loads every line the producer dirtied.
    const bool intra = w.spec.placement == Placement::intra_socket;
    const bool event_is_intra = is_intra_hitm(n);
    double lines =
        static_cast<double>(false_sharing_model(w.spec.lines_per_step, w.spec.steps));
    if (thread == 1 && intra == event_is_intra) {
      wants_hsw150 = n == "MEM_LOAD_UOPS_L3_HIT_RETIRED.XSNP_HITM";
      return {lines, true};
    }
    return {0.0, true};
  }
  if (n == "AVX_INSTS.CALC" || n == "AVX_INSTS.LOADS" || n == "AVX_INSTS.STORES" ||
      n == "AVX_INSTS.ALL" || n == "ARITH.DIVIDER_UOPS") {
    return {0.0, true};  // scalar code only
  }
  return {0.0, false};
}

}  // namespace

CountSample sim_read(const Session& session, const RunRecord& workload,
                     const SimConfig& config) {
  config.validate();
  const std::size_t num_threads = session.thread_cpus().size();
  if (!workload.per_thread_work.empty() &&
      workload.per_thread_work.size() != num_threads) {
    throw SessionError("session observes " + std::to_string(num_threads) +
                       " threads but the workload ran " +
                       std::to_string(workload.per_thread_work.size()));
  }

  CountSample sample;
  for (const EventSpec& e : session.events()) sample.events.push_back(e.name);
  sample.per_thread.assign(num_threads, {});
  for (auto& row : sample.per_thread) row.resize(session.events().size());

  const KernelId kind = workload.spec.kernel;
  for (std::size_t ei = 0; ei < session.events().size(); ++ei) {
    const EventSpec& event = session.events()[ei];
    const bool uncore = !event.core_scoped();
    for (unsigned t = 0; t < num_threads; ++t) {
      ModelCount mc;
      bool wants_hsw150 = false;
      std::uint64_t work =
          t < workload.per_thread_work.size() ? workload.per_thread_work[t] : 0;
      if (is_streaming(kind)) {
        mc = model_streaming(event, workload, config, work);
      } else if (kind == KernelId::triangular_mvm) {
        mc = model_triangular_mvm(event, workload, config, work);
      } else {
        mc = model_producer_consumer(event, workload, t, wants_hsw150);
      }

      Count& out = sample.per_thread[t][ei];
      out.flags.uncore = uncore;
      out.flags.modeled = mc.modeled;
      if (!mc.modeled || mc.value <= 0.0) {
        out.value = 0;
        continue;
      }

      double draw = config.bias_scale;
      double scale_lo = config.bias_scale;
      double scale_hi = config.bias_scale;
      if (config.noise_epsilon > 0.0) {
        draw *= uniform_draw(config.rng_seed, event.name, t, 0x01, 1.0 - config.noise_epsilon,
                             1.0 + config.noise_epsilon);
        scale_lo *= 1.0 - config.noise_epsilon;
        scale_hi *= 1.0 + config.noise_epsilon;
      }
      if (wants_hsw150 && config.has(Erratum::hsw150_hitm_undercount)) {
        draw *= uniform_draw(config.rng_seed, event.name, t, 0x02, config.hsw150_factor_lo,
                             config.hsw150_factor_hi);
        scale_lo *= config.hsw150_factor_lo;
        scale_hi *= config.hsw150_factor_hi;
      }

      double raw = mc.value * draw;
      double lo_bound = std::ceil(mc.value * scale_lo * (1.0 - 1e-12));
      double hi_bound = std::floor(mc.value * scale_hi * (1.0 + 1e-12));
      double clamped = std::clamp(std::round(raw), std::max(lo_bound, 0.0), hi_bound);
      out.value = static_cast<std::uint64_t>(clamped);
    }
    if (uncore) {
      // Socket-scoped counts report once; the aggregate sits on thread 0.
      std::uint64_t sum = 0;
      for (unsigned t = 0; t < num_threads; ++t) sum += sample.per_thread[t][ei].value;
      for (unsigned t = 0; t < num_threads; ++t) sample.per_thread[t][ei].value = 0;
      sample.per_thread[0][ei].value = sum;
    }
  }
  return sample;
}

CountSample os_read(Session& session) {
  if (session.kind() != BackendKind::os) {
    throw SessionError("os_read requires a session opened on the os backend");
  }
  CountSample sample;
  for (const EventSpec& e : session.events()) sample.events.push_back(e.name);
  sample.per_thread.assign(session.thread_cpus().size(), {});
  for (auto& row : sample.per_thread) row.resize(session.events().size());
  os_detail::os_collect(*session.os_, session.thread_cpus().size(), sample);
  return sample;
}

}  // namespace hpmval
