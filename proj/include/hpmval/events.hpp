#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hpmval {

enum class CounterUnit : std::uint8_t { core, imc, ha, cbox, offcore_response };

std::string_view to_string(CounterUnit unit);
CounterUnit counter_unit_from_string(std::string_view name);

// One programmable hardware event. Uncore events (imc/ha/cbox) exist once per
// box; box_count records the multiplicity and is 0 for core-scoped units.
// Offcore-response events occupy core counters plus a request/response filter.
struct EventSpec {
  std::string name;
  CounterUnit unit = CounterUnit::core;
  std::uint8_t event_code = 0;
  std::uint8_t umask = 0;
  int box_count = 0;
  std::vector<std::pair<std::string, std::string>> filters;

  bool core_scoped() const {
    return unit == CounterUnit::core || unit == CounterUnit::offcore_response;
  }

  friend bool operator==(const EventSpec&, const EventSpec&) = default;
};

struct Metric {
  std::string name;
  std::string formula;

  friend bool operator==(const Metric&, const Metric&) = default;
};

// A performance group: a named event set plus formulas for derived metrics.
// Formulas reference events through canonical identifiers ('.'/':' -> '_')
// and may use the reserved symbol `time`.
struct EventSetGroup {
  std::string name;
  std::vector<EventSpec> events;
  std::vector<std::string> slots;  // counter-slot label per event, parallel to events
  std::vector<Metric> metrics;

  const EventSpec* find_event(std::string_view event_name) const;

  friend bool operator==(const EventSetGroup&, const EventSetGroup&) = default;
};

enum class PatternId : std::uint8_t { bandwidth_saturation, load_imbalance, false_sharing };

std::string_view to_string(PatternId id);
PatternId pattern_from_string(std::string_view name);

struct PatternRecord {
  PatternId id = PatternId::bandwidth_saturation;
  std::string description;
  std::vector<std::string> signature_groups;
  bool qualitative_only = false;
};

// Detection thresholds. These are system characteristics, not universal
// constants; the false-sharing values in particular are placeholders until a
// per-system calibration exists.
struct Thresholds {
  double saturation_fraction = 0.8;
  double imbalance_ratio = 1.5;
  double false_sharing_lines_per_s = 1.0e6;
  double false_sharing_lines_per_instr = 1.0e-3;
};

// User-supplied description of the machine being modeled. Never probed.
struct MachineModel {
  std::string name = "haswell_ep";
  int cache_line_bytes = 64;
  std::uint64_t l1_bytes = 32 * 1024;
  std::uint64_t l2_bytes = 256 * 1024;
  std::uint64_t l3_bytes = 35 * 1024 * 1024;
  int sockets = 2;
  int cores_per_socket = 14;
  int smt_threads = 2;
  bool smt_enabled = true;
  double peak_memory_bandwidth = 6.8e10;  // bytes/s
  Thresholds thresholds;

  // Throws Error unless all sizes are positive and L1 < L2 < L3.
  void validate() const;

  int logical_cpus_per_socket() const { return cores_per_socket * smt_threads; }
};

}  // namespace hpmval
