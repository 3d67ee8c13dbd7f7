#include "hpmval/events.hpp"

#include "hpmval/error.hpp"

namespace hpmval {

std::string_view to_string(CounterUnit unit) {
  switch (unit) {
    case CounterUnit::core: return "core";
    case CounterUnit::imc: return "imc";
    case CounterUnit::ha: return "ha";
    case CounterUnit::cbox: return "cbox";
    case CounterUnit::offcore_response: return "offcore_response";
  }
  return "core";
}

CounterUnit counter_unit_from_string(std::string_view name) {
  if (name == "core") return CounterUnit::core;
  if (name == "imc") return CounterUnit::imc;
  if (name == "ha") return CounterUnit::ha;
  if (name == "cbox") return CounterUnit::cbox;
  if (name == "offcore_response") return CounterUnit::offcore_response;
  throw Error("unknown counter unit '" + std::string(name) + "'");
}

const EventSpec* EventSetGroup::find_event(std::string_view event_name) const {
  for (const EventSpec& e : events) {
    if (e.name == event_name) return &e;
  }
  return nullptr;
}

std::string_view to_string(PatternId id) {
  switch (id) {
    case PatternId::bandwidth_saturation: return "bandwidth_saturation";
    case PatternId::load_imbalance: return "load_imbalance";
    case PatternId::false_sharing: return "false_sharing";
  }
  return "bandwidth_saturation";
}

PatternId pattern_from_string(std::string_view name) {
  if (name == "bandwidth_saturation" || name == "saturation") {
    return PatternId::bandwidth_saturation;
  }
  if (name == "load_imbalance" || name == "imbalance") return PatternId::load_imbalance;
  if (name == "false_sharing") return PatternId::false_sharing;
  throw Error("unknown pattern '" + std::string(name) + "'");
}

void MachineModel::validate() const {
  if (cache_line_bytes <= 0) throw Error("machine model: cache_line_bytes must be positive");
  if (l1_bytes == 0 || l2_bytes == 0 || l3_bytes == 0) {
    throw Error("machine model: cache sizes must be positive");
  }
  if (!(l1_bytes < l2_bytes && l2_bytes < l3_bytes)) {
    throw Error("machine model: cache sizes must satisfy L1 < L2 < L3");
  }
  if (sockets <= 0 || cores_per_socket <= 0 || smt_threads <= 0) {
    throw Error("machine model: topology counts must be positive");
  }
  if (peak_memory_bandwidth <= 0.0) {
    throw Error("machine model: peak_memory_bandwidth must be positive");
  }
}

}  // namespace hpmval
