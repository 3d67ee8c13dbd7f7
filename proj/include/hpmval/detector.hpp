#pragma once

#include <map>
#include <string>
#include <vector>

#include "hpmval/events.hpp"

namespace hpmval {

struct PatternVerdict {
  PatternId pattern_id = PatternId::bandwidth_saturation;
  bool triggered = false;
  std::map<std::string, double> evidence;
  double threshold_used = 0.0;
  bool qualitative_only = false;
  std::vector<std::string> notes;
};

std::string to_json_string(const PatternVerdict& verdict);

// Triggered when the measured bandwidth reaches `fraction` of the machine's
// configured peak (boundary inclusive).
PatternVerdict detect_bandwidth_saturation(double measured_bw_bytes_per_s,
                                           const MachineModel& machine, double fraction = 0.8);

struct ThreadWork {
  double useful_ops = 0.0;
  double data_volume = 0.0;
};

// Imbalance ratio is max/min of useful operation counts when any thread
// reports them, otherwise max/min of data volumes (noted as a fallback).
// A zero minimum against a positive maximum counts as infinite imbalance.
PatternVerdict detect_load_imbalance(const std::vector<ThreadWork>& per_thread,
                                     double ratio_threshold = 1.5);

// Qualitative only: HITM counts cannot separate true from false sharing.
// Triggered when lines/s or lines/instruction reaches its threshold.
PatternVerdict classify_false_sharing(double hitm_lines, double region_runtime_s,
                                      double retired_instructions,
                                      double rate_threshold_lines_per_s,
                                      double per_instr_threshold);

}  // namespace hpmval
