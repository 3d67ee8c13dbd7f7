#include "hpmval/registry.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "hpmval/error.hpp"
#include "hpmval/expr.hpp"

namespace hpmval {

Architecture::Architecture(std::string name, std::vector<EventSpec> events)
    : name_(std::move(name)), events_(std::move(events)) {
  std::set<std::string_view> seen;
  for (const EventSpec& e : events_) {
    if (!seen.insert(e.name).second) {
      throw Error("duplicate event '" + e.name + "' in architecture " + name_);
    }
    if (e.core_scoped() && e.box_count != 0) {
      throw Error("core event '" + e.name + "' must not carry a box index");
    }
    if (!e.core_scoped() && e.box_count < 1) {
      throw Error("uncore event '" + e.name + "' needs a box multiplicity >= 1");
    }
  }
}

const EventSpec* Architecture::find(std::string_view event_name) const {
  for (const EventSpec& e : events_) {
    if (e.name == event_name) return &e;
  }
  return nullptr;
}

const EventSpec& Architecture::at(std::string_view event_name) const {
  if (const EventSpec* e = find(event_name)) return *e;
  throw Error("unknown event '" + std::string(event_name) + "' for architecture " + name_);
}

namespace {

EventSpec core(std::string name, std::uint8_t code, std::uint8_t umask) {
  return EventSpec{std::move(name), CounterUnit::core, code, umask, 0, {}};
}

EventSpec uncore(std::string name, CounterUnit unit, std::uint8_t code, std::uint8_t umask,
                 int boxes) {
  return EventSpec{std::move(name), unit, code, umask, boxes, {}};
}

EventSpec offcore(std::string name, std::uint8_t code, std::uint8_t umask,
                  std::string request, std::string response) {
  EventSpec e{std::move(name), CounterUnit::offcore_response, code, umask, 0, {}};
  e.filters.emplace_back("request", std::move(request));
  e.filters.emplace_back("response", std::move(response));
  return e;
}

std::vector<EventSpec> haswell_ep_events() {
  std::vector<EventSpec> ev;
  // Core cache traffic.
  ev.push_back(core("L1D.REPLACEMENT", 0x51, 0x01));
  ev.push_back(core("L2_TRANS.L1D_WB", 0xF0, 0x10));
  ev.push_back(core("L2_LINES_IN.ALL", 0xF1, 0x07));
  ev.push_back(core("L2_TRANS.L2_WB", 0xF0, 0x40));
  // Instruction-stream filters. Event 0xC6 splits into loads 0x01,
  // stores 0x02 and calculations 0x04; 0x07 covers all of them.
  ev.push_back(core("AVX_INSTS.LOADS", 0xC6, 0x01));
  ev.push_back(core("AVX_INSTS.STORES", 0xC6, 0x02));
  ev.push_back(core("AVX_INSTS.CALC", 0xC6, 0x04));
  ev.push_back(core("AVX_INSTS.ALL", 0xC6, 0x07));
  ev.push_back(core("ARITH.DIVIDER_UOPS", 0x14, 0x02));
  ev.push_back(core("INSTR_RETIRED.ANY", 0xC0, 0x00));
  // Shared-line snoops.
  ev.push_back(core("MEM_LOAD_UOPS_L3_HIT_RETIRED.XSNP_HITM", 0xD2, 0x04));
  ev.push_back(core("MEM_LOAD_UOPS_L3_MISS_RETIRED.REMOTE_HITM", 0xD3, 0x10));
  // Offcore response unit (core counter + request/response filter).
  ev.push_back(offcore("OFFCORE_RESPONSE:LLC_HIT:HITM_OTHER_CORE", 0xB7, 0x01, "ALL_READS",
                       "LLC_HIT.HITM_OTHER_CORE"));
  ev.push_back(offcore("OFFCORE_RESPONSE:LLC_MISS:REMOTE_HITM", 0xB7, 0x01, "ALL_READS",
                       "LLC_MISS.REMOTE_HITM"));
  ev.push_back(offcore("OFFCORE_RESPONSE:ALL_READS:L3_MISS", 0xB7, 0x01, "ALL_READS",
                       "L3_MISS.ANY"));
  ev.push_back(offcore("OFFCORE_RESPONSE:ALL_RFO:L3_MISS", 0xB7, 0x01, "ALL_RFO",
                       "L3_MISS.ANY"));
  // Uncore: memory controllers, home agent, L3 segments.
  ev.push_back(uncore("UNC_M_CAS_COUNT.RD", CounterUnit::imc, 0x04, 0x03, 4));
  ev.push_back(uncore("UNC_M_CAS_COUNT.WR", CounterUnit::imc, 0x04, 0x0C, 4));
  ev.push_back(uncore("UNC_H_IMC_READS.NORMAL", CounterUnit::ha, 0x17, 0x01, 2));
  ev.push_back(uncore("UNC_H_BYPASS_IMC.TAKEN", CounterUnit::ha, 0x14, 0x02, 2));
  ev.push_back(uncore("UNC_H_IMC_WRITES.ALL", CounterUnit::ha, 0x1A, 0x0F, 2));
  ev.push_back(uncore("LLC_LOOKUP.DATA_READ", CounterUnit::cbox, 0x34, 0x03, 14));
  ev.push_back(uncore("LLC_VICTIMS.M_STATE", CounterUnit::cbox, 0x37, 0x01, 14));
  return ev;
}

std::string slot_for(const EventSpec& e, int core_slot, int box_slot) {
  switch (e.unit) {
    case CounterUnit::core:
    case CounterUnit::offcore_response:
      return "PMC" + std::to_string(core_slot);
    case CounterUnit::imc:
      return "MBOX0C" + std::to_string(box_slot);
    case CounterUnit::ha:
      return "HBOX0C" + std::to_string(box_slot);
    case CounterUnit::cbox:
      return "CBOX0C" + std::to_string(box_slot);
  }
  return "PMC0";
}

EventSetGroup make_group(std::string name, const std::vector<std::string>& event_names,
                         std::vector<Metric> metrics) {
  const Architecture& arch = haswell_ep();
  EventSetGroup g;
  g.name = std::move(name);
  int core_slot = 0;
  int box_slot = 0;
  for (const std::string& en : event_names) {
    const EventSpec& e = arch.at(en);
    g.slots.push_back(e.core_scoped() ? slot_for(e, core_slot++, 0) : slot_for(e, 0, box_slot++));
    g.events.push_back(e);
  }
  g.metrics = std::move(metrics);
  return g;
}

std::vector<EventSetGroup> make_builtin_groups() {
  std::vector<EventSetGroup> groups;
  groups.push_back(make_group(
      "L2", {"L1D.REPLACEMENT", "L2_TRANS.L1D_WB"},
      {{"L2 bandwidth [Bytes/s]", "64*(L1D_REPLACEMENT+L2_TRANS_L1D_WB)/time"},
       {"L2 data volume [Bytes]", "64*(L1D_REPLACEMENT+L2_TRANS_L1D_WB)"}}));
  groups.push_back(make_group(
      "L3", {"L2_LINES_IN.ALL", "L2_TRANS.L2_WB"},
      {{"L3 bandwidth [Bytes/s]", "64*(L2_LINES_IN_ALL+L2_TRANS_L2_WB)/time"},
       {"L3 data volume [Bytes]", "64*(L2_LINES_IN_ALL+L2_TRANS_L2_WB)"}}));
  groups.push_back(make_group(
      "MEM", {"UNC_M_CAS_COUNT.RD", "UNC_M_CAS_COUNT.WR"},
      {{"Memory bandwidth [Bytes/s]", "64*(UNC_M_CAS_COUNT_RD+UNC_M_CAS_COUNT_WR)/time"},
       {"Memory data volume [Bytes]", "64*(UNC_M_CAS_COUNT_RD+UNC_M_CAS_COUNT_WR)"}}));
  groups.push_back(make_group(
      "HA", {"UNC_H_IMC_READS.NORMAL", "UNC_H_BYPASS_IMC.TAKEN", "UNC_H_IMC_WRITES.ALL"},
      {{"HA bandwidth [Bytes/s]",
        "64*(UNC_H_IMC_READS_NORMAL+UNC_H_BYPASS_IMC_TAKEN+UNC_H_IMC_WRITES_ALL)/time"},
       {"HA data volume [Bytes]",
        "64*(UNC_H_IMC_READS_NORMAL+UNC_H_BYPASS_IMC_TAKEN+UNC_H_IMC_WRITES_ALL)"}}));
  groups.push_back(make_group(
      "FALSE_SHARE",
      {"MEM_LOAD_UOPS_L3_HIT_RETIRED.XSNP_HITM", "MEM_LOAD_UOPS_L3_MISS_RETIRED.REMOTE_HITM",
       "OFFCORE_RESPONSE:LLC_HIT:HITM_OTHER_CORE", "OFFCORE_RESPONSE:LLC_MISS:REMOTE_HITM"},
      {{"Shared cache lines",
        "MEM_LOAD_UOPS_L3_HIT_RETIRED_XSNP_HITM+MEM_LOAD_UOPS_L3_MISS_RETIRED_REMOTE_HITM"},
       {"Shared line rate [lines/s]",
        "(MEM_LOAD_UOPS_L3_HIT_RETIRED_XSNP_HITM+MEM_LOAD_UOPS_L3_MISS_RETIRED_REMOTE_HITM)"
        "/time"}}));
  groups.push_back(make_group(
      "AVX_FLOPS", {"AVX_INSTS.CALC", "ARITH.DIVIDER_UOPS"},
      {{"AVX FLOP rate [FLOP/s]", "4*AVX_INSTS_CALC/time"},
       {"AVX calc instructions", "AVX_INSTS_CALC"},
       {"Useful operations", "4*AVX_INSTS_CALC+ARITH_DIVIDER_UOPS"}}));
  groups.push_back(make_group(
      "MEM_OFFCORE", {"OFFCORE_RESPONSE:ALL_READS:L3_MISS", "OFFCORE_RESPONSE:ALL_RFO:L3_MISS"},
      {{"Per-core memory bandwidth [Bytes/s]",
        "64*(OFFCORE_RESPONSE_ALL_READS_L3_MISS+OFFCORE_RESPONSE_ALL_RFO_L3_MISS)/time"},
       {"Per-core memory data volume [Bytes]",
        "64*(OFFCORE_RESPONSE_ALL_READS_L3_MISS+OFFCORE_RESPONSE_ALL_RFO_L3_MISS)"}}));
  return groups;
}

// Checks the load_group postcondition: every formula identifier is `time`,
// a literal or a declared event.
void validate_group(const EventSetGroup& g) {
  std::set<std::string> declared;
  for (const EventSpec& e : g.events) declared.insert(canonical_identifier(e.name));
  std::set<std::string_view> metric_names;
  for (const Metric& m : g.metrics) {
    if (!metric_names.insert(m.name).second) {
      throw Error("duplicate metric '" + m.name + "' in group " + g.name);
    }
    Formula f = Formula::parse(m.formula);
    for (const std::string& ident : f.identifiers()) {
      if (ident == "time") continue;
      if (!declared.count(ident)) {
        throw Error("metric '" + m.name + "' in group " + g.name +
                    " references undeclared event '" + ident + "'");
      }
    }
  }
}

}  // namespace

const Architecture& haswell_ep() {
  static const Architecture arch("haswell_ep", haswell_ep_events());
  return arch;
}

const std::vector<EventSetGroup>& builtin_groups() {
  static const std::vector<EventSetGroup> groups = [] {
    auto g = make_builtin_groups();
    for (const EventSetGroup& group : g) validate_group(group);
    return g;
  }();
  return groups;
}

const EventSetGroup& builtin_group(std::string_view name) {
  for (const EventSetGroup& g : builtin_groups()) {
    if (g.name == name) return g;
  }
  throw Error("unknown performance group '" + std::string(name) + "'");
}

PatternRecord pattern_record(PatternId id) {
  PatternRecord r;
  r.id = id;
  switch (id) {
    case PatternId::bandwidth_saturation:
      r.description =
          "Transfer bandwidth at a memory-hierarchy boundary approaches the "
          "machine's limit.";
      r.signature_groups = {"L2", "L3", "MEM", "HA"};
      r.qualitative_only = false;
      break;
    case PatternId::load_imbalance:
      r.description =
          "Threads process working sets of different size between "
          "synchronization points.";
      r.signature_groups = {"L2", "L3", "MEM_OFFCORE", "AVX_FLOPS"};
      r.qualitative_only = false;
      break;
    case PatternId::false_sharing:
      r.description =
          "Cache lines bounce between private caches because distinct "
          "variables share a line. Counter data supports only a qualitative "
          "classification.";
      r.signature_groups = {"FALSE_SHARE"};
      r.qualitative_only = true;
      break;
  }
  return r;
}

ResolvedPattern pattern_signature(PatternId id) {
  ResolvedPattern rp;
  rp.record = pattern_record(id);
  for (const std::string& name : rp.record.signature_groups) {
    rp.groups.push_back(builtin_group(name));
  }
  return rp;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

EventSetGroup parse_group(std::string_view text, const Architecture& arch,
                          std::string_view group_name) {
  EventSetGroup g;
  g.name = std::string(group_name);

  enum class Section { none, eventset, metrics } section = Section::none;
  bool saw_eventset = false;
  bool saw_metrics = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line == "EVENTSET") {
      if (saw_eventset) throw ParseError("repeated EVENTSET section", lineno);
      section = Section::eventset;
      saw_eventset = true;
      continue;
    }
    if (line == "METRICS") {
      if (!saw_eventset) throw ParseError("METRICS before EVENTSET", lineno);
      if (saw_metrics) throw ParseError("repeated METRICS section", lineno);
      section = Section::metrics;
      saw_metrics = true;
      continue;
    }
    if (line == "GROUP" || line.substr(0, 6) == "GROUP ") {
      auto tokens = split_ws(line);
      if (tokens.size() != 2) throw ParseError("expected 'GROUP <name>'", lineno);
      g.name = tokens[1];
      continue;
    }

    switch (section) {
      case Section::none:
        throw ParseError("content before EVENTSET section", lineno);
      case Section::eventset: {
        auto tokens = split_ws(line);
        if (tokens.size() != 2) {
          throw ParseError("expected '<counter-slot> <event>'", lineno);
        }
        const EventSpec* spec = arch.find(tokens[1]);
        if (spec == nullptr) {
          throw ParseError("unknown event '" + tokens[1] + "'", lineno);
        }
        if (g.find_event(spec->name) != nullptr) {
          throw ParseError("event '" + tokens[1] + "' listed twice", lineno);
        }
        g.slots.push_back(tokens[0]);
        g.events.push_back(*spec);
        break;
      }
      case Section::metrics: {
        auto tokens = split_ws(line);
        if (tokens.size() < 2) {
          throw ParseError("expected '<metric name> <formula>'", lineno);
        }
        std::string formula = tokens.back();
        tokens.pop_back();
        if (!tokens.empty() && tokens.back() == "=") tokens.pop_back();
        if (tokens.empty()) throw ParseError("metric has no name", lineno);
        std::string name = tokens[0];
        for (std::size_t i = 1; i < tokens.size(); ++i) name += " " + tokens[i];
        try {
          Formula::parse(formula);
        } catch (const ParseError& e) {
          throw ParseError(std::string(e.what()), lineno);
        }
        g.metrics.push_back({std::move(name), std::move(formula)});
        break;
      }
    }
  }

  if (!saw_eventset) throw ParseError("missing EVENTSET section", lineno);
  if (!saw_metrics) throw ParseError("missing METRICS section", lineno);
  validate_group(g);
  return g;
}

EventSetGroup load_group_file(const std::filesystem::path& path, const Architecture& arch) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open group file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  EventSetGroup g = parse_group(buf.str(), arch, path.stem().string());
  return g;
}

std::string serialize_group(const EventSetGroup& group) {
  std::ostringstream out;
  if (!group.name.empty()) out << "GROUP " << group.name << "\n";
  out << "EVENTSET\n";
  for (std::size_t i = 0; i < group.events.size(); ++i) {
    out << group.slots[i] << " " << group.events[i].name << "\n";
  }
  out << "METRICS\n";
  for (const Metric& m : group.metrics) {
    out << m.name << " " << m.formula << "\n";
  }
  return out.str();
}

}  // namespace hpmval
