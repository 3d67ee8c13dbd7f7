#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hpmval/events.hpp"

namespace hpmval {

// The built-in architecture model: one Haswell-EP-like event list. Immutable
// after construction; safe to share across threads.
class Architecture {
 public:
  Architecture(std::string name, std::vector<EventSpec> events);

  const std::string& name() const { return name_; }
  const std::vector<EventSpec>& events() const { return events_; }

  const EventSpec* find(std::string_view event_name) const;
  const EventSpec& at(std::string_view event_name) const;  // throws Error

 private:
  std::string name_;
  std::vector<EventSpec> events_;
};

const Architecture& haswell_ep();

// Built-in performance groups: L2, L3, MEM, HA, FALSE_SHARE, AVX_FLOPS and
// the per-core memory group MEM_OFFCORE.
const std::vector<EventSetGroup>& builtin_groups();
const EventSetGroup& builtin_group(std::string_view name);  // throws Error

PatternRecord pattern_record(PatternId id);

struct ResolvedPattern {
  PatternRecord record;
  std::vector<EventSetGroup> groups;
};

// The pattern record with its signature groups resolved against the built-in
// registry.
ResolvedPattern pattern_signature(PatternId id);

// Group-file format: an EVENTSET section with one `<slot> <event>` line per
// event, then a METRICS section with one `<name...> [=] <formula>` line per
// metric. The formula is the last whitespace-separated token. '#' starts a
// comment.
EventSetGroup parse_group(std::string_view text, const Architecture& arch,
                          std::string_view group_name = "");
EventSetGroup load_group_file(const std::filesystem::path& path, const Architecture& arch);
std::string serialize_group(const EventSetGroup& group);

}  // namespace hpmval
