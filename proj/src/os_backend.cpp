// Thin perf_event wrapper behind the `os` backend. It counts the calling
// thread only and makes no accuracy promises; uncore units are not
// programmable through this path.

#include <cerrno>
#include <cstring>

#include "hpmval/backend.hpp"
#include "hpmval/error.hpp"

#if defined(__linux__)
#include <linux/perf_event.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>
#endif

namespace hpmval {

struct Session::OsState {
  struct Fd {
    int fd = -1;
    bool unavailable = false;
  };
  std::vector<Fd> fds;  // parallel to session events

  ~OsState() {
#if defined(__linux__)
    for (Fd& f : fds) {
      if (f.fd >= 0) close(f.fd);
    }
#endif
  }
};

Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

namespace os_detail {

#if defined(__linux__)

namespace {

long perf_event_open(perf_event_attr* attr, pid_t pid, int cpu, int group_fd,
                     unsigned long flags) {
  return syscall(SYS_perf_event_open, attr, pid, cpu, group_fd, flags);
}

int open_counter(const EventSpec& e, bool& unavailable) {
  perf_event_attr attr;
  std::memset(&attr, 0, sizeof(attr));
  attr.size = sizeof(attr);
  attr.disabled = 1;
  attr.exclude_kernel = 1;
  attr.exclude_hv = 1;

  if (e.name == "INSTR_RETIRED.ANY") {
    attr.type = PERF_TYPE_HARDWARE;
    attr.config = PERF_COUNT_HW_INSTRUCTIONS;
  } else if (e.unit == CounterUnit::core) {
    attr.type = PERF_TYPE_RAW;
    attr.config = static_cast<std::uint64_t>(e.event_code) |
                  (static_cast<std::uint64_t>(e.umask) << 8);
  } else {
    // Offcore-response filters need MSR programming we do not attempt.
    unavailable = true;
    return -1;
  }

  int fd = static_cast<int>(perf_event_open(&attr, 0, -1, -1, 0));
  if (fd < 0) {
    if (errno == EACCES || errno == EPERM) {
      throw SessionError(
          "perf_event access denied; lower /proc/sys/kernel/perf_event_paranoid "
          "or use --backend sim");
    }
    unavailable = true;  // unsupported event on this host
  }
  return fd;
}

}  // namespace

std::unique_ptr<Session::OsState> os_open(const std::vector<EventSpec>& events) {
  for (const EventSpec& e : events) {
    if (!e.core_scoped()) {
      throw CapabilityError("event '" + e.name +
                            "' needs uncore access the os backend does not provide; "
                            "use --backend sim");
    }
  }
  auto state = std::make_unique<Session::OsState>();
  for (const EventSpec& e : events) {
    Session::OsState::Fd f;
    f.fd = open_counter(e, f.unavailable);
    state->fds.push_back(f);
  }
  return state;
}

void os_start(Session::OsState& state) {
  for (auto& f : state.fds) {
    if (f.fd >= 0) {
      ioctl(f.fd, PERF_EVENT_IOC_RESET, 0);
      ioctl(f.fd, PERF_EVENT_IOC_ENABLE, 0);
    }
  }
}

void os_stop(Session::OsState& state) {
  for (auto& f : state.fds) {
    if (f.fd >= 0) ioctl(f.fd, PERF_EVENT_IOC_DISABLE, 0);
  }
}

void os_collect(Session::OsState& state, std::size_t num_threads, CountSample& out) {
  for (std::size_t ei = 0; ei < state.fds.size(); ++ei) {
    std::uint64_t value = 0;
    bool unavailable = state.fds[ei].unavailable;
    if (!unavailable && state.fds[ei].fd >= 0) {
      if (read(state.fds[ei].fd, &value, sizeof(value)) != sizeof(value)) {
        unavailable = true;
        value = 0;
      }
    }
    for (std::size_t t = 0; t < num_threads; ++t) {
      Count& c = out.per_thread[t][ei];
      c.flags.hardware = true;
      c.flags.unavailable = unavailable;
      c.flags.modeled = false;
      c.value = t == 0 ? value : 0;  // counts the calling thread only
    }
  }
}

#else  // !__linux__

std::unique_ptr<Session::OsState> os_open(const std::vector<EventSpec>&) {
  throw CapabilityError("the os backend requires Linux perf_event support");
}
void os_start(Session::OsState&) {}
void os_stop(Session::OsState&) {}
void os_collect(Session::OsState&, std::size_t, CountSample&) {}

#endif

}  // namespace os_detail
}  // namespace hpmval
