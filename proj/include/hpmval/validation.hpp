#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "hpmval/backend.hpp"
#include "hpmval/events.hpp"
#include "hpmval/kernels.hpp"

namespace hpmval {

// Signed relative error in percent: 100 * (measured - expected) / expected.
double relative_error_pct(double measured, double expected);

// Min/avg/max relative error of one derived metric over repeated runs.
struct ErrorStats {
  std::string label;
  std::string metric;
  int runs = 0;
  double min_pct = 0.0;
  double avg_pct = 0.0;
  double max_pct = 0.0;
  std::vector<double> samples;  // retained when requested
  bool partial = false;         // a backend failure cut the suite short

  void check_ordering() const;  // throws Error unless min <= avg <= max and runs >= 1
};

struct SuiteOptions {
  int runs = 100;
  BackendKind backend = BackendKind::sim;
  std::vector<int> cpus = {-1};  // kernel thread team
  std::uint64_t iterations = 1;
  bool keep_samples = false;
};

// Repeated measured runs of one streaming kernel against the traffic model:
// evaluates the group's total-bandwidth metric per run and aggregates the
// signed errors. Per-run RNG seeds derive as sim.rng_seed XOR run index.
ErrorStats run_error_suite(KernelId kernel, CacheLevel level, const EventSetGroup& group,
                           const MachineModel& machine, const SimConfig& sim,
                           const SuiteOptions& opts);

// Same harness for the AVX operation-count model: compares the AVX FLOP
// rate metric against expected_avx_calc for the arithmetic kernels.
ErrorStats run_avx_suite(KernelId kernel, CacheLevel level, const MachineModel& machine,
                         const SimConfig& sim, const SuiteOptions& opts);

// One row of the load-imbalance verification table.
struct ImbalanceRow {
  std::string label;
  std::vector<double> per_thread;
  double ratio = 0.0;      // largest share over smallest
  double error_pct = 0.0;  // versus the reference ratio
  bool is_reference = false;
  double published_error_pct =
      std::numeric_limits<double>::quiet_NaN();  // from fixtures, for comparison
};

// Runs the two-thread triangular matrix-vector multiplication and reports
// per-thread processed elements, AVX operation counts and L2/L3/memory data
// volumes, each with its share ratio and the error against the work
// partition's reference ratio.
std::vector<ImbalanceRow> load_imbalance_table(std::uint64_t n, std::uint64_t iterations,
                                               const MachineModel& machine, const SimConfig& sim,
                                               const SuiteOptions& opts);

// Replays a published imbalance table: CSV columns
// label,thread0,thread1,ratio,error_pct. The first data row is the
// work-share reference. Each row's measured ratio is taken from the most
// precisely printed source (the ratio column when it carries more
// significant digits than the thread values, the value quotient otherwise),
// since published tables round each cell independently.
std::vector<ImbalanceRow> replay_imbalance_fixture(const std::filesystem::path& csv);

// One row of the producer/consumer verification table for one placement.
struct SharingRow {
  std::uint64_t lines_per_step = 0;
  double model_lines = 0.0;
  double measured_mean = 0.0;
  double error_pct = 0.0;
};

std::vector<SharingRow> false_sharing_table(const std::vector<std::uint64_t>& line_counts,
                                            std::uint64_t steps, Placement placement,
                                            const MachineModel& machine, const SimConfig& sim,
                                            const SuiteOptions& opts);

// Both placements side by side, mirroring the published table layout.
struct SharingReplayRow {
  std::uint64_t lines_per_step = 0;
  double model_lines = 0.0;
  double intra_measured = 0.0;
  double intra_error_pct = 0.0;
  double inter_measured = 0.0;
  double inter_error_pct = 0.0;
  double published_intra_error_pct = std::numeric_limits<double>::quiet_NaN();
  double published_inter_error_pct = std::numeric_limits<double>::quiet_NaN();
};

// Replays a published false-sharing table: CSV columns lines_per_step,
// model_lines,intra_measured,intra_error_pct,inter_measured,inter_error_pct.
// Errors are recomputed from the measured and model columns.
std::vector<SharingReplayRow> replay_sharing_fixture(const std::filesystem::path& csv);

SharingReplayRow merge_sharing_rows(const SharingRow& intra, const SharingRow& inter);

// CSV emission. Column layouts are stable; identical inputs produce
// byte-identical output.
void write_error_suite_csv(std::ostream& out, const std::vector<ErrorStats>& rows);
void write_imbalance_csv(std::ostream& out, const std::vector<ImbalanceRow>& rows);
void write_sharing_csv(std::ostream& out, const std::vector<SharingReplayRow>& rows);

std::string to_json_string(const std::vector<ErrorStats>& rows);
std::string to_json_string(const std::vector<ImbalanceRow>& rows);
std::string to_json_string(const std::vector<SharingReplayRow>& rows);

// Number of significant decimal digits in a printed value ("1.26E10" -> 3,
// "406.28" -> 5). A trailing ":1" ratio suffix is ignored.
int significant_digits(std::string_view token);

}  // namespace hpmval
