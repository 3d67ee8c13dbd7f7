#include "hpmval/validation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hpmval/error.hpp"
#include "hpmval/expr.hpp"
#include "hpmval/registry.hpp"

namespace hpmval {

double relative_error_pct(double measured, double expected) {
  if (expected == 0.0) throw Error("relative error undefined for expected value 0");
  return 100.0 * (measured - expected) / expected;
}

void ErrorStats::check_ordering() const {
  if (runs < 1) throw Error("error stats for '" + label + "' cover no runs");
  if (!(min_pct <= avg_pct && avg_pct <= max_pct)) {
    throw Error("error stats for '" + label + "' violate min <= avg <= max");
  }
}

namespace {

Boundary boundary_for_group(std::string_view group_name) {
  if (group_name == "L2") return Boundary::L1_L2;
  if (group_name == "L3") return Boundary::L2_L3;
  if (group_name == "MEM" || group_name == "HA" || group_name == "MEM_OFFCORE") {
    return Boundary::L3_MEM;
  }
  throw Error("no traffic boundary for group '" + std::string(group_name) + "'");
}

const Metric& bandwidth_metric(const EventSetGroup& group) {
  for (const Metric& m : group.metrics) {
    std::string lower = m.name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower.find("bandwidth") != std::string::npos) return m;
  }
  if (group.metrics.empty()) {
    throw Error("group " + group.name + " defines no metrics");
  }
  return group.metrics.front();
}

CountMap totals_as_counts(const CountSample& sample) {
  CountMap counts;
  for (const std::string& event : sample.events) {
    counts[event] = static_cast<double>(sample.total(event));
  }
  return counts;
}

ErrorStats aggregate(std::string label, std::string metric, const std::vector<double>& errors,
                     bool keep_samples, bool partial) {
  ErrorStats stats;
  stats.label = std::move(label);
  stats.metric = std::move(metric);
  stats.runs = static_cast<int>(errors.size());
  stats.partial = partial;
  if (errors.empty()) throw Error("suite '" + stats.label + "' produced no samples");
  stats.min_pct = *std::min_element(errors.begin(), errors.end());
  stats.max_pct = *std::max_element(errors.begin(), errors.end());
  double sum = 0.0;
  for (double e : errors) sum += e;
  stats.avg_pct = sum / static_cast<double>(errors.size());
  if (keep_samples) stats.samples = errors;
  stats.check_ordering();
  return stats;
}

CountSample read_counts(Session& session, const RunRecord& record, const SimConfig& sim) {
  if (session.kind() == BackendKind::sim) return sim_read(session, record, sim);
  return os_read(session);
}

}  // namespace

ErrorStats run_error_suite(KernelId kernel, CacheLevel level, const EventSetGroup& group,
                           const MachineModel& machine, const SimConfig& sim,
                           const SuiteOptions& opts) {
  if (!is_streaming(kernel)) throw Error("error suites require a streaming kernel");
  if (group.name != "L2" && group.name != "L3" && group.name != "MEM" && group.name != "HA") {
    throw Error("error suites accept the L2, L3, MEM and HA groups");
  }
  if (opts.runs < 1) throw Error("suite needs at least one run");

  const Boundary boundary = boundary_for_group(group.name);
  const Metric& metric = bandwidth_metric(group);

  KernelSpec spec;
  spec.kernel = kernel;
  spec.target_level = level;
  spec.elements = size_for_level(level, machine, array_count(kernel));
  spec.iterations = opts.iterations;
  spec.cpus = opts.cpus;

  const std::uint64_t expected_bytes =
      expected_traffic(kernel, boundary, spec.elements, spec.iterations).total_bytes();

  Session session = open_session(group, spec.cpus, opts.backend,
                                 SessionOptions{core_counter_cap_for(machine)});
  Formula formula = Formula::parse(metric.formula);

  std::string label = group.name + "_" + std::string(to_string(kernel)) + "_" +
                      std::string(to_string(level));

  std::vector<double> errors;
  bool partial = false;
  for (int run = 0; run < opts.runs; ++run) {
    try {
      session.start();
      RunRecord record = run_streaming(spec);
      session.stop();
      SimConfig per_run = sim;
      per_run.rng_seed = sim.rng_seed ^ static_cast<std::uint64_t>(run);
      CountSample sample = read_counts(session, record, per_run);
      double measured = evaluate_metric(formula, totals_as_counts(sample), record.runtime_s);
      double expected = static_cast<double>(expected_bytes) / record.runtime_s;
      errors.push_back(relative_error_pct(measured, expected));
    } catch (const SessionError&) {
      partial = true;
      break;
    } catch (const CapabilityError&) {
      partial = true;
      break;
    }
  }
  return aggregate(std::move(label), metric.name, errors, opts.keep_samples, partial);
}

ErrorStats run_avx_suite(KernelId kernel, CacheLevel level, const MachineModel& machine,
                         const SimConfig& sim, const SuiteOptions& opts) {
  if (expected_avx_calc(kernel, 8, 1) == 0.0) {
    throw Error("kernel '" + std::string(to_string(kernel)) +
                "' performs no AVX arithmetic");
  }
  if (opts.runs < 1) throw Error("suite needs at least one run");

  const EventSetGroup& group = builtin_group("AVX_FLOPS");
  const Metric& metric = group.metrics.front();  // AVX FLOP rate

  KernelSpec spec;
  spec.kernel = kernel;
  spec.target_level = level;
  spec.elements = size_for_level(level, machine, array_count(kernel));
  spec.iterations = opts.iterations;
  spec.cpus = opts.cpus;

  const double expected_ops = 4.0 * expected_avx_calc(kernel, spec.elements, spec.iterations);

  Session session = open_session(group, spec.cpus, opts.backend,
                                 SessionOptions{core_counter_cap_for(machine)});
  Formula formula = Formula::parse(metric.formula);

  std::vector<double> errors;
  bool partial = false;
  for (int run = 0; run < opts.runs; ++run) {
    try {
      session.start();
      RunRecord record = run_streaming(spec);
      session.stop();
      SimConfig per_run = sim;
      per_run.rng_seed = sim.rng_seed ^ static_cast<std::uint64_t>(run);
      CountSample sample = read_counts(session, record, per_run);
      double measured = evaluate_metric(formula, totals_as_counts(sample), record.runtime_s);
      double expected = expected_ops / record.runtime_s;
      errors.push_back(relative_error_pct(measured, expected));
    } catch (const SessionError&) {
      partial = true;
      break;
    } catch (const CapabilityError&) {
      partial = true;
      break;
    }
  }
  return aggregate(std::string(to_string(kernel)) + "_avx", metric.name, errors,
                   opts.keep_samples, partial);
}

namespace {

ImbalanceRow make_row(std::string label, std::vector<double> values, double reference_ratio,
                      bool is_reference) {
  ImbalanceRow row;
  row.label = std::move(label);
  row.per_thread = std::move(values);
  double lo = *std::min_element(row.per_thread.begin(), row.per_thread.end());
  double hi = *std::max_element(row.per_thread.begin(), row.per_thread.end());
  if (lo <= 0.0) throw Error("imbalance row '" + row.label + "' has a non-positive share");
  row.ratio = hi / lo;
  row.is_reference = is_reference;
  row.error_pct = is_reference ? 0.0 : relative_error_pct(row.ratio, reference_ratio);
  return row;
}

std::vector<double> per_thread_values(const CountSample& sample,
                                      const std::vector<std::string>& events, double scale) {
  std::vector<double> values;
  for (std::size_t t = 0; t < sample.per_thread.size(); ++t) {
    double sum = 0.0;
    for (const std::string& e : events) {
      sum += static_cast<double>(sample.at(t, e).value);
    }
    values.push_back(sum * scale);
  }
  return values;
}

}  // namespace

std::vector<ImbalanceRow> load_imbalance_table(std::uint64_t n, std::uint64_t iterations,
                                               const MachineModel& machine, const SimConfig& sim,
                                               const SuiteOptions& opts) {
  std::vector<int> cpus = opts.cpus;
  if (cpus.size() != 2) cpus = {-1, -1};

  RunRecord record = run_triangular_mvm(n, iterations, 2, cpus);

  std::vector<ImbalanceRow> rows;
  std::vector<double> elements(record.per_thread_work.begin(), record.per_thread_work.end());
  rows.push_back(make_row("Processed elements", elements, 0.0, true));
  const double reference = rows.front().ratio;

  SessionOptions sess_opts{core_counter_cap_for(machine)};
  auto read_group = [&](std::string_view group_name) {
    Session session = open_session(builtin_group(group_name), cpus, opts.backend, sess_opts);
    return read_counts(session, record, sim);
  };

  CountSample avx = read_group("AVX_FLOPS");
  rows.push_back(make_row("AVX floating point ops",
                          per_thread_values(avx, {"AVX_INSTS.CALC"}, 1.0), reference, false));

  CountSample l2 = read_group("L2");
  rows.push_back(make_row(
      "L2 data volume [GByte]",
      per_thread_values(l2, {"L1D.REPLACEMENT", "L2_TRANS.L1D_WB"}, 64.0 / 1e9), reference,
      false));

  CountSample l3 = read_group("L3");
  rows.push_back(make_row(
      "L3 data volume [GByte]",
      per_thread_values(l3, {"L2_LINES_IN.ALL", "L2_TRANS.L2_WB"}, 64.0 / 1e9), reference,
      false));

  CountSample mem = read_group("MEM_OFFCORE");
  rows.push_back(make_row(
      "Memory data volume [GByte]",
      per_thread_values(
          mem, {"OFFCORE_RESPONSE:ALL_READS:L3_MISS", "OFFCORE_RESPONSE:ALL_RFO:L3_MISS"},
          64.0 / 1e9),
      reference, false));
  return rows;
}

std::vector<SharingRow> false_sharing_table(const std::vector<std::uint64_t>& line_counts,
                                            std::uint64_t steps, Placement placement,
                                            const MachineModel& machine, const SimConfig& sim,
                                            const SuiteOptions& opts) {
  if (opts.runs < 1) throw Error("suite needs at least one run");
  const EventSetGroup& group = builtin_group("FALSE_SHARE");
  const Metric& lines_metric = group.metrics.front();  // total shared lines
  Formula formula = Formula::parse(lines_metric.formula);

  std::vector<SharingRow> rows;
  std::uint64_t run_index = 0;
  for (std::uint64_t lines : line_counts) {
    double model = static_cast<double>(false_sharing_model(lines, steps));
    double sum = 0.0;
    for (int run = 0; run < opts.runs; ++run, ++run_index) {
      RunRecord record = run_producer_consumer(lines, steps, placement, machine);
      Session session = open_session(group, record.spec.cpus, opts.backend,
                                     SessionOptions{core_counter_cap_for(machine)});
      SimConfig per_run = sim;
      per_run.rng_seed = sim.rng_seed ^ run_index;
      CountSample sample = read_counts(session, record, per_run);
      sum += evaluate_metric(formula, totals_as_counts(sample), record.runtime_s);
    }
    SharingRow row;
    row.lines_per_step = lines;
    row.model_lines = model;
    row.measured_mean = sum / static_cast<double>(opts.runs);
    row.error_pct = relative_error_pct(row.measured_mean, model);
    rows.push_back(row);
  }
  return rows;
}

SharingReplayRow merge_sharing_rows(const SharingRow& intra, const SharingRow& inter) {
  if (intra.lines_per_step != inter.lines_per_step) {
    throw Error("placement tables disagree on line counts");
  }
  SharingReplayRow row;
  row.lines_per_step = intra.lines_per_step;
  row.model_lines = intra.model_lines;
  row.intra_measured = intra.measured_mean;
  row.intra_error_pct = intra.error_pct;
  row.inter_measured = inter.measured_mean;
  row.inter_error_pct = inter.error_pct;
  return row;
}

// ---------------------------------------------------------------------------
// Fixture parsing

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) {
      field.erase(field.begin());
    }
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) {
      field.pop_back();
    }
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open fixture " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("fixture " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw Error("fixture " + path.string() + " must start with header '" + expected_header +
                "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double parse_number(const std::string& token, const std::string& what) {
  // Accepts a trailing ":1" ratio suffix.
  std::string body = token;
  if (auto colon = body.find(':'); colon != std::string::npos) body = body.substr(0, colon);
  try {
    std::size_t used = 0;
    double v = std::stod(body, &used);
    if (used != body.size()) throw Error("");
    return v;
  } catch (...) {
    throw Error("cannot parse " + what + " value '" + token + "'");
  }
}

}  // namespace

int significant_digits(std::string_view token) {
  if (auto colon = token.find(':'); colon != std::string_view::npos) {
    token = token.substr(0, colon);
  }
  // Drop any exponent part.
  if (auto e = token.find_first_of("eE"); e != std::string_view::npos) {
    token = token.substr(0, e);
  }
  std::string digits;
  for (char c : token) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
  }
  std::size_t first = digits.find_first_not_of('0');
  if (first == std::string::npos) return 0;
  return static_cast<int>(digits.size() - first);
}

std::vector<ImbalanceRow> replay_imbalance_fixture(const std::filesystem::path& csv) {
  auto raw_rows = read_csv(csv, "label,thread0,thread1,ratio,error_pct");
  if (raw_rows.empty()) throw Error("fixture " + csv.string() + " has no data rows");

  auto measured_ratio = [](const std::vector<std::string>& fields) {
    double t0 = parse_number(fields[1], "thread0");
    double t1 = parse_number(fields[2], "thread1");
    if (t0 <= 0.0 || t1 <= 0.0) throw Error("fixture thread values must be positive");
    double from_values = std::max(t0, t1) / std::min(t0, t1);
    if (fields.size() > 3 && !fields[3].empty()) {
      int value_digits = std::min(significant_digits(fields[1]), significant_digits(fields[2]));
      if (significant_digits(fields[3]) > value_digits) {
        return parse_number(fields[3], "ratio");
      }
    }
    return from_values;
  };

  std::vector<ImbalanceRow> rows;
  double reference = 0.0;
  for (std::size_t i = 0; i < raw_rows.size(); ++i) {
    const auto& fields = raw_rows[i];
    if (fields.size() < 3) throw Error("fixture row " + std::to_string(i + 2) + " is too short");
    ImbalanceRow row;
    row.label = fields[0];
    row.per_thread = {parse_number(fields[1], "thread0"), parse_number(fields[2], "thread1")};
    row.ratio = measured_ratio(fields);
    row.is_reference = i == 0;
    if (row.is_reference) {
      reference = row.ratio;
      row.error_pct = 0.0;
    } else {
      row.error_pct = relative_error_pct(row.ratio, reference);
    }
    if (fields.size() > 4 && !fields[4].empty()) {
      row.published_error_pct = parse_number(fields[4], "error_pct");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SharingReplayRow> replay_sharing_fixture(const std::filesystem::path& csv) {
  auto raw_rows = read_csv(
      csv,
      "lines_per_step,model_lines,intra_measured,intra_error_pct,inter_measured,"
      "inter_error_pct");
  std::vector<SharingReplayRow> rows;
  for (std::size_t i = 0; i < raw_rows.size(); ++i) {
    const auto& fields = raw_rows[i];
    if (fields.size() < 6) throw Error("fixture row " + std::to_string(i + 2) + " is too short");
    SharingReplayRow row;
    row.lines_per_step =
        static_cast<std::uint64_t>(parse_number(fields[0], "lines_per_step"));
    row.model_lines = parse_number(fields[1], "model_lines");
    row.intra_measured = parse_number(fields[2], "intra_measured");
    row.inter_measured = parse_number(fields[4], "inter_measured");
    row.intra_error_pct = relative_error_pct(row.intra_measured, row.model_lines);
    row.inter_error_pct = relative_error_pct(row.inter_measured, row.model_lines);
    if (!fields[3].empty()) row.published_intra_error_pct = parse_number(fields[3], "error");
    if (!fields[5].empty()) row.published_inter_error_pct = parse_number(fields[5], "error");
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report emission

namespace {

std::string fmt_pct(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_error_suite_csv(std::ostream& out, const std::vector<ErrorStats>& rows) {
  out << "label,runs,min_pct,avg_pct,max_pct\n";
  for (const ErrorStats& r : rows) {
    out << r.label << "," << r.runs << "," << fmt_pct(r.min_pct) << "," << fmt_pct(r.avg_pct)
        << "," << fmt_pct(r.max_pct) << "\n";
  }
}

void write_imbalance_csv(std::ostream& out, const std::vector<ImbalanceRow>& rows) {
  out << "label,thread0,thread1,ratio,error_pct\n";
  for (const ImbalanceRow& r : rows) {
    out << r.label << "," << fmt_value(r.per_thread.at(0)) << ","
        << fmt_value(r.per_thread.at(1)) << "," << fmt_value(r.ratio) << ","
        << fmt_pct(r.error_pct) << "\n";
  }
}

void write_sharing_csv(std::ostream& out, const std::vector<SharingReplayRow>& rows) {
  out << "lines_per_step,model_lines,intra_measured,intra_error_pct,inter_measured,"
         "inter_error_pct\n";
  for (const SharingReplayRow& r : rows) {
    out << r.lines_per_step << "," << fmt_value(r.model_lines) << ","
        << fmt_value(r.intra_measured) << "," << fmt_pct(r.intra_error_pct) << ","
        << fmt_value(r.inter_measured) << "," << fmt_pct(r.inter_error_pct) << "\n";
  }
}

std::string to_json_string(const std::vector<ErrorStats>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const ErrorStats& r : rows) {
    nlohmann::json row{{"label", r.label},     {"metric", r.metric},
                       {"runs", r.runs},       {"min_pct", r.min_pct},
                       {"avg_pct", r.avg_pct}, {"max_pct", r.max_pct}};
    if (r.partial) row["partial"] = true;
    j.push_back(std::move(row));
  }
  return j.dump(2);
}

std::string to_json_string(const std::vector<ImbalanceRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const ImbalanceRow& r : rows) {
    j.push_back({{"label", r.label},
                 {"per_thread", r.per_thread},
                 {"ratio", r.ratio},
                 {"error_pct", r.error_pct},
                 {"is_reference", r.is_reference}});
  }
  return j.dump(2);
}

std::string to_json_string(const std::vector<SharingReplayRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const SharingReplayRow& r : rows) {
    j.push_back({{"lines_per_step", r.lines_per_step},
                 {"model_lines", r.model_lines},
                 {"intra_measured", r.intra_measured},
                 {"intra_error_pct", r.intra_error_pct},
                 {"inter_measured", r.inter_measured},
                 {"inter_error_pct", r.inter_error_pct}});
  }
  return j.dump(2);
}

}  // namespace hpmval
