#include "mixhmm/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mixhmm/markov.hpp"

namespace mixhmm {

namespace {
const double kMissing = std::numeric_limits<double>::quiet_NaN();
}

bool RawSeries::missing_at(std::size_t i) const {
  return std::isnan(values[i]);
}

long SegmentedSubject::total_observations() const {
  long n = 0;
  for (const auto& seg : segments)
    for (Index t = 0; t < seg.size(); ++t)
      if (!std::isnan(seg[t])) ++n;
  return n;
}

SegmentedSubject segment_on_missing(const RawSeries& series, long min_gap,
                                    ShortGapPolicy policy) {
  if (min_gap < 1) throw InputError("segment_on_missing: min_gap must be >= 1");
  if (series.times.size() != series.values.size())
    throw InputError("segment_on_missing: times/values size mismatch");

  // Expand to a dense timeline; absent time indices count as missing slots.
  std::vector<double> dense;
  long t0 = 0;
  if (!series.times.empty()) {
    t0 = series.times.front();
    dense.assign(series.times.back() - t0 + 1, kMissing);
    for (std::size_t i = 0; i < series.times.size(); ++i) {
      if (i > 0 && series.times[i] <= series.times[i - 1])
        throw InputError("segment_on_missing: times must be strictly increasing");
      dense[series.times[i] - t0] = series.values[i];
    }
  }

  std::size_t lo = 0;
  std::size_t hi = dense.size();
  while (lo < hi && std::isnan(dense[lo])) ++lo;
  while (hi > lo && std::isnan(dense[hi - 1])) --hi;
  if (lo == hi) {
    std::ostringstream msg;
    msg << "subject " << series.subject_id << ": all values missing";
    throw InputError(msg.str());
  }

  SegmentedSubject out;
  out.subject_id = series.subject_id;
  std::size_t i = lo;
  std::size_t start = lo;
  while (i < hi) {
    while (i < hi && !std::isnan(dense[i])) ++i;
    if (i == hi) break;
    const std::size_t gap_start = i;
    while (i < hi && std::isnan(dense[i])) ++i;
    const long gap = static_cast<long>(i - gap_start);
    if (gap < min_gap) {
      out.short_gaps.push_back(gap);
      if (policy == ShortGapPolicy::error) {
        std::ostringstream msg;
        msg << "subject " << series.subject_id << ": interior missing run of "
            << gap << " < min_gap " << min_gap;
        throw InputError(msg.str());
      }
      if (policy == ShortGapPolicy::bridge) continue;  // stays in the segment
    }
    Vector seg(gap_start - start);
    for (std::size_t j = start; j < gap_start; ++j) seg[j - start] = dense[j];
    out.segments.push_back(std::move(seg));
    out.segment_start_times.push_back(t0 + static_cast<long>(start));
    out.gaps.push_back(gap);
    start = i;
  }
  Vector seg(hi - start);
  for (std::size_t j = start; j < hi; ++j) seg[j - start] = dense[j];
  out.segments.push_back(std::move(seg));
  out.segment_start_times.push_back(t0 + static_cast<long>(start));
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  std::ostringstream msg;
  msg << "csv line " << line_no << ": " << what;
  throw InputError(msg.str());
}

}  // namespace

std::vector<RawSeries> parse_long_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InputError("csv: empty input");
  ++line_no;
  if (split_fields(line) != std::vector<std::string>{"subject_id", "t", "value"})
    throw InputError("csv: header must be exactly subject_id,t,value");

  struct Row {
    long t;
    double value;
    std::size_t line;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) parse_fail(line_no, "expected 3 fields");
    const std::string& sid = fields[0];
    if (sid.empty()) parse_fail(line_no, "empty subject_id");

    long t;
    try {
      std::size_t used = 0;
      t = std::stol(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      parse_fail(line_no, "t is not an integer: '" + fields[1] + "'");
    }

    double value = kMissing;
    if (!fields[2].empty() && fields[2] != "NA") {
      try {
        std::size_t used = 0;
        value = std::stod(fields[2], &used);
        if (used != fields[2].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        parse_fail(line_no, "value is not a number: '" + fields[2] + "'");
      }
      if (!(value >= 0.0)) parse_fail(line_no, "negative value");
    }

    auto it = rows.find(sid);
    if (it == rows.end()) {
      order.push_back(sid);
      it = rows.emplace(sid, std::vector<Row>{}).first;
    }
    it->second.push_back({t, value, line_no});
  }

  std::vector<RawSeries> out;
  out.reserve(order.size());
  for (const auto& sid : order) {
    auto& rs = rows[sid];
    std::stable_sort(rs.begin(), rs.end(),
                     [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < rs.size(); ++i)
      if (rs[i].t == rs[i - 1].t) {
        std::ostringstream msg;
        msg << "duplicate (subject, t) = (" << sid << ", " << rs[i].t << ")";
        parse_fail(rs[i].line, msg.str());
      }
    RawSeries series;
    series.subject_id = sid;
    series.times.reserve(rs.size());
    series.values.reserve(rs.size());
    for (const auto& row : rs) {
      series.times.push_back(row.t);
      series.values.push_back(row.value);
    }
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<RawSeries> parse_long_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open csv file: " + path);
  return parse_long_csv(in);
}

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_long_csv(std::ostream& out, const std::vector<RawSeries>& series) {
  out << "subject_id,t,value\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      out << s.subject_id << ',' << s.times[i] << ',';
      if (!s.missing_at(i)) out << format_value(s.values[i]);
      else out << "NA";
      out << '\n';
    }
}

void write_segment_csv(std::ostream& out,
                       const std::vector<SegmentedSubject>& subjects) {
  out << "subject_id,segment_index,t_local,value\n";
  for (const auto& subject : subjects)
    for (std::size_t s = 0; s < subject.segments.size(); ++s)
      for (Index t = 0; t < subject.segments[s].size(); ++t)
        out << subject.subject_id << ',' << s << ',' << t << ','
            << format_value(subject.segments[s][t]) << '\n';
}

GapValidityReport validate_gap_assumption(
    const std::vector<SegmentedSubject>& subjects,
    const MixtureHmmParams& params, double eta) {
  if (!(eta > 0.0))
    throw InputError("validate_gap_assumption: eta must be positive");
  GapValidityReport report;
  report.eta = eta;

  long d_min = std::numeric_limits<long>::max();
  bool any_gap = false;
  for (const auto& subject : subjects)
    for (long gap : subject.gaps) {
      any_gap = true;
      d_min = std::min(d_min, gap);
    }
  if (!any_gap) {
    report.vacuous = true;
    report.pass = true;
    return report;
  }
  report.d_min = d_min;

  report.pass = true;
  for (int k = 0; k < params.num_components(); ++k) {
    const double bound = mixing_time_bound(params.trans[k], eta);
    report.bounds.push_back(bound);
    report.tv_at_dmin.push_back(
        tv_distance_to_stationary(params.trans[k], d_min));
    if (static_cast<double>(d_min) < bound) {
      report.pass = false;
      report.failing_components.push_back(k);
    }
  }
  return report;
}

}  // namespace mixhmm
