#ifndef MIXHMM_SEQUENCES_HPP
#define MIXHMM_SEQUENCES_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "mixhmm/model.hpp"
#include "mixhmm/types.hpp"

namespace mixhmm {

/// One subject's raw observations on an integer-minute timeline. A value of
/// NaN marks a missing slot; time indices absent between times.front() and
/// times.back() are missing slots as well.
struct RawSeries {
  std::string subject_id;
  std::vector<long> times;
  std::vector<double> values;  // >= 0 or NaN

  bool missing_at(std::size_t i) const;
};

/// What to do with an interior missing run shorter than min_gap: split
/// there anyway (recording it), reject the series, or keep the run inside
/// the segment as missing slots that inference marginalizes exactly.
enum class ShortGapPolicy { split, error, bridge };

/// A subject split into segments; gaps[j] is the number of missing slots
/// between segments j and j+1. segment_start_times keep the original
/// timeline coordinate of each segment's first observation. Under the
/// bridge policy a segment may contain interior NaN slots (runs shorter
/// than the split threshold); its first and last values are always observed.
struct SegmentedSubject {
  std::string subject_id;
  std::vector<Vector> segments;
  std::vector<long> gaps;
  std::vector<long> segment_start_times;
  std::vector<long> short_gaps;  // interior runs below min_gap, recorded

  long total_observations() const;  // observed (non-missing) values only
};

/// Splits a series at interior missing runs after trimming missing slots at
/// both ends. Runs of length >= min_gap always split; shorter runs follow
/// the policy (default: split there too, recording them for the validity
/// report).
SegmentedSubject segment_on_missing(const RawSeries& series, long min_gap = 1,
                                    ShortGapPolicy policy =
                                        ShortGapPolicy::split);

/// Long-format CSV with header subject_id,t,value; empty or NA value fields
/// mark missing slots. Rows may arrive in any order; duplicate (subject, t)
/// pairs are rejected with the offending line number.
std::vector<RawSeries> parse_long_csv(std::istream& in);
std::vector<RawSeries> parse_long_csv_file(const std::string& path);

void write_long_csv(std::ostream& out, const std::vector<RawSeries>& series);

/// Segment dump: subject_id,segment_index,t_local,value.
void write_segment_csv(std::ostream& out,
                       const std::vector<SegmentedSubject>& subjects);

struct GapValidityReport {
  bool vacuous = false;  // no interior gaps anywhere
  bool pass = false;
  long d_min = 0;
  double eta = 0.0;
  std::vector<double> bounds;      // per component
  std::vector<double> tv_at_dmin;  // per component, at matrix power d_min
  std::vector<int> failing_components;
};

/// Checks that the smallest interior gap dominates every component's mixing
/// time bound at tolerance eta, and reports the total variation distance
/// actually achieved at that gap.
GapValidityReport validate_gap_assumption(
    const std::vector<SegmentedSubject>& subjects,
    const MixtureHmmParams& params, double eta);

}  // namespace mixhmm

#endif
