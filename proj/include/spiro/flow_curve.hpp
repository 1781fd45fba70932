#pragma once

#include <set>
#include <string_view>
#include <vector>

namespace spiro {

enum class QualityFlag {
  ClampedNegativeFlow,
  ExtrapolatedBeyondCalibration,
  RiseLinearFallback,
  RiseDegenerate,
  TailCapped,
  ObstructivePattern,
  AtypicallyHighRatio,
};

std::string_view quality_flag_name(QualityFlag flag);

using QualityFlags = std::set<QualityFlag>;

// Flow over time. Times strictly increasing; flows finite and >= 0.
struct FlowCurve {
  std::vector<double> times_s;
  std::vector<double> flows_lps;
  QualityFlags quality_flags;

  std::size_t size() const { return times_s.size(); }
  bool empty() const { return times_s.empty(); }
};

// Throws InvalidParams when the curve breaks its invariants.
void validate(const FlowCurve& curve);

}  // namespace spiro
