#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "spiro/flow_curve.hpp"
#include "spiro/report.hpp"

namespace spiro {

// time_s,flow_lps
void write_flow_time_csv(std::ostream& out, const FlowCurve& curve);

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
};

// Single polyline with axes and tick labels. Standalone SVG document.
std::string svg_line_plot(std::span<const double> xs, std::span<const double> ys, const PlotSpec& spec);

std::string svg_flow_time(const FlowCurve& curve);
std::string svg_volume_time(const SpirometryReport& report);
std::string svg_flow_volume(const SpirometryReport& report);

}  // namespace spiro
