#include "spiro/export.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "spiro/error.hpp"

namespace spiro {

void write_flow_time_csv(std::ostream& out, const FlowCurve& curve) {
  out << "time_s,flow_lps\n" << std::setprecision(10);
  for (std::size_t i = 0; i < curve.times_s.size(); ++i) {
    out << curve.times_s[i] << ',' << curve.flows_lps[i] << '\n';
  }
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1, 2 or 5 times a power of ten, giving roughly `target` ticks.
double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

struct Range {
  double lo, hi;
};

Range padded_range(std::span<const double> v) {
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  double lo = std::min(0.0, *mn), hi = *mx;
  if (!(hi > lo)) hi = lo + 1.0;
  return {lo, hi + 0.05 * (hi - lo)};
}

}  // namespace

std::string svg_line_plot(std::span<const double> xs, std::span<const double> ys, const PlotSpec& spec) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidParams, "plot series lengths differ");
  const double left = 64, right = 16, top = 36, bottom = 48;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;
  const Range xr = xs.empty() ? Range{0, 1} : padded_range(xs);
  const Range yr = ys.empty() ? Range{0, 1} : padded_range(ys);
  const auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << spec.width / 2.0 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";

  const double xs_step = nice_step(xr.hi - xr.lo, 8);
  for (double t = std::ceil(xr.lo / xs_step) * xs_step; t <= xr.hi + 1e-12; t += xs_step) {
    svg << "<line x1=\"" << px(t) << "\" y1=\"" << top << "\" x2=\"" << px(t) << "\" y2=\"" << top + ph
        << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << px(t) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << std::defaultfloat
        << std::setprecision(4) << t << std::fixed << std::setprecision(2) << "</text>\n";
  }
  const double ys_step = nice_step(yr.hi - yr.lo, 6);
  for (double t = std::ceil(yr.lo / ys_step) * ys_step; t <= yr.hi + 1e-12; t += ys_step) {
    svg << "<line x1=\"" << left << "\" y1=\"" << py(t) << "\" x2=\"" << left + pw << "\" y2=\"" << py(t)
        << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">" << std::defaultfloat
        << std::setprecision(4) << t << std::fixed << std::setprecision(2) << "</text>\n";
  }
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << spec.height - 10 << "\" text-anchor=\"middle\">"
      << escape(spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.y_label) << "</text>\n";

  svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) svg << px(xs[i]) << ',' << py(ys[i]) << ' ';
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

std::string svg_flow_time(const FlowCurve& curve) {
  return svg_line_plot(curve.times_s, curve.flows_lps, {"Flow-time", "time (s)", "flow (L/s)"});
}

std::string svg_volume_time(const SpirometryReport& report) {
  return svg_line_plot(report.volume_time.t_s, report.volume_time.volume_l,
                       {"Volume-time", "time (s)", "volume (L)"});
}

std::string svg_flow_volume(const SpirometryReport& report) {
  return svg_line_plot(report.flow_volume.volume_l, report.flow_volume.flow_lps,
                       {"Flow-volume", "volume (L)", "flow (L/s)"});
}

}  // namespace spiro
