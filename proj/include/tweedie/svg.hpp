#pragma once

// Minimal scatter/line plots rendered as standalone SVG text.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace tweedie::svg {

struct Series {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<double> x;
  std::vector<double> y;
  bool line = false;  ///< polyline instead of markers
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  /// Fixed axis limits; points outside are not drawn.
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
  bool diagonal = false;  ///< dashed y = x reference
  std::vector<Series> series;
  std::vector<std::string> footnotes;
};

namespace detail {

inline std::string num(double v, int precision = 2) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, r.ptr);
}

inline std::string tick_label(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return std::string(buf, r.ptr);
}

inline std::string escape(const std::string& s) {
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

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double t(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (t(v) - t(lo)) / (t(hi) - t(lo)); }
  bool contains(double v) const { return std::isfinite(v) && (!log || v > 0.0) && v >= lo && v <= hi; }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) out.push_back(v);
      }
      return out;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
  }
};

inline Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log,
                      const std::optional<std::pair<double, double>>& fixed) {
  Axis a;
  a.log = log;
  if (fixed) {
    a.lo = fixed->first;
    a.hi = fixed->second;
  } else {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto* v : data)
      for (double x : *v)
        if (std::isfinite(x) && (!log || x > 0.0)) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
    if (!(lo <= hi)) {
      lo = log ? 1.0 : 0.0;
      hi = log ? 10.0 : 1.0;
    }
    if (lo == hi) {
      lo = log ? lo / 2.0 : lo - 0.5;
      hi = log ? hi * 2.0 : hi + 0.5;
    }
    if (log) {
      a.lo = std::pow(10.0, std::floor(std::log10(lo)));
      a.hi = std::pow(10.0, std::ceil(std::log10(hi)));
    } else {
      const double pad = 0.04 * (hi - lo);
      a.lo = lo - pad;
      a.hi = hi + pad;
    }
  }
  if (!(a.hi > a.lo)) a.hi = a.lo + 1.0;
  return a;
}

}  // namespace detail

inline std::string render(const Plot& plot) {
  constexpr double width = 640, height = 480, left = 80, right = 20, top = 40, bottom = 70;
  const double pw = width - left - right, ph = height - top - bottom;

  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : plot.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const auto ax = detail::make_axis(xs, plot.log_x, plot.x_range);
  const auto ay = detail::make_axis(ys, plot.log_y, plot.y_range);
  auto px = [&](double v) { return left + ax.frac(v) * pw; };
  auto py = [&](double v) { return top + (1.0 - ay.frac(v)) * ph; };
  using detail::num;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(plot.title)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ax.ticks()) {
    const double x = px(t);
    os << "<line x1=\"" << num(x) << "\" y1=\"" << top + ph << "\" x2=\"" << num(x) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << detail::tick_label(t)
       << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << num(y) << "\" x2=\"" << left << "\" y2=\"" << num(y)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << detail::tick_label(t)
       << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 30 << "\" text-anchor=\"middle\">"
     << detail::escape(plot.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << top + ph / 2
     << ")\">" << detail::escape(plot.y_label) << "</text>\n";

  if (plot.diagonal) {
    const double lo = std::max(ax.lo, ay.lo), hi = std::min(ax.hi, ay.hi);
    if (hi > lo)
      os << "<line x1=\"" << num(px(lo)) << "\" y1=\"" << num(py(lo)) << "\" x2=\"" << num(px(hi)) << "\" y2=\""
         << num(py(hi)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (const auto& s : plot.series) {
    os << "<g fill=\"" << s.color << "\" stroke=\"" << s.color << "\">\n";
    const auto n = std::min(s.x.size(), s.y.size());
    if (s.line) {
      os << "<polyline fill=\"none\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (!ax.contains(s.x[i]) || !ay.contains(s.y[i])) continue;
        os << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        first = false;
      }
      os << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (!ax.contains(s.x[i]) || !ay.contains(s.y[i])) continue;
        os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2\" fill-opacity=\"0.6\"/>\n";
      }
    }
    os << "</g>\n";
  }

  double ly = top + 16;
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    os << "<rect x=\"" << left + 10 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << s.color
       << "\"/>\n";
    os << "<text x=\"" << left + 26 << "\" y=\"" << ly << "\">" << detail::escape(s.label) << "</text>\n";
    ly += 16;
  }
  double fy = height - 12;
  for (auto it = plot.footnotes.rbegin(); it != plot.footnotes.rend(); ++it) {
    os << "<text x=\"" << left << "\" y=\"" << fy << "\" font-size=\"10\">" << detail::escape(*it) << "</text>\n";
    fy -= 12;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace tweedie::svg
