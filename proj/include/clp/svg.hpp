#pragma once

// Minimal SVG output: filled-cell contour plot via marching squares, and a
// line plot with reference lines.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace clp::svg {

struct Frame {
  double width = 640, height = 480;
  double left = 70, right = 130, top = 40, bottom = 60;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

  double px(double x) const { return left + (x - xmin) / (xmax - xmin) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom); }
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (mult * mag >= raw) {
      step = mult * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
  return out;
}

namespace detail {

inline void open(std::ostringstream& os, const Frame& f, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
     << "\" viewBox=\"0 0 " << num(f.width) << ' ' << num(f.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(f.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
}

inline void axes(std::ostringstream& os, const Frame& f, const std::vector<double>& xticks,
                 const std::vector<std::string>& xlabels, const std::vector<double>& yticks, const std::string& xname,
                 const std::string& yname) {
  const double x0 = f.px(f.xmin), x1 = f.px(f.xmax), y0 = f.py(f.ymin), y1 = f.py(f.ymax);
  os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
     << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < xticks.size(); ++i) {
    const double x = f.px(xticks[i]);
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x) << "\" y2=\"" << num(y0 + 5)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(x) << "\" y=\"" << num(y0 + 18) << "\" text-anchor=\"middle\">" << xlabels[i]
       << "</text>\n";
  }
  for (double t : yticks) {
    const double y = f.py(t);
    os << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
  }
  os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(f.height - 15) << "\" text-anchor=\"middle\">" << xname
     << "</text>\n";
  os << "<text x=\"18\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << num((y0 + y1) / 2) << ")\">" << yname << "</text>\n";
}

// Diverging blue-white-red ramp on t in [0, 1].
inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(60 + u * 195);
    g = static_cast<int>(90 + u * 165);
    b = 220 + static_cast<int>(u * 35);
  } else {
    const double u = (t - 0.5) / 0.5;
    r = 255;
    g = static_cast<int>(255 - u * 175);
    b = static_cast<int>(255 - u * 195);
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

/// A line segment in data coordinates.
struct Segment {
  double x0, y0, x1, y1;
};

/// Marching squares over a rectilinear grid: values[i][j] sits at (xs[i], ys[j]).
/// NaN cells produce no segments.
inline std::vector<Segment> contour_segments(const std::vector<double>& xs, const std::vector<double>& ys,
                                             const std::vector<std::vector<double>>& values, double level) {
  std::vector<Segment> out;
  const auto lerp = [&](double a, double b, double va, double vb) { return a + (level - va) / (vb - va) * (b - a); };
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double v00 = values[i][j], v10 = values[i + 1][j], v11 = values[i + 1][j + 1], v01 = values[i][j + 1];
      if (std::isnan(v00) || std::isnan(v10) || std::isnan(v11) || std::isnan(v01)) continue;
      const int code = (v00 > level ? 1 : 0) | (v10 > level ? 2 : 0) | (v11 > level ? 4 : 0) | (v01 > level ? 8 : 0);
      if (code == 0 || code == 15) continue;
      const double x0 = xs[i], x1 = xs[i + 1], y0 = ys[j], y1 = ys[j + 1];
      // Crossing points on the four edges: bottom, right, top, left.
      const auto bottom = [&] { return std::pair{lerp(x0, x1, v00, v10), y0}; };
      const auto right = [&] { return std::pair{x1, lerp(y0, y1, v10, v11)}; };
      const auto top = [&] { return std::pair{lerp(x0, x1, v01, v11), y1}; };
      const auto left = [&] { return std::pair{x0, lerp(y0, y1, v00, v01)}; };
      const auto add = [&](std::pair<double, double> a, std::pair<double, double> b) {
        out.push_back({a.first, a.second, b.first, b.second});
      };
      const bool centre_high = 0.25 * (v00 + v10 + v11 + v01) > level;
      switch (code) {
        case 1: case 14: add(left(), bottom()); break;
        case 2: case 13: add(bottom(), right()); break;
        case 3: case 12: add(left(), right()); break;
        case 4: case 11: add(right(), top()); break;
        case 6: case 9: add(bottom(), top()); break;
        case 7: case 8: add(left(), top()); break;
        case 5:
          if (centre_high) { add(left(), top()); add(bottom(), right()); }
          else { add(left(), bottom()); add(right(), top()); }
          break;
        case 10:
          if (centre_high) { add(left(), bottom()); add(right(), top()); }
          else { add(left(), top()); add(bottom(), right()); }
          break;
        default: break;
      }
    }
  return out;
}

struct ContourSpec {
  std::string title;
  std::string xname;
  std::string yname;
  std::vector<double> xs;  // plotting coordinates
  std::vector<std::string> xlabels;  // one per xs entry
  std::vector<double> ys;
  std::vector<std::vector<double>> values;  // [x index][y index]
  std::vector<double> levels;
  std::vector<double> dashed_x;  // vertical dashed guides
};

inline std::string contour_plot(const ContourSpec& spec) {
  Frame f;
  f.xmin = spec.xs.front();
  f.xmax = spec.xs.back();
  f.ymin = spec.ys.front();
  f.ymax = spec.ys.back();
  if (f.xmax == f.xmin) f.xmax = f.xmin + 1;
  if (f.ymax == f.ymin) f.ymax = f.ymin + 1;

  double vmin = INFINITY, vmax = -INFINITY;
  for (const auto& col : spec.values)
    for (double v : col)
      if (!std::isnan(v)) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
  if (!(vmax > vmin)) vmax = vmin + 1e-12;

  std::ostringstream os;
  detail::open(os, f, spec.title);
  // Cell shading at each grid value.
  for (std::size_t i = 0; i < spec.xs.size(); ++i)
    for (std::size_t j = 0; j < spec.ys.size(); ++j) {
      const double v = spec.values[i][j];
      if (std::isnan(v)) continue;
      const double xl = i == 0 ? spec.xs[i] : 0.5 * (spec.xs[i - 1] + spec.xs[i]);
      const double xr = i + 1 == spec.xs.size() ? spec.xs[i] : 0.5 * (spec.xs[i] + spec.xs[i + 1]);
      const double yl = j == 0 ? spec.ys[j] : 0.5 * (spec.ys[j - 1] + spec.ys[j]);
      const double yh = j + 1 == spec.ys.size() ? spec.ys[j] : 0.5 * (spec.ys[j] + spec.ys[j + 1]);
      os << "<rect x=\"" << num(f.px(xl)) << "\" y=\"" << num(f.py(yh)) << "\" width=\"" << num(f.px(xr) - f.px(xl))
         << "\" height=\"" << num(f.py(yl) - f.py(yh)) << "\" fill=\"" << detail::ramp((v - vmin) / (vmax - vmin))
         << "\" stroke=\"none\"/>\n";
    }
  std::vector<std::pair<double, double>> labels;
  for (double level : spec.levels) {
    const auto segs = contour_segments(spec.xs, spec.ys, spec.values, level);
    if (segs.empty()) continue;
    os << "<path fill=\"none\" stroke=\"black\" stroke-width=\"1\" d=\"";
    for (const auto& s : segs)
      os << 'M' << num(f.px(s.x0)) << ' ' << num(f.py(s.y0)) << 'L' << num(f.px(s.x1)) << ' ' << num(f.py(s.y1));
    os << "\"/>\n";
    // Label near the horizontal middle, away from labels already placed.
    std::vector<const Segment*> order;
    for (const auto& s : segs) order.push_back(&s);
    const double mid = 0.5 * (f.xmin + f.xmax);
    std::stable_sort(order.begin(), order.end(), [&](const Segment* a, const Segment* b) {
      return std::abs(a->x0 - mid) < std::abs(b->x0 - mid);
    });
    for (const Segment* s : order) {
      const double lx = f.px(s->x0), ly = f.py(s->y0);
      const bool clear = std::none_of(labels.begin(), labels.end(), [&](const auto& p) {
        return std::hypot(p.first - lx, p.second - ly) < 28.0;
      });
      if (!clear) continue;
      labels.emplace_back(lx, ly);
      os << "<text x=\"" << num(lx + 3) << "\" y=\"" << num(ly - 3) << "\" font-size=\"10\">" << num(level)
         << "</text>\n";
      break;
    }
  }
  for (double dx : spec.dashed_x)
    os << "<line x1=\"" << num(f.px(dx)) << "\" y1=\"" << num(f.py(f.ymin)) << "\" x2=\"" << num(f.px(dx))
       << "\" y2=\"" << num(f.py(f.ymax)) << "\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  detail::axes(os, f, spec.xs, spec.xlabels, nice_ticks(f.ymin, f.ymax), spec.xname, spec.yname);
  // Colour bar.
  const double bx = f.width - f.right + 30, btop = f.py(f.ymax), bbot = f.py(f.ymin);
  constexpr int steps = 50;
  for (int k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) / steps;
    const double y = bbot - (k + 1) * (bbot - btop) / steps;
    os << "<rect x=\"" << num(bx) << "\" y=\"" << num(y) << "\" width=\"16\" height=\"" << num((bbot - btop) / steps + 0.5)
       << "\" fill=\"" << detail::ramp(t0 + 0.5 / steps) << "\"/>\n";
  }
  for (double t : nice_ticks(vmin, vmax, 5)) {
    const double y = bbot - (t - vmin) / (vmax - vmin) * (bbot - btop);
    os << "<text x=\"" << num(bx + 22) << "\" y=\"" << num(y + 4) << "\" font-size=\"10\">" << num(t) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

struct LineSpec {
  std::string title;
  std::string xname;
  std::string yname;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ref_y;  // horizontal dashed references
  std::vector<double> ref_x;  // vertical dotted references
};

inline std::string line_plot(const LineSpec& spec) {
  Frame f;
  f.right = 30;
  f.xmin = *std::min_element(spec.xs.begin(), spec.xs.end());
  f.xmax = *std::max_element(spec.xs.begin(), spec.xs.end());
  double lo = INFINITY, hi = -INFINITY;
  for (double y : spec.ys)
    if (!std::isnan(y)) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  for (double y : spec.ref_y) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  f.ymin = lo - pad;
  f.ymax = hi + pad;
  if (f.xmax == f.xmin) f.xmax = f.xmin + 1;

  std::ostringstream os;
  detail::open(os, f, spec.title);
  for (double ry : spec.ref_y)
    os << "<line x1=\"" << num(f.px(f.xmin)) << "\" y1=\"" << num(f.py(ry)) << "\" x2=\"" << num(f.px(f.xmax))
       << "\" y2=\"" << num(f.py(ry)) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
  for (double rx : spec.ref_x)
    os << "<line x1=\"" << num(f.px(rx)) << "\" y1=\"" << num(f.py(f.ymin)) << "\" x2=\"" << num(f.px(rx))
       << "\" y2=\"" << num(f.py(f.ymax)) << "\" stroke=\"gray\" stroke-dasharray=\"2 3\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < spec.xs.size(); ++i)
    if (!std::isnan(spec.ys[i])) os << num(f.px(spec.xs[i])) << ',' << num(f.py(spec.ys[i])) << ' ';
  os << "\"/>\n";
  const auto xt = nice_ticks(f.xmin, f.xmax);
  std::vector<std::string> xl;
  for (double t : xt) xl.push_back(num(t));
  detail::axes(os, f, xt, xl, nice_ticks(f.ymin, f.ymax), spec.xname, spec.yname);
  os << "</svg>\n";
  return os.str();
}

}  // namespace clp::svg
