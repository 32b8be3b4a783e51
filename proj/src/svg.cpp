#include "rdslab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rdslab::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const std::string& anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

/// Piecewise-linear viridis approximation.
std::string ramp(double t) {
  static const double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(static_cast<int>(t), 3);
  const double a = t - k;
  int c[3];
  for (int i = 0; i < 3; ++i) c[i] = static_cast<int>(std::lround(stops[k][i] + a * (stops[k + 1][i] - stops[k][i])));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

struct Frame {
  double left, top, width, height;
  double x0, x1, y0, y1;
  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s = "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) +
                  "\" height=\"" + num(f.height) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s += text(f.px(xv), f.top + f.height + 14, tick(xv));
    s += text(f.left - 4, f.py(yv) + 4, tick(yv), "end");
  }
  if (!xlabel.empty()) s += text(f.left + f.width / 2, f.top + f.height + 30, xlabel);
  if (!ylabel.empty()) {
    s += "<text transform=\"translate(" + num(f.left - 58) + "," + num(f.top + f.height / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
  }
  return s;
}

std::string polyline(const Frame& f, const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& color, double width) {
  std::string pts;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (i) pts += ' ';
    pts += num(f.px(x[i])) + "," + num(f.py(y[i]));
  }
  return "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + num(width) + "\" points=\"" + pts +
         "\"/>\n";
}

void pad(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

}  // namespace

std::string heatmap(const std::vector<std::vector<double>>& grid, const std::string& title) {
  const double size = 400.0;
  Frame f{60, 40, size, size, 0, 1, 0, 1};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : grid)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) hi = lo + 1.0;
  std::string s = header(size + 140, size + 90);
  s += text(f.left + size / 2, 22, title);
  const std::size_t m = grid.size();
  const double cell = size / static_cast<double>(std::max<std::size_t>(m, 1));
  for (std::size_t iy = 0; iy < m; ++iy) {
    for (std::size_t ix = 0; ix < grid[iy].size(); ++ix) {
      s += "<rect x=\"" + num(f.left + cell * ix) + "\" y=\"" + num(f.top + size - cell * (iy + 1)) + "\" width=\"" +
           num(cell + 0.01) + "\" height=\"" + num(cell + 0.01) + "\" fill=\"" + ramp((grid[iy][ix] - lo) / (hi - lo)) +
           "\"/>\n";
    }
  }
  s += axes(f, "x", "y");
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    s += "<rect x=\"" + num(f.left + size + 20) + "\" y=\"" + num(f.top + size * (1 - t) - size / 11) +
         "\" width=\"16\" height=\"" + num(size / 11 + 0.01) + "\" fill=\"" + ramp(t) + "\"/>\n";
  }
  s += text(f.left + size + 40, f.top - 4, tick(hi), "start");
  s += text(f.left + size + 40, f.top + size + 10, tick(lo), "start");
  return s + "</svg>\n";
}

std::string lines(const std::vector<Polyline>& curves, const std::string& title, const std::string& xlabel,
                  const std::string& ylabel) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : curves) {
    for (double v : c.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : c.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (curves.empty()) x0 = y0 = 0, x1 = y1 = 1;
  pad(x0, x1);
  pad(y0, y1);
  Frame f{70, 40, 440, 440, x0, x1, y0, y1};
  std::string s = header(540, 530);
  s += text(f.left + f.width / 2, 22, title);
  for (const auto& c : curves) s += polyline(f, c.x, c.y, c.color, c.width);
  s += axes(f, xlabel, ylabel);
  return s + "</svg>\n";
}

std::string histogram_panels(const std::vector<HistogramPanel>& panels, int columns) {
  columns = std::max(columns, 1);
  const int rows = (static_cast<int>(panels.size()) + columns - 1) / columns;
  const double pw = 300, ph = 220;
  std::string s = header(columns * pw, std::max(rows, 1) * ph);
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const HistogramPanel& p = panels[k];
    const double ox = (k % columns) * pw, oy = (k / columns) * ph;
    double x0 = p.edges.empty() ? 0 : p.edges.front(), x1 = p.edges.empty() ? 1 : p.edges.back();
    double y1 = 0;
    for (double h : p.heights) y1 = std::max(y1, h);
    for (double c : p.curve_y) y1 = std::max(y1, c);
    if (!(y1 > 0)) y1 = 1;
    Frame f{ox + 55, oy + 30, pw - 75, ph - 70, x0, x1, 0, 1.1 * y1};
    s += text(f.left + f.width / 2, oy + 18, p.title);
    for (std::size_t b = 0; b + 1 < p.edges.size() && b < p.heights.size(); ++b) {
      const double xa = f.px(p.edges[b]), xb = f.px(p.edges[b + 1]), yt = f.py(p.heights[b]);
      s += "<rect x=\"" + num(xa) + "\" y=\"" + num(yt) + "\" width=\"" + num(xb - xa) + "\" height=\"" +
           num(f.py(0) - yt) + "\" fill=\"#9ecae1\" stroke=\"#6baed6\" stroke-width=\"0.5\"/>\n";
    }
    s += polyline(f, p.curve_x, p.curve_y, "#d62728", 1.5);
    s += axes(f, "u", "");
  }
  return s + "</svg>\n";
}

}  // namespace rdslab::svg
