#include "fracpme/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace fracpme::svg {

namespace {

constexpr double W = 720, H = 440, ML = 80, MR = 160, MT = 40, MB = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const std::string& anchor = "middle",
                 const std::string& extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\"" + extra +
         ">" + escape(s) + "</text>\n";
}

}  // namespace

std::string line_plot(const Plot& plot) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double y) { return plot.logy ? std::log10(y) : y; };
  for (const auto& s : plot.series)
    for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.logy && s.y[i] <= 0.0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - ML - MR, ph = H - MT - MB;
  auto px = [&](double x) { return ML + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return MT + ph - (y - y0) / (y1 - y0) * ph; };

  std::string o = header(W, H);
  o += text(ML + pw / 2, 22, plot.title, "middle", " font-size=\"14\"");
  o += "<rect x=\"" + num(ML) + "\" y=\"" + num(MT) + "\" width=\"" + num(pw) + "\" height=\"" +
       num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5, yv = y0 + (y1 - y0) * k / 5;
    o += "<line x1=\"" + num(px(xv)) + "\" y1=\"" + num(MT + ph) + "\" x2=\"" + num(px(xv)) +
         "\" y2=\"" + num(MT + ph + 5) + "\" stroke=\"black\"/>\n";
    o += text(px(xv), MT + ph + 18, tick_label(xv));
    o += "<line x1=\"" + num(ML - 5) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(ML) +
         "\" y2=\"" + num(py(yv)) + "\" stroke=\"black\"/>\n";
    o += text(ML - 8, py(yv) + 4, plot.logy ? "1e" + tick_label(yv) : tick_label(yv), "end");
  }
  o += text(ML + pw / 2, H - 15, plot.xlabel);
  o += text(18, MT + ph / 2, plot.ylabel, "middle",
            " transform=\"rotate(-90 18 " + num(MT + ph / 2) + ")\"");
  int row = 0;
  for (const auto& s : plot.series) {
    std::string pts;
    for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.logy && s.y[i] <= 0.0)) continue;
      pts += num(px(s.x[i])) + "," + num(py(ty(s.y[i]))) + " ";
    }
    const std::string dash = s.dashed ? " stroke-dasharray=\"4 3\"" : "";
    o += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" + dash +
         " points=\"" + pts + "\"/>\n";
    const double ly = MT + 14 + 18 * row++;
    o += "<line x1=\"" + num(W - MR + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
         num(W - MR + 36) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + s.color +
         "\" stroke-width=\"1.5\"" + dash + "/>\n";
    o += text(W - MR + 42, ly, s.label, "start");
  }
  return o + "</svg>\n";
}

std::string phase_strip(const std::vector<PhaseCell>& cells, double split) {
  std::map<double, std::vector<PhaseCell>> rows;
  double m0 = split, m1 = split;
  for (const auto& c : cells) {
    rows[c.s].push_back(c);
    m0 = std::min(m0, c.m);
    m1 = std::max(m1, c.m);
  }
  const double pad = 0.1 * std::max(m1 - m0, 0.5);
  m0 -= pad;
  m1 += pad;
  const double rh = 50, top = 50;
  const double h = top + rh * std::max<size_t>(rows.size(), 1) + 70;
  const double pw = W - ML - MR;
  auto px = [&](double m) { return ML + (m - m0) / (m1 - m0) * pw; };
  std::string o = header(W, h);
  o += text(ML + pw / 2, 24, "propagation regime", "middle", " font-size=\"14\"");
  const double bottom = top + rh * std::max<size_t>(rows.size(), 1);
  o += "<line x1=\"" + num(px(split)) + "\" y1=\"" + num(top - 10) + "\" x2=\"" + num(px(split)) +
       "\" y2=\"" + num(bottom) + "\" stroke=\"black\" stroke-dasharray=\"2 4\"/>\n";
  o += text(px(split), top - 14, "m = " + tick_label(split));
  int r = 0;
  for (auto& [s, row] : rows) {
    std::sort(row.begin(), row.end(), [](const PhaseCell& a, const PhaseCell& b) { return a.m < b.m; });
    const double y = top + rh * r++ + rh / 2;
    o += text(ML - 8, y + 4, "s = " + tick_label(s), "end");
    for (size_t i = 0; i < row.size(); ++i) {
      // each cell owns the half-way span to its neighbours
      const double a = i == 0 ? row[i].m - pad / 2 : 0.5 * (row[i - 1].m + row[i].m);
      const double b = i + 1 == row.size() ? row[i].m + pad / 2 : 0.5 * (row[i].m + row[i + 1].m);
      const std::string& c = row[i].classification;
      if (c == "infinite_evidence") {
        o += "<line x1=\"" + num(px(a)) + "\" y1=\"" + num(y) + "\" x2=\"" + num(px(b)) + "\" y2=\"" +
             num(y) + "\" stroke=\"red\" stroke-width=\"4\"/>\n";
      } else if (c == "finite_evidence") {
        o += "<line x1=\"" + num(px(a)) + "\" y1=\"" + num(y) + "\" x2=\"" + num(px(b)) + "\" y2=\"" +
             num(y) + "\" stroke=\"blue\" stroke-width=\"4\" stroke-dasharray=\"2 5\"/>\n";
      } else {
        const double xc = px(row[i].m);
        o += "<path d=\"M" + num(xc - 5) + "," + num(y - 5) + " L" + num(xc + 5) + "," + num(y + 5) +
             " M" + num(xc - 5) + "," + num(y + 5) + " L" + num(xc + 5) + "," + num(y - 5) +
             "\" stroke=\"grey\" stroke-width=\"2\"/>\n";
      }
      o += "<circle cx=\"" + num(px(row[i].m)) + "\" cy=\"" + num(y) + "\" r=\"2.5\" fill=\"black\"/>\n";
    }
  }
  o += "<line x1=\"" + num(ML) + "\" y1=\"" + num(bottom + 10) + "\" x2=\"" + num(ML + pw) +
       "\" y2=\"" + num(bottom + 10) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double mv = m0 + (m1 - m0) * k / 5;
    o += text(px(mv), bottom + 26, tick_label(mv));
  }
  o += text(ML + pw / 2, bottom + 46, "m");
  o += "<line x1=\"" + num(W - MR + 12) + "\" y1=\"" + num(top) + "\" x2=\"" + num(W - MR + 36) +
       "\" y2=\"" + num(top) + "\" stroke=\"red\" stroke-width=\"4\"/>\n";
  o += text(W - MR + 42, top + 4, "infinite", "start");
  o += "<line x1=\"" + num(W - MR + 12) + "\" y1=\"" + num(top + 20) + "\" x2=\"" + num(W - MR + 36) +
       "\" y2=\"" + num(top + 20) + "\" stroke=\"blue\" stroke-width=\"4\" stroke-dasharray=\"2 5\"/>\n";
  o += text(W - MR + 42, top + 24, "finite", "start");
  o += text(W - MR + 24, top + 44, "x", "middle", " fill=\"grey\"");
  o += text(W - MR + 42, top + 44, "inconclusive", "start");
  return o + "</svg>\n";
}

}  // namespace fracpme::svg
