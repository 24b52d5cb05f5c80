#pragma once

#include <string>
#include <vector>

namespace fracpme::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logy = false;  // non-positive values are dropped
  std::vector<Series> series;
};

// Polyline chart with axes, ticks and a legend. No timestamp or other
// run-dependent metadata.
std::string line_plot(const Plot& plot);

struct PhaseCell {
  double m = 0.0;
  double s = 0.0;
  std::string classification;  // finite_evidence | infinite_evidence | inconclusive
};

// One strip per s: solid red segments for infinite evidence, dotted blue
// for finite, grey crosses for inconclusive cells; dashed marker at m = split.
std::string phase_strip(const std::vector<PhaseCell>& cells, double split = 2.0);

}  // namespace fracpme::svg
