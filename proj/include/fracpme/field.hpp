#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fracpme/error.hpp"

namespace fracpme {

enum class Topology { periodic, truncated_line };

// Uniform cell-centred mesh. Centres are x_left + (i + 1/2) h.
struct Grid {
  int n = 0;
  double h = 0.0;
  double x_left = 0.0;
  Topology topology = Topology::truncated_line;

  static Grid make(int n, double h, double x_left, Topology topo);
  // n cells covering [a, b].
  static Grid span(int n, double a, double b, Topology topo);

  double x(int i) const { return x_left + (i + 0.5) * h; }
  double length() const { return n * h; }
  double x_right() const { return x_left + n * h; }
  std::vector<double> centers() const;

  bool operator==(const Grid&) const = default;
};

std::string to_string(Topology t);

enum class FieldKind { density, pressure, integrated };

std::string to_string(FieldKind k);

// Values on a grid, validated on construction and immutable afterwards.
// pressure is the unconstrained kind (any finite values).
// integrated fields may dip by 1e-12 of their range between neighbours;
// explicit updates produce that much rounding.
class Field {
 public:
  Field(Grid grid, std::vector<double> values, FieldKind kind);

  static Field zeros(const Grid& grid, FieldKind kind);
  static Field sample(const Grid& grid, const std::function<double(double)>& f,
                      FieldKind kind);

  const Grid& grid() const { return grid_; }
  FieldKind kind() const { return kind_; }
  int size() const { return grid_.n; }
  std::span<const double> values() const& { return values_; }
  std::span<const double> values() const&& = delete;
  const std::vector<double>& vec() const& { return values_; }
  const std::vector<double>& vec() const&& = delete;
  double operator[](int i) const { return values_[static_cast<size_t>(i)]; }
  double max() const;
  double min() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  FieldKind kind_;
};

// Centred difference; one-sided at the ends of a truncated line.
Field gradient(const Field& f);

// h * sum(values). Requires a density.
double mass(const Field& u);

// Midpoint quadrature of arbitrary field values.
double integrate(const Field& f);

// v_i = h * sum_{j<=i} u_j. Requires a density on a truncated line.
Field cumulative(const Field& u);

// h * sum |f - g| on identical grids.
double l1_distance(const Field& f, const Field& g);

// CSV snapshot with header x,value at 17 significant digits.
std::string field_to_csv(const Field& f);
void write_field_csv(const std::string& path, const Field& f);
// Reads a snapshot onto the given grid. The x column must match the grid
// centres to 1e-9 h.
Field read_field_csv(const std::string& path, const Grid& grid, FieldKind kind);
Field parse_field_csv(const std::string& text, const Grid& grid, FieldKind kind);

std::string format_double(double v);

}  // namespace fracpme
