#include "fracpme/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "fracpme/io.hpp"

namespace fracpme {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Grid Grid::make(int n, double h, double x_left, Topology topo) {
  require(n >= 8, "grid needs n >= 8, got " + std::to_string(n));
  require(std::isfinite(h) && h > 0.0, "grid spacing must be positive");
  require(std::isfinite(x_left), "grid x_left must be finite");
  if (topo == Topology::periodic)
    require(is_pow2(n), "periodic grid needs n a power of two, got " + std::to_string(n));
  return Grid{n, h, x_left, topo};
}

Grid Grid::span(int n, double a, double b, Topology topo) {
  require(b > a, "grid interval must have b > a");
  return make(n, (b - a) / n, a, topo);
}

std::vector<double> Grid::centers() const {
  std::vector<double> xs(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) xs[i] = x(i);
  return xs;
}

std::string to_string(Topology t) {
  return t == Topology::periodic ? "periodic" : "truncated_line";
}

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::density: return "density";
    case FieldKind::pressure: return "pressure";
    case FieldKind::integrated: return "integrated";
  }
  return "?";
}

Field::Field(Grid grid, std::vector<double> values, FieldKind kind)
    : grid_(grid), values_(std::move(values)), kind_(kind) {
  require(static_cast<int>(values_.size()) == grid_.n,
          "field length " + std::to_string(values_.size()) + " != grid n " +
              std::to_string(grid_.n));
  double amax = 0.0;
  for (size_t i = 0; i < values_.size(); ++i) {
    double v = values_[i];
    require(std::isfinite(v), "field value not finite at cell " + std::to_string(i));
    amax = std::max(amax, std::abs(v));
  }
  if (kind_ == FieldKind::density) {
    for (size_t i = 0; i < values_.size(); ++i)
      require(values_[i] >= 0.0, "density negative at cell " + std::to_string(i));
  } else if (kind_ == FieldKind::integrated) {
    double tol = 1e-12 * amax;
    for (size_t i = 1; i < values_.size(); ++i)
      require(values_[i] >= values_[i - 1] - tol,
              "integrated field decreases at cell " + std::to_string(i));
  }
}

Field Field::zeros(const Grid& grid, FieldKind kind) {
  return Field(grid, std::vector<double>(static_cast<size_t>(grid.n), 0.0), kind);
}

Field Field::sample(const Grid& grid, const std::function<double(double)>& f,
                    FieldKind kind) {
  std::vector<double> v(static_cast<size_t>(grid.n));
  for (int i = 0; i < grid.n; ++i) v[i] = f(grid.x(i));
  return Field(grid, std::move(v), kind);
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

Field gradient(const Field& f) {
  const Grid& g = f.grid();
  const int n = g.n;
  const auto& v = f.vec();
  std::vector<double> d(static_cast<size_t>(n));
  for (int i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * g.h);
  if (g.topology == Topology::periodic) {
    d[0] = (v[1] - v[n - 1]) / (2.0 * g.h);
    d[n - 1] = (v[0] - v[n - 2]) / (2.0 * g.h);
  } else {
    d[0] = (v[1] - v[0]) / g.h;
    d[n - 1] = (v[n - 1] - v[n - 2]) / g.h;
  }
  return Field(g, std::move(d), FieldKind::pressure);
}

double mass(const Field& u) {
  require(u.kind() == FieldKind::density, "mass needs a density field");
  return integrate(u);
}

double integrate(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return f.grid().h * s;
}

Field cumulative(const Field& u) {
  require(u.kind() == FieldKind::density, "cumulative needs a density field");
  require(u.grid().topology == Topology::truncated_line,
          "cumulative of a periodic density is not periodic");
  std::vector<double> v(static_cast<size_t>(u.size()));
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    s += u[i];
    v[i] = u.grid().h * s;
  }
  return Field(u.grid(), std::move(v), FieldKind::integrated);
}

double l1_distance(const Field& f, const Field& g) {
  require(f.grid() == g.grid(), "l1_distance needs identical grids");
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += std::abs(f[i] - g[i]);
  return f.grid().h * s;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string field_to_csv(const Field& f) {
  std::string out = "x,value\n";
  out.reserve(out.size() + static_cast<size_t>(f.size()) * 48);
  for (int i = 0; i < f.size(); ++i) {
    out += format_double(f.grid().x(i));
    out += ',';
    out += format_double(f[i]);
    out += '\n';
  }
  return out;
}

void write_field_csv(const std::string& path, const Field& f) {
  io::write_atomic(path, field_to_csv(f));
}

namespace {

double parse_num(const std::string& s, int line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw ConfigError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

Field parse_field_csv(const std::string& text, const Grid& grid, FieldKind kind) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,value") throw ConfigError("csv header must be 'x,value'");
  std::vector<double> vals;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ConfigError("csv line " + std::to_string(lineno) + ": missing comma");
    double x = parse_num(line.substr(0, comma), lineno);
    double v = parse_num(line.substr(comma + 1), lineno);
    int i = static_cast<int>(vals.size());
    if (i >= grid.n) throw ConfigError("csv has more rows than grid cells");
    if (std::abs(x - grid.x(i)) > 1e-9 * grid.h)
      throw ConfigError("csv x at row " + std::to_string(i) + " does not match the grid");
    vals.push_back(v);
  }
  if (static_cast<int>(vals.size()) != grid.n)
    throw ConfigError("csv has " + std::to_string(vals.size()) + " rows, grid has " +
                      std::to_string(grid.n));
  try {
    return Field(grid, std::move(vals), kind);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("csv field invalid: ") + e.what());
  }
}

Field read_field_csv(const std::string& path, const Grid& grid, FieldKind kind) {
  return parse_field_csv(io::read_file(path), grid, kind);
}

}  // namespace fracpme
