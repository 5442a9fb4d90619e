#pragma once

// Discretized unit box, shifted dyadic grids, and piecewise-constant grid
// functions. All geometry is exact: lengths are integers in units of
// 1/(3*2^L), which puts every cube of every {0,1/3,2/3}-shifted grid on a
// common lattice. Sample cells (the resolution of grid functions) are the
// 2^L standard cells per axis, i.e. 3 units wide.

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orlx/common.hpp"

namespace orlx {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b, r = a % b;
  return (r != 0 && (r < 0) != (b < 0)) ? q - 1 : q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return -floor_div(-a, b);
}

// ---------------------------------------------------------------------------

struct Domain {
  int dim = 1;
  int depth = 0;  // L: 2^L sample cells per axis

  Domain() = default;
  Domain(int dim_, int depth_) : dim(dim_), depth(depth_) {
    if (dim != 1 && dim != 2)
      throw std::invalid_argument("Domain: dim must be 1 or 2");
    const int cap = (dim == 1) ? 22 : 10;
    if (depth < 0 || depth > cap)
      throw std::invalid_argument("Domain: depth out of range");
  }

  std::int64_t cells_per_side() const { return std::int64_t(1) << depth; }
  std::int64_t total_cells() const {
    std::int64_t c = cells_per_side();
    return dim == 1 ? c : c * c;
  }
  std::int64_t units_per_side() const { return std::int64_t(3) << depth; }
  // total measure of the box in units^dim
  std::int64_t units_total() const {
    std::int64_t u = units_per_side();
    return dim == 1 ? u : u * u;
  }
  double cell_width() const { return 1.0 / double(cells_per_side()); }

  bool operator==(const Domain& o) const {
    return dim == o.dim && depth == o.depth;
  }
  bool operator!=(const Domain& o) const { return !(*this == o); }
};

// A dyadic grid shifted by sigma_d = s_d/3, s_d in {0,1,2}, clipped to the
// box (no wrap-around).
struct Grid {
  Domain domain;
  std::array<int, 2> shift_thirds{{0, 0}};

  Grid() = default;
  Grid(const Domain& dom, std::array<int, 2> thirds)
      : domain(dom), shift_thirds(thirds) {
    for (int d = 0; d < dom.dim; ++d)
      if (thirds[d] < 0 || thirds[d] > 2)
        throw std::invalid_argument("Grid: shift thirds must be 0, 1 or 2");
  }

  // sigma_d in lattice units: (s_d/3) * 3*2^L = s_d * 2^L
  std::int64_t shift_units(int d) const {
    return std::int64_t(shift_thirds[d]) << domain.depth;
  }

  bool operator==(const Grid& o) const {
    return domain == o.domain && shift_thirds == o.shift_thirds;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline Grid standard_grid(const Domain& dom) { return Grid(dom, {0, 0}); }

// All 3^dim shifted grids, standard first, lexicographic in (s0, s1).
inline std::vector<Grid> shifted_family(const Domain& dom) {
  std::vector<Grid> out;
  if (dom.dim == 1) {
    for (int s = 0; s < 3; ++s) out.push_back(Grid(dom, {s, 0}));
  } else {
    for (int s0 = 0; s0 < 3; ++s0)
      for (int s1 = 0; s1 < 3; ++s1) out.push_back(Grid(dom, {s0, s1}));
  }
  return out;
}

// Axis-aligned box in lattice units, half-open.
struct BoxU {
  int dim = 1;
  std::array<std::int64_t, 2> lo{{0, 0}};
  std::array<std::int64_t, 2> hi{{0, 0}};

  std::int64_t side_units(int d) const { return std::max<std::int64_t>(0, hi[d] - lo[d]); }
  std::int64_t measure_units() const {
    std::int64_t m = side_units(0);
    if (dim == 2) m *= side_units(1);
    return m;
  }
  bool empty() const { return measure_units() == 0; }
};

// A (possibly boundary-clipped) cube of a shifted grid: level k and integer
// index per axis. Indices may be -1 for the clipped piece left of the shift.
struct Cube {
  Grid grid;
  int level = 0;
  std::array<std::int64_t, 2> index{{0, 0}};

  Cube() = default;
  Cube(const Grid& g, int k, std::array<std::int64_t, 2> idx)
      : grid(g), level(k), index(idx) {
    if (k < 0 || k > g.domain.depth)
      throw std::invalid_argument("Cube: level out of range");
  }

  std::int64_t nominal_side_units() const {
    return std::int64_t(3) << (grid.domain.depth - level);
  }
  double nominal_side() const {
    return 1.0 / double(std::int64_t(1) << level);
  }

  // Unclipped lower corner in units (may be negative or beyond the box).
  std::int64_t raw_lo(int d) const {
    return grid.shift_units(d) + index[d] * nominal_side_units();
  }

  BoxU realized() const {
    BoxU b;
    b.dim = grid.domain.dim;
    const std::int64_t ups = grid.domain.units_per_side();
    for (int d = 0; d < b.dim; ++d) {
      const std::int64_t lo = raw_lo(d);
      const std::int64_t hi = lo + nominal_side_units();
      b.lo[d] = std::clamp<std::int64_t>(lo, 0, ups);
      b.hi[d] = std::clamp<std::int64_t>(hi, 0, ups);
      if (b.hi[d] < b.lo[d]) b.hi[d] = b.lo[d];
    }
    return b;
  }

  bool empty() const { return realized().empty(); }

  // realized measure as a fraction of the unit box
  double measure() const {
    const BoxU b = realized();
    const double ups = double(grid.domain.units_per_side());
    double m = double(b.side_units(0)) / ups;
    if (b.dim == 2) m *= double(b.side_units(1)) / ups;
    return m;
  }

  Cube parent() const {
    if (level == 0) throw std::logic_error("Cube::parent of a root");
    return Cube(grid, level - 1, {floor_div(index[0], 2), floor_div(index[1], 2)});
  }

  std::vector<Cube> children() const {
    if (level >= grid.domain.depth) return {};
    std::vector<Cube> out;
    const int n = grid.domain.dim;
    for (int j0 = 0; j0 < 2; ++j0) {
      for (int j1 = 0; j1 < (n == 2 ? 2 : 1); ++j1) {
        Cube c(grid, level + 1, {2 * index[0] + j0, 2 * index[1] + j1});
        if (!c.empty()) out.push_back(c);
      }
    }
    return out;
  }

  bool operator==(const Cube& o) const {
    return grid == o.grid && level == o.level && index == o.index;
  }
};

// Per-axis index range of nonempty level-k cubes. The lower end is the
// first index whose (unclipped) cube pokes into [0,1); for shifted grids
// that index is negative once the cube side drops below the shift.
inline std::pair<std::int64_t, std::int64_t> cube_index_range(const Grid& g,
                                                              int level,
                                                              int d) {
  const std::int64_t ups = g.domain.units_per_side();
  const std::int64_t su = g.shift_units(d);
  const std::int64_t side = std::int64_t(3) << (g.domain.depth - level);
  const std::int64_t m_lo = floor_div(-su, side);
  const std::int64_t m_hi = (ups - su - 1) / side;  // su < ups always
  return {m_lo, m_hi};
}

// All nonempty level-k cubes, index-ascending (lexicographic for dim 2).
inline std::vector<Cube> cells(const Grid& g, int level) {
  if (level < 0 || level > g.domain.depth)
    throw std::invalid_argument("cells: level out of range");
  std::vector<Cube> out;
  const auto [a0, b0] = cube_index_range(g, level, 0);
  if (g.domain.dim == 1) {
    for (std::int64_t m = a0; m <= b0; ++m) out.push_back(Cube(g, level, {m, 0}));
  } else {
    const auto [a1, b1] = cube_index_range(g, level, 1);
    for (std::int64_t m0 = a0; m0 <= b0; ++m0)
      for (std::int64_t m1 = a1; m1 <= b1; ++m1)
        out.push_back(Cube(g, level, {m0, m1}));
  }
  return out;
}

// The level-k cube of g whose realization contains the center of sample
// cell c (per-axis cell coordinates).
inline Cube cube_containing_cell(const Grid& g, int level,
                                 std::array<std::int64_t, 2> cell) {
  std::array<std::int64_t, 2> idx{{0, 0}};
  const std::int64_t side2 = std::int64_t(6) << (g.domain.depth - level);
  for (int d = 0; d < g.domain.dim; ++d) {
    const std::int64_t center2 = 6 * cell[d] + 3;       // half-units
    const std::int64_t su2 = 2 * g.shift_units(d);
    idx[d] = floor_div(center2 - su2, side2);
  }
  return Cube(g, level, idx);
}

// Concentric triple of the (unclipped) cube, clipped to the box.
inline BoxU dilate3(const Cube& q) {
  BoxU b;
  b.dim = q.grid.domain.dim;
  const std::int64_t ups = q.grid.domain.units_per_side();
  const std::int64_t side = q.nominal_side_units();
  for (int d = 0; d < b.dim; ++d) {
    const std::int64_t lo = q.raw_lo(d) - side;
    const std::int64_t hi = q.raw_lo(d) + 2 * side;
    b.lo[d] = std::clamp<std::int64_t>(lo, 0, ups);
    b.hi[d] = std::clamp<std::int64_t>(hi, 0, ups);
  }
  return b;
}

// Sample-cell range [c_lo, c_hi) whose centers lie in [lo, hi) (units).
inline std::pair<std::int64_t, std::int64_t> cell_center_range(
    std::int64_t lo, std::int64_t hi) {
  return {ceil_div(2 * lo - 3, 6), ceil_div(2 * hi - 3, 6)};
}

// ---------------------------------------------------------------------------
// Piecewise-constant function on the 2^(L*dim) sample cells, with prefix
// sums (dim 1) or a summed-area table (dim 2) for O(1) box integrals.

struct GridFunction {
  Domain domain;
  std::vector<double> values;  // row-major: cell (i0,i1) -> i0*N + i1
  std::vector<double> table;   // prefix sums / SAT, size (N+1) or (N+1)^2

  GridFunction() = default;

  GridFunction(const Domain& dom, std::vector<double> vals)
      : domain(dom), values(std::move(vals)) {
    if (std::int64_t(values.size()) != dom.total_cells())
      throw std::invalid_argument("GridFunction: wrong value count");
    for (double v : values)
      if (!std::isfinite(v))
        throw std::invalid_argument("GridFunction: entries must be finite");
    rebuild_table();
  }

  static GridFunction constant(const Domain& dom, double c) {
    return GridFunction(dom, std::vector<double>(dom.total_cells(), c));
  }

  std::int64_t size() const { return std::int64_t(values.size()); }
  double operator[](std::int64_t i) const { return values[i]; }
  double at(std::int64_t i0, std::int64_t i1) const {
    return values[i0 * domain.cells_per_side() + i1];
  }

  void rebuild_table() {
    const std::int64_t n = domain.cells_per_side();
    if (domain.dim == 1) {
      table.assign(n + 1, 0.0);
      for (std::int64_t i = 0; i < n; ++i) table[i + 1] = table[i] + values[i];
    } else {
      table.assign((n + 1) * (n + 1), 0.0);
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j)
          table[(i + 1) * (n + 1) + (j + 1)] = values[i * n + j] +
                                               table[i * (n + 1) + (j + 1)] +
                                               table[(i + 1) * (n + 1) + j] -
                                               table[i * (n + 1) + j];
    }
  }

  // Integral over [0,U) in units along one axis: full cells + partial cell.
  double axis_partial(std::int64_t u) const {
    const std::int64_t q = u / 3, r = u % 3;
    double s = 3.0 * table[q];
    if (r) s += double(r) * values[q];
    return s;
  }

  // Corner sum for dim 2: integral over [0,U0) x [0,U1) in units^2.
  double corner2(std::int64_t u0, std::int64_t u1) const {
    const std::int64_t n = domain.cells_per_side();
    const std::int64_t q0 = u0 / 3, r0 = u0 % 3;
    const std::int64_t q1 = u1 / 3, r1 = u1 % 3;
    const auto sat = [&](std::int64_t a, std::int64_t b) {
      return table[a * (n + 1) + b];
    };
    double s = 9.0 * sat(q0, q1);
    if (r0) s += 3.0 * double(r0) * (sat(q0 + 1, q1) - sat(q0, q1));
    if (r1) s += 3.0 * double(r1) * (sat(q0, q1 + 1) - sat(q0, q1));
    if (r0 && r1) s += double(r0) * double(r1) * values[q0 * n + q1];
    return s;
  }

  // Integral over a box, measured in units^dim (exact cell-overlap weights).
  double integral_units(const BoxU& b) const {
    if (b.empty()) return 0.0;
    if (domain.dim == 1) return axis_partial(b.hi[0]) - axis_partial(b.lo[0]);
    return corner2(b.hi[0], b.hi[1]) - corner2(b.lo[0], b.hi[1]) -
           corner2(b.hi[0], b.lo[1]) + corner2(b.lo[0], b.lo[1]);
  }

  // Lebesgue integral over the box region (physical measure).
  double integral(const BoxU& b) const {
    const double ups = double(domain.units_per_side());
    return integral_units(b) / (domain.dim == 1 ? ups : ups * ups);
  }

  double average_over(const BoxU& b) const {
    const std::int64_t m = b.measure_units();
    if (m == 0) throw std::invalid_argument("average over empty region");
    return integral_units(b) / double(m);
  }

  template <class Fn>
  GridFunction map(Fn&& fn) const {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = fn(values[i]);
    return GridFunction(domain, std::move(out));
  }
};

inline double average(const GridFunction& f, const Cube& q) {
  if (f.domain != q.grid.domain)
    throw std::invalid_argument("average: domain mismatch");
  return f.average_over(q.realized());
}

inline double average3(const GridFunction& f, const Cube& q) {
  return f.average_over(dilate3(q));
}

// Visit every sample cell meeting the box: fn(linear_index, overlap_units).
template <class Fn>
void for_each_cell(const Domain& dom, const BoxU& b, Fn&& fn) {
  if (b.empty()) return;
  const std::int64_t n = dom.cells_per_side();
  const auto overlap = [](std::int64_t lo, std::int64_t hi, std::int64_t c) {
    return std::min(hi, 3 * (c + 1)) - std::max(lo, 3 * c);
  };
  const std::int64_t a0 = b.lo[0] / 3, b0 = (b.hi[0] - 1) / 3;
  if (dom.dim == 1) {
    for (std::int64_t c = a0; c <= b0; ++c) fn(c, overlap(b.lo[0], b.hi[0], c));
    return;
  }
  const std::int64_t a1 = b.lo[1] / 3, b1 = (b.hi[1] - 1) / 3;
  for (std::int64_t c0 = a0; c0 <= b0; ++c0) {
    const std::int64_t w0 = overlap(b.lo[0], b.hi[0], c0);
    for (std::int64_t c1 = a1; c1 <= b1; ++c1)
      fn(c0 * n + c1, w0 * overlap(b.lo[1], b.hi[1], c1));
  }
}

// Elementwise helpers --------------------------------------------------------

inline GridFunction gf_binary(const GridFunction& a, const GridFunction& b,
                              double (*op)(double, double)) {
  if (a.domain != b.domain)
    throw std::invalid_argument("gridfunction op: domain mismatch");
  std::vector<double> out(a.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a.values[i], b.values[i]);
  return GridFunction(a.domain, std::move(out));
}

inline GridFunction gf_mul(const GridFunction& a, const GridFunction& b) {
  return gf_binary(a, b, [](double x, double y) { return x * y; });
}
inline GridFunction gf_add(const GridFunction& a, const GridFunction& b) {
  return gf_binary(a, b, [](double x, double y) { return x + y; });
}
inline GridFunction gf_abs(const GridFunction& a) {
  return a.map([](double v) { return std::fabs(v); });
}
inline GridFunction gf_pow(const GridFunction& a, double e) {
  return a.map([e](double v) { return std::pow(v, e); });
}
inline GridFunction gf_scale(const GridFunction& a, double c) {
  return a.map([c](double v) { return c * v; });
}
// clamp below to keep weights strictly positive
inline GridFunction gf_floor(const GridFunction& a, double lo = kWeightFloor) {
  return a.map([lo](double v) { return std::max(v, lo); });
}

// Global L^p norm over the box, p in (0, inf); not a norm for p < 1 but the
// same quantity is still used as the comparison functional there.
inline double lp_norm(const GridFunction& f, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("lp_norm: p must be positive");
  const double h = 1.0 / double(f.domain.total_cells());
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::fabs(v), p);
  return std::pow(s * h, 1.0 / p);
}

// Weighted version: (integral |f|^p w)^(1/p).
inline double lp_norm_weighted(const GridFunction& f, double p,
                               const GridFunction& w) {
  if (f.domain != w.domain) throw std::invalid_argument("lp_norm_weighted: domain mismatch");
  if (!(p > 0.0)) throw std::invalid_argument("lp_norm_weighted: p must be positive");
  const double h = 1.0 / double(f.domain.total_cells());
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    s += std::pow(std::fabs(f.values[i]), p) * w.values[i];
  return std::pow(s * h, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Serialization: CSV (one value per line) or raw little-endian doubles, with
// a JSON sidecar at <path>.json carrying {dim, depth, format, count}.

inline void store_gridfunction(const GridFunction& f, const std::string& path,
                               const std::string& format = "csv") {
  if (format != "csv" && format != "binary")
    throw std::invalid_argument("store_gridfunction: format must be csv or binary");
  if (format == "csv") {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    char buf[40];
    for (double v : f.values) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out << buf;
    }
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              std::streamsize(f.values.size() * sizeof(double)));
  }
  nlohmann::ordered_json side;
  side["dim"] = f.domain.dim;
  side["depth"] = f.domain.depth;
  side["format"] = format;
  side["count"] = f.values.size();
  std::ofstream sout(path + ".json");
  if (!sout) throw std::runtime_error("cannot open for write: " + path + ".json");
  sout << side.dump(2) << "\n";
}

inline GridFunction load_gridfunction(const std::string& path) {
  std::ifstream sin(path + ".json");
  if (!sin) throw std::runtime_error("missing sidecar: " + path + ".json");
  nlohmann::json side;
  sin >> side;
  const Domain dom(side.at("dim").get<int>(), side.at("depth").get<int>());
  const std::string format = side.at("format").get<std::string>();
  const std::size_t expect = std::size_t(dom.total_cells());
  std::vector<double> vals;
  if (format == "csv") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::size_t pos = 0;
      const double v = std::stod(line, &pos);
      vals.push_back(v);
    }
  } else if (format == "binary") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    vals.resize(expect);
    in.read(reinterpret_cast<char*>(vals.data()),
            std::streamsize(expect * sizeof(double)));
    if (std::size_t(in.gcount()) != expect * sizeof(double))
      throw std::runtime_error("truncated binary payload: " + path);
    char extra;
    if (in.read(&extra, 1))
      throw std::runtime_error("oversized binary payload: " + path);
  } else {
    throw std::runtime_error("unknown format in sidecar: " + format);
  }
  if (vals.size() != expect) {
    std::ostringstream msg;
    msg << "length mismatch for " << path << ": sidecar declares " << expect
        << " values, payload has " << vals.size();
    throw std::runtime_error(msg.str());
  }
  return GridFunction(dom, std::move(vals));
}

// JSON identity of a cube for reports.
inline nlohmann::ordered_json cube_to_json(const Cube& q) {
  nlohmann::ordered_json j;
  j["sigma_thirds"] = std::vector<int>(q.grid.shift_thirds.begin(),
                                       q.grid.shift_thirds.begin() + q.grid.domain.dim);
  j["level"] = q.level;
  j["index"] = std::vector<std::int64_t>(q.index.begin(),
                                         q.index.begin() + q.grid.domain.dim);
  return j;
}

}  // namespace orlx
