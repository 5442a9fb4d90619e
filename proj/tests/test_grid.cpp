#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "orlx/grid.hpp"

using namespace orlx;

namespace {

// Oracle: integrate by walking every sample cell, no prefix tables.
double brute_integral_units(const GridFunction& f, const BoxU& b) {
  double s = 0.0;
  const std::int64_t n = f.domain.cells_per_side();
  const auto ov = [](std::int64_t lo, std::int64_t hi, std::int64_t c) {
    return std::max<std::int64_t>(0, std::min(hi, 3 * (c + 1)) - std::max(lo, 3 * c));
  };
  if (f.domain.dim == 1) {
    for (std::int64_t c = 0; c < n; ++c)
      s += double(ov(b.lo[0], b.hi[0], c)) * f.values[c];
  } else {
    for (std::int64_t c0 = 0; c0 < n; ++c0)
      for (std::int64_t c1 = 0; c1 < n; ++c1)
        s += double(ov(b.lo[0], b.hi[0], c0)) * double(ov(b.lo[1], b.hi[1], c1)) *
             f.values[c0 * n + c1];
  }
  return s;
}

GridFunction random_gf(const Domain& dom, Rng& rng) {
  std::vector<double> v(dom.total_cells());
  for (auto& x : v) x = rng.lognormal(0.0, 1.0);
  return GridFunction(dom, std::move(v));
}

}  // namespace

TEST_CASE("cells partition the box exactly at every level and shift", "[grid]") {
  for (int dim : {1, 2}) {
    const Domain dom(dim, dim == 1 ? 6 : 4);
    for (const Grid& g : shifted_family(dom)) {
      for (int k = 0; k <= dom.depth; ++k) {
        std::int64_t total = 0;
        std::int64_t count = 0;
        std::int64_t prev_hi = 0;
        for (const Cube& q : cells(g, k)) {
          REQUIRE_FALSE(q.empty());
          total += q.realized().measure_units();
          ++count;
          if (dim == 1) {
            REQUIRE(q.realized().lo[0] == prev_hi);  // consecutive, gap-free
            prev_hi = q.realized().hi[0];
          }
        }
        REQUIRE(total == dom.units_total());
        // Per axis: 2^k cubes for the standard grid, 2^k + 1 clipped pieces
        // for a shifted axis (the shift is never commensurate with the side).
        std::int64_t expect = 1;
        for (int d = 0; d < dim; ++d)
          expect *= (std::int64_t(1) << k) + (g.shift_thirds[d] != 0 ? 1 : 0);
        REQUIRE(count == expect);
      }
    }
  }
}

TEST_CASE("shifted level-1 cube count matches the clipped-piece picture", "[grid]") {
  const Domain dom(1, 4);
  const Grid g(dom, {1, 0});
  const auto pieces = cells(g, 1);
  REQUIRE(pieces.size() == 3);  // [0,1/3), [1/3,5/6), [5/6,1)
  REQUIRE(pieces[0].realized().lo[0] == 0);
  REQUIRE(pieces[0].realized().hi[0] == g.shift_units(0));
  REQUIRE(pieces[2].realized().hi[0] == dom.units_per_side());
}

TEST_CASE("same-grid cubes are nested or disjoint", "[grid]") {
  const Domain dom(1, 8);
  Rng rng(11);
  for (const Grid& g : shifted_family(dom)) {
    std::vector<Cube> all;
    for (int k = 0; k <= dom.depth; ++k)
      for (const Cube& q : cells(g, k)) all.push_back(q);
    for (int t = 0; t < 2000; ++t) {
      const Cube& a = all[std::size_t(rng.uniform_int(0, std::int64_t(all.size()) - 1))];
      const Cube& b = all[std::size_t(rng.uniform_int(0, std::int64_t(all.size()) - 1))];
      const BoxU ra = a.realized(), rb = b.realized();
      const std::int64_t lo = std::max(ra.lo[0], rb.lo[0]);
      const std::int64_t hi = std::min(ra.hi[0], rb.hi[0]);
      const bool disjoint = lo >= hi;
      const bool a_in_b = ra.lo[0] >= rb.lo[0] && ra.hi[0] <= rb.hi[0];
      const bool b_in_a = rb.lo[0] >= ra.lo[0] && rb.hi[0] <= ra.hi[0];
      REQUIRE((disjoint || a_in_b || b_in_a));
    }
  }
}

TEST_CASE("averages: constants, indicators, single cells", "[grid]") {
  const Domain dom(1, 5);
  const Grid g = standard_grid(dom);

  const GridFunction one = GridFunction::constant(dom, 2.5);
  for (int k = 0; k <= dom.depth; ++k)
    for (const Cube& q : cells(g, k))
      REQUIRE_THAT(average(one, q), Catch::Matchers::WithinRel(2.5, 1e-15));

  // indicator of the left half
  std::vector<double> half(dom.total_cells(), 0.0);
  for (std::int64_t i = 0; i < dom.total_cells() / 2; ++i) half[i] = 1.0;
  const GridFunction f(dom, half);
  REQUIRE_THAT(average(f, Cube(g, 0, {0, 0})), Catch::Matchers::WithinRel(0.5, 1e-15));
  REQUIRE_THAT(average(f, Cube(g, 1, {0, 0})), Catch::Matchers::WithinRel(1.0, 1e-15));
  REQUIRE(average(f, Cube(g, 1, {1, 0})) == 0.0);

  // shifted cube straddling the jump: [1/3, 5/6) has 1/6 of ones out of 1/2
  const Grid gs(dom, {1, 0});
  const Cube straddle(gs, 1, {0, 0});
  REQUIRE_THAT(average(f, straddle), Catch::Matchers::WithinRel((1.0 / 6.0) / 0.5, 1e-13));
}

TEST_CASE("average is linear and monotone; children decompose the integral", "[grid]") {
  const Domain dom(2, 3);
  Rng rng(77);
  const GridFunction f = random_gf(dom, rng);
  const GridFunction h = random_gf(dom, rng);
  const GridFunction combo = gf_add(gf_scale(f, 2.0), h);
  for (const Grid& g : shifted_family(dom)) {
    for (int k = 0; k <= dom.depth; ++k) {
      for (const Cube& q : cells(g, k)) {
        REQUIRE_THAT(average(combo, q),
                     Catch::Matchers::WithinRel(2.0 * average(f, q) + average(h, q), 1e-12));
        if (k < dom.depth) {
          double child_sum = 0.0;
          for (const Cube& c : q.children())
            child_sum += f.integral_units(c.realized());
          REQUIRE_THAT(f.integral_units(q.realized()),
                       Catch::Matchers::WithinRel(child_sum, 1e-12));
        }
      }
    }
  }
}

TEST_CASE("dilate3 is the clipped concentric triple", "[grid]") {
  const Domain dom(1, 3);  // ups = 24
  const Grid g = standard_grid(dom);

  // Q = [1/4, 1/2): triple = [0, 3/4)
  const Cube q(g, 2, {1, 0});
  const BoxU t = dilate3(q);
  REQUIRE(t.lo[0] == 0);
  REQUIRE(t.hi[0] == 18);  // 3/4 of 24

  // root: triple clips to the whole box
  const BoxU rt = dilate3(Cube(g, 0, {0, 0}));
  REQUIRE(rt.lo[0] == 0);
  REQUIRE(rt.hi[0] == 24);

  // interior cube fully inside: exact 3x length
  const Cube qi(g, 3, {3, 0});
  const BoxU ti = dilate3(qi);
  REQUIRE(ti.hi[0] - ti.lo[0] == 3 * qi.nominal_side_units());

  // clipped shifted cube: triple taken about the unclipped cube
  const Grid gs(dom, {2, 0});
  const Cube qc(gs, 1, {-1, 0});      // raw [2/3-1/2, 2/3) = [1/6, 2/3); realized same
  const BoxU tc = dilate3(qc);
  REQUIRE(tc.lo[0] == 0);             // 1/6 - 1/2 < 0 clips
  REQUIRE(tc.hi[0] == 24);            // 2/3 + 1/2 > 1 clips
}

TEST_CASE("box integrals match the brute-force oracle", "[grid]") {
  Rng rng(123);
  for (int dim : {1, 2}) {
    const Domain dom(dim, dim == 1 ? 7 : 4);
    const GridFunction f = random_gf(dom, rng);
    const std::int64_t ups = dom.units_per_side();
    for (int t = 0; t < 500; ++t) {
      BoxU b;
      b.dim = dim;
      for (int d = 0; d < dim; ++d) {
        std::int64_t a = rng.uniform_int(0, ups);
        std::int64_t c = rng.uniform_int(0, ups);
        b.lo[d] = std::min(a, c);
        b.hi[d] = std::max(a, c);
      }
      const double fast = f.integral_units(b);
      const double slow = brute_integral_units(f, b);
      REQUIRE_THAT(fast, Catch::Matchers::WithinRel(slow, 1e-10) ||
                             Catch::Matchers::WithinAbs(slow, 1e-9));
    }
  }
}

TEST_CASE("for_each_cell weights sum to the box measure", "[grid]") {
  Rng rng(5);
  for (int dim : {1, 2}) {
    const Domain dom(dim, 4);
    const std::int64_t ups = dom.units_per_side();
    for (int t = 0; t < 200; ++t) {
      BoxU b;
      b.dim = dim;
      for (int d = 0; d < dim; ++d) {
        std::int64_t a = rng.uniform_int(0, ups);
        std::int64_t c = rng.uniform_int(0, ups);
        b.lo[d] = std::min(a, c);
        b.hi[d] = std::max(a, c);
      }
      std::int64_t sum = 0;
      for_each_cell(dom, b, [&](std::int64_t, std::int64_t w) {
        REQUIRE(w > 0);
        sum += w;
      });
      REQUIRE(sum == b.measure_units());
    }
  }
}

TEST_CASE("cube_containing_cell agrees with enumeration", "[grid]") {
  for (int dim : {1, 2}) {
    const Domain dom(dim, dim == 1 ? 5 : 3);
    for (const Grid& g : shifted_family(dom)) {
      for (int k = 0; k <= dom.depth; ++k) {
        const std::int64_t n = dom.cells_per_side();
        for (std::int64_t c0 = 0; c0 < n; ++c0) {
          for (std::int64_t c1 = 0; c1 < (dim == 2 ? n : 1); ++c1) {
            const Cube q = cube_containing_cell(g, k, {c0, c1});
            const BoxU r = q.realized();
            REQUIRE_FALSE(r.empty());
            // center in realized box, per axis
            for (int d = 0; d < dim; ++d) {
              const std::int64_t center2 = 6 * (d == 0 ? c0 : c1) + 3;
              REQUIRE(center2 >= 2 * r.lo[d]);
              REQUIRE(center2 < 2 * r.hi[d]);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("serialization round-trips and rejects bad payloads", "[grid]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "orlx_grid_io";
  fs::create_directories(dir);
  Rng rng(9);
  const Domain dom(1, 3);
  const GridFunction f = random_gf(dom, rng);

  for (const std::string fmt : {"csv", "binary"}) {
    const std::string p = (dir / ("f_" + fmt)).string();
    store_gridfunction(f, p, fmt);
    const GridFunction g = load_gridfunction(p);
    REQUIRE(g.domain == f.domain);
    for (std::int64_t i = 0; i < f.size(); ++i) {
      if (fmt == "binary")
        REQUIRE(g[i] == f[i]);
      else
        REQUIRE_THAT(g[i], Catch::Matchers::WithinRel(f[i], 1e-16));
    }
  }

  // 7 values declared as depth 3 (needs 8): reject with a length message
  const std::string bad = (dir / "bad").string();
  {
    std::ofstream out(bad);
    for (int i = 0; i < 7; ++i) out << "1.0\n";
    nlohmann::json side{{"dim", 1}, {"depth", 3}, {"format", "csv"}};
    std::ofstream sout(bad + ".json");
    sout << side.dump();
  }
  REQUIRE_THROWS_AS(load_gridfunction(bad), std::runtime_error);
}

TEST_CASE("lp norms", "[grid]") {
  const Domain dom(1, 4);
  const GridFunction c = GridFunction::constant(dom, 3.0);
  for (double p : {0.5, 1.0, 2.0, 7.0})
    REQUIRE_THAT(lp_norm(c, p), Catch::Matchers::WithinRel(3.0, 1e-14));
  std::vector<double> v(dom.total_cells(), 0.0);
  v[0] = 2.0;
  const GridFunction s(dom, v);
  REQUIRE_THAT(lp_norm(s, 2.0),
               Catch::Matchers::WithinRel(2.0 / std::sqrt(16.0), 1e-14));
  const GridFunction w = GridFunction::constant(dom, 5.0);
  REQUIRE_THAT(lp_norm_weighted(s, 2.0, w),
               Catch::Matchers::WithinRel(std::sqrt(5.0) * 2.0 / 4.0, 1e-14));
}
