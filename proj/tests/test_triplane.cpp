#include "doctest.h"
#include "s2d/triplane.hpp"
#include "test_util.hpp"

using namespace s2d;
using namespace s2d::testutil;

namespace {

// normalized coordinate of texel i on an R-wide axis (texel centers)
double texel_coord(std::size_t i, std::size_t r) {
  return (2.0 * double(i) + 1.0) / double(r) - 1.0;
}

TriPlane constant_planes(std::size_t c, std::size_t r, double v) {
  Tensor t = full({c, r, r}, v);
  return {t, t, t};
}

}  // namespace

TEST_CASE("split planes partition order") {
  std::vector<double> vals(96 * 4 * 4);
  for (std::size_t c = 0; c < 96; ++c)
    for (std::size_t i = 0; i < 16; ++i) vals[c * 16 + i] = double(c);
  TriPlane p = split_planes(from_vector(vals, {96, 4, 4}));
  CHECK(p.channels() == 32);
  CHECK(p.resolution() == 4);
  CHECK(p.xy.data().front() == 0);
  CHECK(p.xy.data().back() == 31);
  CHECK(p.zy.data().front() == 32);
  CHECK(p.xz.data().back() == 95);
  p.validate();

  CHECK_THROWS(split_planes(from_vector(std::vector<double>(95 * 16), {95, 4, 4})));
}

TEST_CASE("query constants and texel centers") {
  TriPlane planes = constant_planes(2, 4, 3.5);
  QueryResult q = query_points(planes, {{0.1, -0.3, 0.7}, {5.0, 0.0, 0.0}});
  REQUIRE(q.features.shape() == Shape{2, 6});
  for (double v : q.features.data()) CHECK(v == doctest::Approx(3.5));
  CHECK(q.outside[0] == 0);
  CHECK(q.outside[1] == 1);  // x outside [-1,1]

  // distinct texel values: query at an exact texel center returns that texel
  std::size_t r = 4;
  std::vector<double> vals(1 * r * r);
  for (std::size_t i = 0; i < r * r; ++i) vals[i] = double(i);
  Tensor plane = from_vector(vals, {1, r, r});
  TriPlane tp{plane, plane, plane};
  // XY plane samples at (x, y): column from x, row from y
  double x = texel_coord(2, r), y = texel_coord(1, r);
  QueryResult q2 = query_points(tp, {{x, y, x}});
  CHECK(q2.features.data()[0] == doctest::Approx(vals[1 * r + 2]));

  // midway between two texels on one axis -> arithmetic mean
  double xm = 0.5 * (texel_coord(1, r) + texel_coord(2, r));
  QueryResult q3 = query_points(tp, {{xm, y, 0.0}});
  CHECK(q3.features.data()[0] ==
        doctest::Approx(0.5 * (vals[1 * r + 1] + vals[1 * r + 2])));
}

TEST_CASE("query stays within plane value bounds") {
  Rng rng(11);
  Tensor xy = randn(rng, {3, 8, 8}, 1.0, false);
  Tensor zy = randn(rng, {3, 8, 8}, 1.0, false);
  Tensor xz = randn(rng, {3, 8, 8}, 1.0, false);
  TriPlane planes{xy, zy, xz};
  double lo = 1e9, hi = -1e9;
  for (const Tensor* t : {&xy, &zy, &xz})
    for (double v : t->data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i)
    pts.push_back({rng.uniform() * 4 - 2, rng.uniform() * 4 - 2, rng.uniform() * 4 - 2});
  QueryResult q = query_points(planes, pts);
  for (double v : q.features.data()) {
    CHECK(v >= lo - 1e-12);
    CHECK(v <= hi + 1e-12);
  }
}

TEST_CASE("query gradients vs finite differences") {
  Rng rng(13);
  std::vector<double> p0 = randn(rng, {2, 4, 4}, 1.0, false).data();
  std::vector<Vec3> pts{{0.3, -0.2, 0.6}, {-0.9, 0.8, 0.1}, {1.5, 0.0, -2.0}};

  Tensor xy = leaf(p0, {2, 4, 4}, true);
  Tensor zy = leaf(p0, {2, 4, 4}, true);
  Tensor xz = leaf(p0, {2, 4, 4}, true);
  TriPlane planes{xy, zy, xz};
  Tensor y = sum(square(query_points(planes, pts).features));
  auto g = grad(y, {xy});
  auto fd = finite_diff(
      [&](const std::vector<double>& v) {
        TriPlane p{from_vector(v, {2, 4, 4}), from_vector(p0, {2, 4, 4}),
                   from_vector(p0, {2, 4, 4})};
        return sum(square(query_points(p, pts).features)).item();
      },
      p0);
  CHECK(max_rel_err(g[0].data(), fd) < 1e-4);
}

TEST_CASE("generator shapes and determinism") {
  Rng rng(17);
  TriPlaneGeneratorConfig cfg{8, 4, 2, 4};
  TriPlaneGenerator gen(cfg, rng);
  Tensor sat = randn(rng, {3, 8, 8}, 1.0, false);
  Tensor f1 = gen.forward(sat);
  Tensor f2 = gen.forward(sat);
  CHECK(f1.shape() == Shape{12, 8, 8});
  CHECK(f1.data() == f2.data());
  TriPlane planes = gen.generate(sat);
  CHECK(planes.channels() == 4);
  CHECK(planes.resolution() == 8);
  planes.validate();

  // zero image through a zero-initialized head -> zero planes
  gen.head.zero_init();
  Tensor z = gen.forward(zeros({3, 8, 8}));
  for (double v : z.data()) CHECK(v == 0.0);

  CHECK_THROWS(gen.forward(zeros({3, 16, 16})));
}

TEST_CASE("generator input gradient vs finite differences") {
  Rng rng(19);
  TriPlaneGeneratorConfig cfg{4, 2, 1, 3};
  TriPlaneGenerator gen(cfg, rng);
  std::vector<double> x0 = randn(rng, {3, 4, 4}, 0.5, false).data();
  Tensor x = leaf(x0, {3, 4, 4}, true);
  auto g = grad(sum(gen.forward(x)), {x});
  auto fd = finite_diff(
      [&](const std::vector<double>& v) {
        return sum(gen.forward(from_vector(v, {3, 4, 4}))).item();
      },
      x0);
  CHECK(max_rel_err(g[0].data(), fd) < 1e-4);
}

TEST_CASE("plane validation") {
  TriPlane p = constant_planes(2, 4, 1.0);
  p.zy = full({2, 5, 5}, 1.0);
  CHECK_THROWS(p.validate());
  TriPlane q = constant_planes(1, 2, 0.0);
  q.xy.data()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(q.validate());
}
