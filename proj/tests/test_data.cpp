#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "srouda/data.hpp"

using namespace srouda;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/srouda_test_") + name;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("two moons: class counts are exactly n/2") {
  Rng rng(1, "moons");
  const DomainPair pair = gen_two_moons_shift(400, 45.0, 0.1, rng);
  int c0 = 0, c1 = 0;
  for (Eigen::Index i = 0; i < pair.source.size(); ++i) {
    (pair.source.y[i] == 0 ? c0 : c1)++;
  }
  CHECK(c0 == 200);
  CHECK(c1 == 200);
  CHECK(pair.target_train.rows() == 280);  // 70% of 400
  CHECK(pair.target_eval.size() == 120);
  CHECK(pair.meta.num_classes == 2);
  CHECK(pair.meta.dim == 2);
}

TEST_CASE("two moons: same seed gives bit-identical datasets") {
  Rng a(7, "moons");
  Rng b(7, "moons");
  const DomainPair p1 = gen_two_moons_shift(200, 30.0, 0.1, a);
  const DomainPair p2 = gen_two_moons_shift(200, 30.0, 0.1, b);
  CHECK(p1.source.X == p2.source.X);
  CHECK(p1.target_train == p2.target_train);
  CHECK(p1.target_eval.X == p2.target_eval.X);
}

TEST_CASE("two moons: rotation acts on the same underlying draws") {
  Rng a(9, "moons");
  Rng b(9, "moons");
  const DomainPair flat = gen_two_moons_shift(200, 0.0, 0.1, a);
  const DomainPair rot = gen_two_moons_shift(200, 45.0, 0.1, b);
  const Mat expected = rotate_2d(flat.target_train, 45.0);
  CHECK((rot.target_train - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two moons rejects invalid parameters") {
  Rng rng(1, "bad");
  CHECK_THROWS_AS(gen_two_moons_shift(201, 45.0, 0.1, rng), ValidationError);
  CHECK_THROWS_AS(gen_two_moons_shift(200, -5.0, 0.1, rng), ValidationError);
}

TEST_CASE("gaussian shift: bayes-optimal accuracy matches the closed form") {
  Rng rng(2, "gauss");
  const int n = 4000;
  const DomainPair pair = gen_gaussian_shift(n, 2, 0.0, rng);
  // Bayes rule for isotropic unit-variance Gaussians at -1/+1: sign of x0
  long correct = 0;
  for (Eigen::Index i = 0; i < pair.source.size(); ++i) {
    const int pred = pair.source.X(i, 0) > 0.0 ? 1 : 0;
    if (pred == pair.source.y[i]) ++correct;
  }
  const double acc = static_cast<double>(correct) / n;
  const double expected = phi(1.0);  // ||mu1 - mu0|| / (2 sigma) = 1
  const double sigma3 = 3.0 * std::sqrt(expected * (1.0 - expected) / n);
  CHECK(acc > expected - sigma3);
  CHECK(acc < expected + sigma3);
}

TEST_CASE("gaussian shift translates the target by mean_shift") {
  Rng a(3, "gauss");
  Rng b(3, "gauss");
  const DomainPair base = gen_gaussian_shift(1000, 3, 0.0, a);
  const DomainPair moved = gen_gaussian_shift(1000, 3, 2.5, b);
  const Mat delta = moved.target_train - base.target_train;
  CHECK(delta.col(0).isApproxToConstant(2.5, 1e-12));
  CHECK(delta.rightCols(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grid shift: pixels stay in [0,1]") {
  Rng rng(4, "grid");
  const GridShape shape{8, 8, 1};
  const DomainPair pair = gen_grid_shift(1000, shape, 0.8, rng);
  CHECK(pair.source.X.minCoeff() >= 0.0);
  CHECK(pair.source.X.maxCoeff() <= 1.0);
  CHECK(pair.target_train.minCoeff() >= 0.0);
  CHECK(pair.target_train.maxCoeff() <= 1.0);
  CHECK(pair.meta.clip_range.has_value());
  CHECK(pair.meta.num_classes == 4);
}

TEST_CASE("grid shift: nearest template recovers the class on source data") {
  Rng rng(5, "grid");
  const GridShape shape{8, 8, 1};
  const DomainPair pair = gen_grid_shift(400, shape, 0.5, rng);
  const auto templates = grid_templates(shape);
  long correct = 0;
  for (Eigen::Index i = 0; i < pair.source.size(); ++i) {
    int best = -1;
    double best_dist = 1e300;
    for (int c = 0; c < 4; ++c) {
      const double d =
          (pair.source.X.row(i).transpose() - templates[static_cast<std::size_t>(c)])
              .squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = c;
      }
    }
    if (best == pair.source.y[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(pair.source.size()) >=
        0.99);
}

TEST_CASE("dataset round-trips exactly through its CSV format") {
  Rng rng(6, "io");
  const DomainPair pair = gen_two_moons_shift(100, 45.0, 0.1, rng);
  const std::string path = temp_path("roundtrip.csv");
  save_dataset(pair, path);
  const DomainPair back = load_dataset(path);
  CHECK(back.source.X == pair.source.X);
  CHECK(back.source.y == pair.source.y);
  CHECK(back.target_train == pair.target_train);
  CHECK(back.target_eval.X == pair.target_eval.X);
  CHECK(back.target_eval.y == pair.target_eval.y);
  CHECK(back.meta.num_classes == pair.meta.num_classes);
  CHECK(back.meta.input_scale == pair.meta.input_scale);
  std::remove(path.c_str());
}

TEST_CASE("grid datasets keep their sidecar shape line") {
  Rng rng(7, "io");
  const DomainPair pair = gen_grid_shift(40, GridShape{8, 8, 1}, 0.8, rng);
  const std::string path = temp_path("grid.csv");
  save_dataset(pair, path);
  const DomainPair back = load_dataset(path);
  REQUIRE(back.meta.grid.has_value());
  CHECK(back.meta.grid->h == 8);
  CHECK(back.meta.grid->w == 8);
  CHECK(back.meta.grid->c == 1);
  CHECK(back.target_train == pair.target_train);
  std::remove(path.c_str());
}

TEST_CASE("row count is preserved across a round-trip") {
  Rng rng(8, "io");
  const DomainPair pair = gen_gaussian_shift(300, 4, 1.0, rng);
  const std::string path = temp_path("counts.csv");
  save_dataset(pair, path);
  const DomainPair back = load_dataset(path);
  CHECK(back.source.size() == pair.source.size());
  CHECK(back.target_train.rows() == pair.target_train.rows());
  CHECK(back.target_eval.size() == pair.target_eval.size());
  std::remove(path.c_str());
}

TEST_CASE("missing label column raises a schema error naming it") {
  const std::string path = temp_path("nolabel.csv");
  {
    std::ofstream out(path);
    out << "feature_0,feature_1,domain\n0.1,0.2,s\n";
  }
  try {
    load_dataset(path);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("label") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("unknown domain tag raises a schema error") {
  const std::string path = temp_path("baddomain.csv");
  {
    std::ofstream out(path);
    out << "feature_0,label,domain\n0.1,0,x\n";
  }
  CHECK_THROWS_AS(load_dataset(path), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("row length mismatch raises a schema error") {
  const std::string path = temp_path("shortrow.csv");
  {
    std::ofstream out(path);
    out << "feature_0,feature_1,label,domain\n0.1,0,s\n";
  }
  CHECK_THROWS_AS(load_dataset(path), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("malformed header raises a schema error") {
  const std::string path = temp_path("badheader.csv");
  {
    std::ofstream out(path);
    out << "x0,x1,label,domain\n0.1,0.2,0,s\n";
  }
  CHECK_THROWS_AS(load_dataset(path), SchemaError);
  std::remove(path.c_str());
}
