#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "glam/error.hpp"
#include "glam/input_model.hpp"
#include "glam/special.hpp"
#include "support.hpp"

using glam::InputModel;
using glam::Marginal;

namespace {

InputModel mixed() {
  return {{Marginal::uniform(0, 2), Marginal::gaussian(0.1, 0.016), Marginal::lognormal(7.71, 1.0056)},
          {"a", "b", "c"}};
}

std::vector<double> column(const Eigen::MatrixXd& X, Eigen::Index c) {
  std::vector<double> v(X.col(c).data(), X.col(c).data() + X.rows());
  return v;
}

}  // namespace

TEST_CASE("standardization reference values") {
  CHECK(Marginal::uniform(0, 2).to_standard(1.0) == 0.0);
  CHECK(Marginal::lognormal(7.71, 1.0056).to_standard(std::exp(7.71)) == doctest::Approx(0).scale(1));
  CHECK(Marginal::gaussian(0.1, 0.016).to_standard(0.116) == doctest::Approx(1).epsilon(1e-12));
  CHECK(Marginal::uniform(-1, 3).to_standard(3.0) == 1.0);
  CHECK_THROWS_AS(Marginal::lognormal(0, 1).to_standard(0.0), glam::DomainError);
  CHECK_THROWS_AS(Marginal::lognormal(0, 1).to_standard(-2.0), glam::DomainError);
}

TEST_CASE("invalid marginals") {
  CHECK_THROWS_AS(Marginal::uniform(1, 1).validate(), glam::ConfigError);
  CHECK_THROWS_AS(Marginal::gaussian(0, 0).validate(), glam::ConfigError);
  CHECK_THROWS_AS(Marginal::lognormal(0, -1).validate(), glam::ConfigError);
  InputModel dup{{Marginal::uniform(0, 1), Marginal::uniform(0, 1)}, {"x", "x"}};
  CHECK_THROWS_AS(dup.validate(), glam::ConfigError);
  CHECK_THROWS_AS(InputModel{}.validate(), glam::ConfigError);
}

TEST_CASE("standardization round trip") {
  const InputModel m = mixed();
  const Eigen::MatrixXd X = glam::mc_sample(m, 2000, 5);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const std::vector<double> x{X(r, 0), X(r, 1), X(r, 2)};
    const auto back = m.from_standard(m.to_standard(x));
    for (std::size_t k = 0; k < 3; ++k) CHECK(back[k] == doctest::Approx(x[k]).epsilon(1e-12));
  }
}

TEST_CASE("standardized samples follow the reference measures") {
  const InputModel m = mixed();
  const std::size_t n = 10000;
  const Eigen::MatrixXd xi = m.to_standard(glam::mc_sample(m, n, 6));
  const double critical = 1.628 / std::sqrt(static_cast<double>(n));  // 1% level
  auto u = column(xi, 0);
  std::sort(u.begin(), u.end());
  CHECK(testing::ks_statistic(u, [](double v) { return (v + 1) / 2; }) < critical);
  for (Eigen::Index c : {1, 2}) {
    auto g = column(xi, c);
    std::sort(g.begin(), g.end());
    CHECK(testing::ks_statistic(g, glam::normal_cdf) < critical);
  }
}

TEST_CASE("latin hypercube stratification") {
  const InputModel m{{Marginal::uniform(0, 1), Marginal::uniform(0, 1)}, {"u", "v"}};
  for (std::size_t n : {1u, 4u, 37u}) {
    const Eigen::MatrixXd X = glam::lhs_sample(m, n, 17);
    REQUIRE(X.rows() == static_cast<Eigen::Index>(n));
    for (Eigen::Index c = 0; c < 2; ++c) {
      auto v = column(X, c);
      std::sort(v.begin(), v.end());
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(v[k] >= static_cast<double>(k) / n);
        CHECK(v[k] <= static_cast<double>(k + 1) / n);
      }
    }
  }
}

TEST_CASE("designs are deterministic given the seed") {
  const InputModel m = mixed();
  CHECK(glam::lhs_sample(m, 50, 3) == glam::lhs_sample(m, 50, 3));
  CHECK(glam::lhs_sample(m, 50, 3) != glam::lhs_sample(m, 50, 4));
  CHECK(glam::mc_sample(m, 50, 3) == glam::mc_sample(m, 50, 3));
  CHECK(glam::mc_sample(m, 0, 3).rows() == 0);
}

TEST_CASE("design moments") {
  const InputModel g{{Marginal::gaussian(0, 1)}, {"z"}};
  for (auto design : {glam::lhs_sample(g, 10000, 8), glam::mc_sample(g, 10000, 8)}) {
    const double mean = design.col(0).mean();
    const double sd = std::sqrt((design.col(0).array() - mean).square().sum() / 9999.0);
    CHECK(std::abs(mean) < 0.03);  // 3 standard errors for plain MC
    CHECK(std::abs(sd - 1) < 0.03);
  }
  const Eigen::MatrixXd lhs = glam::lhs_sample(g, 10000, 9);
  CHECK(std::abs(lhs.col(0).mean()) < 0.02);
}

TEST_CASE("subset keeps the selected columns in order") {
  const InputModel m = mixed();
  const std::vector<int> cols{2, 0};
  const InputModel s = m.subset(cols);
  REQUIRE(s.dim() == 2);
  CHECK(s.names == std::vector<std::string>{"c", "a"});
  CHECK(s.marginals[0] == m.marginals[2]);
  CHECK(s.families()[1] == glam::PolyFamily::Legendre);
  CHECK(m.families()[2] == glam::PolyFamily::Hermite);
}
