#include "brainseg/kernel.hpp"

#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace brainseg;

namespace {

std::vector<IntensityVector> random_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<IntensityVector> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({u(gen), u(gen), u(gen)});
  return s;
}

}  // namespace

TEST_CASE("kernel closed forms") {
  const IntensityVector x{1.0, 2.0, 0.5};
  const IntensityVector y{0.5, -1.0, 4.0};
  CHECK(kernel_eval(KernelSpec::linear(), x, y) == doctest::Approx(0.5));
  CHECK(kernel_eval(KernelSpec::sigmoid(2.0, -1.0), x, y) == doctest::Approx(std::tanh(0.0)));
  CHECK(kernel_eval(KernelSpec::sigmoid(0.5, 0.25), x, y) == doctest::Approx(std::tanh(0.5)));
  // |x - y|^2 = 0.25 + 9 + 12.25 = 21.5
  CHECK(kernel_eval(KernelSpec::rbf(2.0), x, y) == doctest::Approx(std::exp(-21.5 / 8.0)));
  CHECK(kernel_eval(KernelSpec::rbf(0.3), x, x) == 1.0);
  CHECK_FAILS_WITH(kernel_eval(KernelSpec::linear(), x, IntensityVector{1.0}), ErrorKind::Dimension);
}

TEST_CASE("kernel validation") {
  CHECK_FAILS_WITH(KernelSpec::rbf(0.0).validate(), ErrorKind::Config);
  CHECK_FAILS_WITH(KernelSpec::rbf(-1.0).validate(), ErrorKind::Config);
  CHECK_FAILS_WITH(KernelSpec::sigmoid(0.0, 1.0).validate(), ErrorKind::Config);
  CHECK_NOTHROW(KernelSpec::sigmoid(1.0, -1.0).validate());
  CHECK(std::string(kernel_name(KernelSpec::Kind::Rbf)) == "rbf");
}

TEST_CASE("Gram matrices are symmetric; linear and rbf are PSD") {
  const auto s = random_samples(40, 9);
  for (const KernelSpec& k : {KernelSpec::linear(), KernelSpec::rbf(0.4), KernelSpec::sigmoid(1.0, -1.0)}) {
    const Eigen::MatrixXd g = kernel_matrix(k, s);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 40; i += 7)
      for (int j = 0; j < 40; j += 5) CHECK(g(i, j) == kernel_eval(k, s[i], s[j]));
    if (k.kind != KernelSpec::Kind::Sigmoid) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
      CHECK(es.eigenvalues().minCoeff() > -1e-10);
    }
  }
  const std::vector<IntensityVector> one{{1.0, 2.0, 3.0}};
  CHECK_FAILS_WITH(kernel_matrix(KernelSpec::linear(), one), ErrorKind::Validation);
}

TEST_CASE("median pairwise distance") {
  // Points on a line at 0, 1, 3: distances 1, 2, 3.
  const std::vector<IntensityVector> line{{0.0}, {1.0}, {3.0}};
  CHECK(median_pairwise_distance(line) == 2.0);

  // Oracle: sorted distances, element n/2.
  const auto s = random_samples(25, 4);
  std::vector<double> d;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      double q = 0.0;
      for (int c = 0; c < 3; ++c) q += (s[i][c] - s[j][c]) * (s[i][c] - s[j][c]);
      d.push_back(std::sqrt(q));
    }
  std::sort(d.begin(), d.end());
  CHECK(median_pairwise_distance(s) == d[d.size() / 2]);

  // Mostly duplicated samples: zero distances are skipped.
  std::vector<IntensityVector> dup(6, IntensityVector{0.5, 0.5});
  dup.push_back({1.5, 0.5});
  CHECK(median_pairwise_distance(dup) == doctest::Approx(1.0));

  const std::vector<IntensityVector> same(4, IntensityVector{0.2, 0.2});
  CHECK_FAILS_WITH(median_pairwise_distance(same), ErrorKind::Degenerate);
}
