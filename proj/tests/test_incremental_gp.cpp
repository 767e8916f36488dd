#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "failop/incremental_gp.hpp"

using namespace failop;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<int>(v.size()));
  int i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

Eigen::VectorXd random_point(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::VectorXd x(d);
  for (int j = 0; j < d; ++j) x(j) = u(rng);
  return x;
}

GpModel random_model(std::mt19937_64& rng, int n, int d,
                     double sigma_noise = 1e-3) {
  std::uniform_real_distribution<double> uy(-1.0, 1.0);
  GpModel m;
  m.sigma_noise = sigma_noise;
  m.y.resize(n);
  for (int i = 0; i < n; ++i) {
    m.X.push_back(random_point(rng, d));
    m.y(i) = uy(rng);
  }
  m.rebuild();
  return m;
}

Eigen::MatrixXd direct_inverse(const Eigen::MatrixXd& K, double sigma) {
  const int n = static_cast<int>(K.rows());
  Eigen::MatrixXd A = K + sigma * sigma * Eigen::MatrixXd::Identity(n, n);
  return A.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
}

}  // namespace

TEST_CASE("relevance scores") {
  RbfKernelParams p;

  SUBCASE("coincident point scores theta") {
    Eigen::VectorXd s =
        relevance_scores({vec({1.0, 2.0})}, vec({1.0, 2.0}), p);
    CHECK(s(0) == 1.0);
  }
  SUBCASE("squared distance two gives exp(-1)") {
    Eigen::VectorXd s = relevance_scores({vec({0.0, 0.0})},
                                         vec({1.0, 1.0}), p);
    CHECK(s(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  SUBCASE("scores strictly decrease with distance") {
    std::vector<Eigen::VectorXd> X = {vec({0.1}), vec({0.5}), vec({1.5}),
                                      vec({3.0})};
    Eigen::VectorXd s = relevance_scores(X, vec({0.0}), p);
    for (int i = 1; i < s.size(); ++i) CHECK(s(i) < s(i - 1));
  }
}

TEST_CASE("replacement selection") {
  SUBCASE("simple argmin") {
    CHECK(select_replacement(vec({0.9, 0.1, 0.5})) == 1);
  }
  SUBCASE("ties broken by lowest index") {
    CHECK(select_replacement(vec({0.4, 0.4, 0.4})) == 0);
  }
  SUBCASE("100 random vectors match a linear scan") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd s(1 + trial % 20);
      for (int i = 0; i < s.size(); ++i) s(i) = u(rng);
      int best = 0;
      for (int i = 1; i < s.size(); ++i) {
        if (s(i) < s(best)) best = i;
      }
      CHECK(select_replacement(s) == best);
    }
  }
  SUBCASE("argmin invariant under positive rescaling of theta") {
    std::mt19937_64 rng(2);
    std::vector<Eigen::VectorXd> X;
    for (int i = 0; i < 10; ++i) X.push_back(random_point(rng, 3));
    const Eigen::VectorXd probe = random_point(rng, 3);
    RbfKernelParams a, b;
    b.theta_f = 5.0;
    CHECK(select_replacement(relevance_scores(X, probe, a)) ==
          select_replacement(relevance_scores(X, probe, b)));
  }
}

TEST_CASE("symmetric permutation to the front") {
  std::mt19937_64 rng(3);

  SUBCASE("index 0 is the identity") {
    GpModel m = random_model(rng, 6, 2);
    GpModel copy = m;
    permute_point_to_front(m, 0);
    CHECK(m.K == copy.K);
    CHECK(m.K_inv == copy.K_inv);
    CHECK(m.y == copy.y);
  }
  SUBCASE("permuted inverse equals inverse of permuted matrix") {
    for (int idx = 1; idx < 6; ++idx) {
      GpModel m = random_model(rng, 6, 2);
      permute_point_to_front(m, idx);
      Eigen::MatrixXd expect = direct_inverse(m.K, m.sigma_noise);
      CHECK((m.K_inv - expect).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((m.K - build_kernel_matrix(m.params, m.X)).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
  SUBCASE("double application keeps the model consistent") {
    GpModel m = random_model(rng, 5, 2);
    permute_point_to_front(m, 3);
    permute_point_to_front(m, 3);
    CHECK(m.inverse_consistency_error() < 1e-8);
    CHECK((m.K - build_kernel_matrix(m.params, m.X)).cwiseAbs().maxCoeff() <
          1e-12);
  }
  SUBCASE("out-of-range index rejected") {
    GpModel m = random_model(rng, 4, 2);
    CHECK_THROWS_AS(permute_point_to_front(m, 4), std::out_of_range);
  }
}

TEST_CASE("inverse downdate") {
  std::mt19937_64 rng(5);

  SUBCASE("2x2 analytic block-inverse identity") {
    GpModel m = random_model(rng, 2, 1, 0.1);
    BlockDecomposition b = decompose_front(m);
    Eigen::MatrixXd P = downdate_inverse(b);
    const double expect = 1.0 / (b.Omega(0, 0) + 0.01);
    CHECK(P(0, 0) == doctest::Approx(expect).epsilon(1e-10));
  }
  SUBCASE("random 20-point kernels invert the retained block") {
    for (int trial = 0; trial < 20; ++trial) {
      GpModel m = random_model(rng, 20, 3);
      BlockDecomposition b = decompose_front(m);
      Eigen::MatrixXd P = downdate_inverse(b);
      Eigen::MatrixXd A =
          b.Omega + m.sigma_noise * m.sigma_noise *
                        Eigen::MatrixXd::Identity(19, 19);
      CHECK((P * A - Eigen::MatrixXd::Identity(19, 19))
                .cwiseAbs()
                .maxCoeff() < 1e-8);
    }
  }
  SUBCASE("remove then re-add reproduces the original inverse") {
    GpModel m = random_model(rng, 12, 2);
    const Eigen::MatrixXd original = m.K_inv;
    BlockDecomposition b = decompose_front(m);
    Eigen::MatrixXd P = downdate_inverse(b);
    // re-adding the departed point appends it at the trailing position, so
    // compare against the original inverse permuted the same way
    Eigen::MatrixXd restored =
        update_inverse(P, b.k_rest, b.k0, m.sigma_noise);
    const int n = 12;
    Eigen::MatrixXd expect(n, n);
    expect.topLeftCorner(n - 1, n - 1) = original.block(1, 1, n - 1, n - 1);
    expect.topRightCorner(n - 1, 1) = original.col(0).tail(n - 1);
    expect.bottomLeftCorner(1, n - 1) = original.row(0).tail(n - 1);
    expect(n - 1, n - 1) = original(0, 0);
    CHECK((restored - expect).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("near-zero rho0 is a singularity fault") {
    BlockDecomposition b;
    b.rho0 = 1e-13;
    b.rho_rest = vec({1.0});
    b.S = Eigen::MatrixXd::Identity(1, 1);
    CHECK_THROWS_AS(downdate_inverse(b), singular_update);
  }
}

TEST_CASE("inverse update") {
  std::mt19937_64 rng(7);

  SUBCASE("empty reduced inverse yields the scalar case") {
    Eigen::MatrixXd inv =
        update_inverse(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), 2.0, 0.5);
    CHECK(inv(0, 0) == doctest::Approx(1.0 / 2.25).epsilon(1e-12));
  }
  SUBCASE("random sequences stay exact inverses") {
    for (int trial = 0; trial < 10; ++trial) {
      GpModel m = random_model(rng, 19, 3);
      const Eigen::VectorXd x_new = random_point(rng, 3);
      Eigen::VectorXd k_new(19);
      for (int i = 0; i < 19; ++i) {
        k_new(i) = rbf_eval(m.params, m.X[i], x_new);
      }
      Eigen::MatrixXd inv =
          update_inverse(m.K_inv, k_new, m.params.theta_f, m.sigma_noise);
      Eigen::MatrixXd K_new(20, 20);
      K_new.topLeftCorner(19, 19) = m.K;
      K_new.topRightCorner(19, 1) = k_new;
      K_new.bottomLeftCorner(1, 19) = k_new.transpose();
      K_new(19, 19) = m.params.theta_f;
      Eigen::MatrixXd A = K_new + m.sigma_noise * m.sigma_noise *
                                      Eigen::MatrixXd::Identity(20, 20);
      CHECK((inv * A - Eigen::MatrixXd::Identity(20, 20))
                .cwiseAbs()
                .maxCoeff() < 1e-8);
    }
  }
  SUBCASE("duplicate insertion at sigma 1e-6 stays above the threshold") {
    GpModel m = random_model(rng, 1, 2, 1e-6);
    Eigen::VectorXd k_new(1);
    k_new(0) = rbf_eval(m.params, m.X[0], m.X[0]);
    CHECK_NOTHROW(
        update_inverse(m.K_inv, k_new, m.params.theta_f, m.sigma_noise));
  }
}

TEST_CASE("incremental update") {
  std::mt19937_64 rng(11);

  SUBCASE("first point into an empty model") {
    GpModel m;
    m.sigma_noise = 0.1;
    UpdateOutcome out = incremental_update(m, vec({1.0}), 0.5, {20});
    CHECK(m.size() == 1);
    CHECK_FALSE(out.replaced);
    CHECK(m.K_inv(0, 0) == doctest::Approx(1.0 / 1.01).epsilon(1e-12));
    CHECK(m.y(0) == 0.5);
  }
  SUBCASE("500-step stream at capacity 20 matches a batch rebuild") {
    GpModel m;
    m.sigma_noise = 1e-3;
    std::uniform_real_distribution<double> uy(-1.0, 1.0);
    const UpdateBudget budget{20};
    for (int k = 0; k < 500; ++k) {
      incremental_update(m, random_point(rng, 3), uy(rng), budget);
      CHECK(m.size() <= 20);
      CHECK(m.inverse_consistency_error() < 1e-6);
    }
    GpModel batch = m;
    batch.rebuild();
    for (int q = 0; q < 10; ++q) {
      const Eigen::VectorXd probe = random_point(rng, 3);
      GpPosterior a = m.posterior(probe, 1e-6);
      GpPosterior b = batch.posterior(probe, 1e-6);
      CHECK(std::abs(a.mean - b.mean) < 1e-6);
      CHECK(std::abs(a.std - b.std) < 1e-6);
    }
  }
  SUBCASE("replacement evicts the least relevant point") {
    GpModel m;
    m.sigma_noise = 1e-3;
    const UpdateBudget budget{3};
    incremental_update(m, vec({0.0}), 0.1, budget);
    incremental_update(m, vec({5.0}), 0.2, budget);
    incremental_update(m, vec({0.5}), 0.3, budget);
    // incoming point near 0; the point at 5 is least relevant
    UpdateOutcome out = incremental_update(m, vec({0.2}), 0.4, budget);
    CHECK(out.replaced);
    CHECK(out.evicted_index == 1);
    CHECK(m.size() == 3);
    bool has_far = false;
    for (const auto& x : m.X) {
      if (x(0) == 5.0) has_far = true;
    }
    CHECK_FALSE(has_far);
    // the new point occupies the trailing position
    CHECK(m.X.back()(0) == 0.2);
    CHECK(m.y(2) == 0.4);
  }
  SUBCASE("covariance-diagonal strategy evicts the most redundant point") {
    GpModel m;
    m.sigma_noise = 1e-2;
    const UpdateBudget budget{3};
    incremental_update(m, vec({0.0}), 0.1, budget);
    incremental_update(m, vec({0.05}), 0.1, budget);  // near-duplicate pair
    incremental_update(m, vec({4.0}), 0.2, budget);
    int expect = 0;
    for (int i = 1; i < 3; ++i) {
      if (m.K_inv(i, i) > m.K_inv(expect, expect)) expect = i;
    }
    UpdateOutcome out =
        incremental_update(m, vec({8.0}), 0.3, budget,
                           ReplacementStrategy::kCovarianceDiagonal);
    CHECK(out.replaced);
    CHECK(out.evicted_index == expect);
  }
  SUBCASE("capacity below two rejected") {
    GpModel m;
    CHECK_THROWS_AS(incremental_update(m, vec({0.0}), 0.0, {1}),
                    std::invalid_argument);
  }
}
