#include <doctest.h>

#include <cmath>

#include <Eigen/Cholesky>

#include "hdpf/error.hpp"
#include "hdpf/metrics.hpp"
#include "support/oracles.hpp"

using namespace hdpf;

namespace {

GaussianBelief belief(Vector mean, Eigen::MatrixXd cov) {
  GaussianBelief g;
  g.mean = std::move(mean);
  g.covariance = std::move(cov);
  return g;
}

GaussianBelief scalar(double mean, double var) {
  return belief(Vector::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var));
}

Eigen::MatrixXd random_spd(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

Ensemble draw(const GaussianBelief& g, int count, Rng& rng) {
  const Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
  const Eigen::MatrixXd lower = llt.matrixL();
  Ensemble e;
  e.particles.resize(count, g.dimension());
  Vector z(g.dimension());
  for (int i = 0; i < count; ++i) {
    for (int l = 0; l < g.dimension(); ++l) z[l] = rng.normal();
    e.particles.row(i) = (g.mean + lower * z).transpose();
  }
  return e;
}

double log_density(const GaussianBelief& g, const Vector& x) {
  const Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
  const Vector d = x - g.mean;
  const Vector s = llt.matrixL().solve(d);
  double logdet = 0.0;
  for (int i = 0; i < g.dimension(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (s.squaredNorm() + logdet + g.dimension() * std::log(2.0 * M_PI));
}

}  // namespace

TEST_CASE("gaussian fit") {
  Ensemble e;
  e.particles.resize(3, 1);
  e.particles << 0.0, 1.0, 2.0;
  const auto fit = ensemble_gaussian_fit(e, 0.0);
  CHECK(fit.mean[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fit.covariance(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  Ensemble same;
  same.particles = ParticleMatrix::Constant(5, 3, 2.0);
  const auto flat = ensemble_gaussian_fit(same, 1e-9);
  CHECK(flat.mean.isApprox(Vector::Constant(3, 2.0)));
  CHECK(flat.covariance.isApprox(1e-9 * Eigen::MatrixXd::Identity(3, 3)));
  CHECK_NOTHROW(gaussian_kl(flat, flat));

  Ensemble one;
  one.particles = ParticleMatrix::Zero(1, 2);
  CHECK_THROWS_AS(ensemble_gaussian_fit(one), InvalidDimension);

  Rng rng(3);
  const auto truth = belief(Vector::LinSpaced(3, -1.0, 1.0), random_spd(3, rng));
  const int n = 100000;
  const auto big = ensemble_gaussian_fit(draw(truth, n, rng), 0.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(big.mean[i] - truth.mean[i]) < 3.0 * std::sqrt(truth.covariance(i, i) / n));
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((truth.covariance(i, i) * truth.covariance(j, j) +
                                   truth.covariance(i, j) * truth.covariance(i, j)) / n);
      CHECK(std::abs(big.covariance(i, j) - truth.covariance(i, j)) < 3.0 * se);
    }
  }
}

TEST_CASE("gaussian KL closed forms") {
  CHECK(gaussian_kl(scalar(0, 1), scalar(1, 1)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gaussian_kl(scalar(0, 2), scalar(0, 1)) == doctest::Approx(0.153426).epsilon(1e-6));
  CHECK(gaussian_kl(scalar(0, 2), scalar(0, 1)) ==
        doctest::Approx(0.5 * (2.0 - 1.0 + std::log(0.5))).epsilon(1e-14));
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = belief(Vector::Random(4), random_spd(4, rng));
    CHECK(std::abs(gaussian_kl(p, p)) < 1e-10);
    const auto q = belief(Vector::Random(4), random_spd(4, rng));
    CHECK(gaussian_kl(p, q) >= 0.0);
  }
  CHECK_THROWS_AS(gaussian_kl(scalar(0, 1), scalar(0, 0)), SingularMatrix);
}

TEST_CASE("gaussian KL against Monte Carlo") {
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const auto p = belief(Vector::Random(3), random_spd(3, rng));
    const auto q = belief(Vector::Random(3), random_spd(3, rng));
    const auto xs = draw(p, 100000, rng);
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < xs.size(); ++i) {
      const Vector x = xs.particles.row(i).transpose();
      const double v = log_density(p, x) - log_density(q, x);
      s += v;
      s2 += v * v;
    }
    const double n = xs.size();
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(gaussian_kl(p, q) - mean) < 3.0 * se);
  }
}

TEST_CASE("squared error and variance ratio") {
  Ensemble e;
  e.particles.resize(2, 1);
  e.particles << 1.0, 2.0;
  CHECK(per_locus_sq_err(e, scalar(1.0, 1.0))[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(per_locus_sq_err(e, scalar(1.5, 1.0))[0] == 0.0);

  Rng rng(6);
  const auto g = belief(Vector::Random(5), random_spd(5, rng));
  auto big = draw(g, 100000, rng);
  const Vector ratio = variance_ratio(big, g);
  for (int l = 0; l < 5; ++l) CHECK(std::abs(ratio[l] - 1.0) < 0.03);

  const Vector before = per_locus_sq_err(big, g);
  Ensemble shuffled = big;
  for (int i = 0; i < big.size(); ++i) shuffled.particles.row(i) = big.particles.row((i * 7919) % big.size());
  CHECK(per_locus_sq_err(shuffled, g).isApprox(before, 1e-10));
}

TEST_CASE("locus classes") {
  const auto c30 = classify_loci(make_partition(30, 3));
  int central = 0;
  for (auto c : c30) central += c == LocusClass::kZoneCentral;
  CHECK(central == 10);
  CHECK(c30.size() == 30);
  CHECK(c30[0] == LocusClass::kZonePeripheral);
  CHECK(c30[1] == LocusClass::kZoneCentral);
  CHECK(c30[2] == LocusClass::kZonePeripheral);

  const auto c7 = classify_loci(make_partition(7, 3));
  CHECK(c7[6] == LocusClass::kZoneCentral);
  for (auto c : classify_loci(make_partition(4, 1))) CHECK(c == LocusClass::kZoneCentral);
  for (auto c : classify_loci(make_partition(4, 2))) CHECK(c == LocusClass::kZonePeripheral);
  CHECK(to_string(LocusClass::kZoneCentral) != to_string(LocusClass::kZonePeripheral));
}

TEST_CASE("summed locus trace") {
  const auto m = build_paper_model(6);
  const auto tr = simulate_trajectory(m, 3, Rng(7));
  const auto beliefs = kalman_filter(tr.observations, m);
  std::vector<Vector> means;
  for (int t = 0; t < 3; ++t) means.push_back(Vector::Constant(6, t + 0.5));
  const auto full = summed_locus_trace(tr.states, tr.observations, beliefs, {{"alg", means}}, 0, 5);
  REQUIRE(full.size() == 12);
  for (const auto& p : full) {
    const auto t = static_cast<std::size_t>(p.time - 1);
    double want = 0.0;
    if (p.series == "truth") want = tr.states[t].sum();
    if (p.series == "observation") want = tr.observations[t].sum();
    if (p.series == "kalman") want = beliefs[t + 1].mean.sum();
    if (p.series == "alg") want = means[t].sum();
    CHECK(std::abs(p.value - want) < 1e-12);
  }
  const auto single = summed_locus_trace(tr.states, tr.observations, beliefs, {}, 2, 2);
  CHECK(single[0].value == tr.states[0][2]);

  std::vector<Vector> zeros(3, Vector::Zero(6));
  const auto z = summed_locus_trace(zeros, zeros, beliefs, {}, 1, 4);
  CHECK(z[0].value == 0.0);
  CHECK_THROWS_AS(summed_locus_trace(tr.states, tr.observations, beliefs, {}, 3, 6), InvalidDimension);
  CHECK_THROWS_AS(summed_locus_trace(tr.states, tr.observations, beliefs, {}, 4, 3), InvalidDimension);
}

TEST_CASE("metrics record") {
  const auto m = build_paper_model(6);
  const auto tr = simulate_trajectory(m, 1, Rng(8));
  const auto b = kalman_filter(tr.observations, m)[1];
  Rng rng(9);
  const auto e = draw(b, 5000, rng);
  const auto part = make_partition(6, 3);
  const auto rec = compute_metrics(1, e, b, classify_loci(part));
  CHECK(rec.time == 1);
  CHECK(rec.per_locus_sq_err.size() == 6);
  CHECK(rec.variance_ratio.size() == 6);
  CHECK(rec.kl_divergence >= -1e-10);
  CHECK(rec.kl_reverse >= -1e-10);
  CHECK(rec.kl_divergence < 0.05);
  CHECK(rec.locus_class.size() == 6);
}
