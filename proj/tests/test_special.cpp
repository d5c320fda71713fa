#include <catch2/catch_amalgamated.hpp>

#include "acst/math/interp.hpp"
#include "acst/math/quadrature.hpp"
#include "acst/math/rng.hpp"
#include "acst/math/special.hpp"
#include "acst/math/stats.hpp"

using namespace acst;

TEST_CASE("digamma matches high-precision reference") {
  CHECK(digamma(0.1) == Catch::Approx(-1.0423754940411076e+01).epsilon(1e-12));
  CHECK(digamma(0.5) == Catch::Approx(-1.9635100260214235e+00).epsilon(1e-12));
  CHECK(digamma(1.0) == Catch::Approx(-5.7721566490153287e-01).epsilon(1e-12));
  CHECK(digamma(2.5) == Catch::Approx(7.0315664064524319e-01).epsilon(1e-12));
  CHECK(digamma(10.0) == Catch::Approx(2.2517525890667209e+00).epsilon(1e-12));
  CHECK(digamma(123.456) == Catch::Approx(4.8118293238289853e+00).epsilon(1e-12));
  CHECK(digamma(1e4) == Catch::Approx(9.2102903711428485e+00).epsilon(1e-12));
}

TEST_CASE("normal quantile and cdf round trip") {
  CHECK(norm_quantile(0.5) == Catch::Approx(0.0).margin(1e-15));
  CHECK(norm_quantile(0.975) == Catch::Approx(1.9599639845400540).epsilon(1e-13));
  CHECK(norm_quantile(1e-7) == Catch::Approx(-5.1993375821928165).epsilon(1e-13));
  CHECK(norm_quantile(1e-15) == Catch::Approx(-7.9413453261709979).epsilon(1e-12));
  CHECK(norm_quantile(0.3) == Catch::Approx(-0.52440051270804089).epsilon(1e-13));
  for (double p : {1e-12, 1e-6, 0.012, 0.4, 0.5, 0.77, 0.9999, 1 - 1e-10})
    CHECK(norm_cdf(norm_quantile(p)) == Catch::Approx(p).epsilon(1e-11));
}

TEST_CASE("incomplete beta and gamma match reference") {
  CHECK(inc_beta(2.0, 0.5, 0.3) == Catch::Approx(3.7840969485813079e-02).epsilon(1e-12));
  CHECK(inc_beta(12.8835, 0.5, 0.9) == Catch::Approx(1.0269865731683593e-01).epsilon(1e-12));
  CHECK(inc_beta(0.5, 0.5, 0.5) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(inc_beta(5.0, 3.0, 0.72) == Catch::Approx(6.9192654520319985e-01).epsilon(1e-12));
  CHECK(gamma_p(1.5, 0.169) == Catch::Approx(4.7269796796972678e-02).epsilon(1e-12));
  CHECK(gamma_p(3.0, 9.294) == Catch::Approx(9.9508091173454460e-01).epsilon(1e-12));
  CHECK(gamma_p(0.25, 2.0) == Catch::Approx(9.8271398814048316e-01).epsilon(1e-12));

  for (double p : {0.001, 0.31, 0.5, 0.82, 0.9995})
    CHECK(inc_beta(3.2, 0.5, inc_beta_inv(3.2, 0.5, p)) == Catch::Approx(p).epsilon(1e-10));
  for (double p : {0.001, 0.31, 0.5, 0.82, 0.9995})
    CHECK(gamma_p(2.7, gamma_p_inv(2.7, p)) == Catch::Approx(p).epsilon(1e-10));
}

TEST_CASE("student t cdf/quantile match reference") {
  CHECK(t_cdf(0.0, 3.0) == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(t_cdf(1.5, 4.0) == Catch::Approx(8.9600000000000002e-01).epsilon(1e-12));
  CHECK(t_cdf(-2.3, 2.5) == Catch::Approx(6.1239832212077648e-02).epsilon(1e-12));
  CHECK(t_cdf(5.0, 10.0) == Catch::Approx(9.9973133319862173e-01).epsilon(1e-12));
  CHECK(t_cdf(-8.0, 25.767) == Catch::Approx(9.4405389525792809e-09).epsilon(1e-10));
  CHECK(t_cdf(0.7, 200.0) == Catch::Approx(7.5762963350326051e-01).epsilon(1e-12));
  CHECK(t_cdf(-30.0, 4.108) == Catch::Approx(2.8634873136407502e-06).epsilon(1e-10));

  CHECK(t_quantile(0.025, 5.0) == Catch::Approx(-2.5705818356363146).epsilon(1e-11));
  CHECK(t_quantile(0.5, 7.0) == Catch::Approx(0.0).margin(1e-14));
  CHECK(t_quantile(0.975, 3.3) == Catch::Approx(3.0248744618409331).epsilon(1e-11));
  CHECK(t_quantile(1e-7, 4.0) == Catch::Approx(-7.3985758047769068e+01).epsilon(1e-9));
  CHECK(t_quantile(1.0 - 1e-7, 10.0) == Catch::Approx(1.2492209688254745e+01).epsilon(1e-9));
  CHECK(t_quantile(0.3, 25.767) == Catch::Approx(-5.3095084837295370e-01).epsilon(1e-11));
}

TEST_CASE("gamma quantile and prior calibration endpoints") {
  CHECK(gamma_quantile(0.005, 3.0, 0.2) == Catch::Approx(1.6893169436386668).epsilon(1e-9));
  CHECK(gamma_quantile(0.995, 3.0, 0.2) == Catch::Approx(4.6368960446277718e+01).epsilon(1e-9));
  CHECK(gamma_quantile(0.5, 2.054, 2.054) == Catch::Approx(8.4323054423775012e-01).epsilon(1e-9));
}

TEST_CASE("kolmogorov and chi2 tails") {
  CHECK(kolmogorov_sf(0.5) == Catch::Approx(9.6394524366487511e-01).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.0) == Catch::Approx(2.6999967167735456e-01).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.36) == Catch::Approx(4.9485876755377876e-02).epsilon(1e-12));
  CHECK(kolmogorov_sf(2.0) == Catch::Approx(6.7092525577969533e-04).epsilon(1e-10));
  CHECK(chi2_sf(11.07, 5.0) == Catch::Approx(5.0009618622405425e-02).epsilon(1e-10));
  CHECK(chi2_sf(180.0, 143.0) == Catch::Approx(1.9603950047859302e-02).epsilon(1e-9));
}

TEST_CASE("gauss-legendre and adaptive GK integrate known functions") {
  auto f = [](double x) { return std::exp(-x * x); };
  const double ref = std::sqrt(kPi) * std::erf(3.0);
  CHECK(gl_integrate(f, -3.0, 3.0, 48) == Catch::Approx(ref).epsilon(1e-13));
  CHECK(adaptive_gk(f, -3.0, 3.0, 1e-12) == Catch::Approx(ref).epsilon(1e-12));
  // polynomial exactness of the GL rule
  auto poly = [](double x) { return 3 * x * x * x * x * x - x * x + 2.0; };
  CHECK(gl_integrate(poly, -1.0, 2.0, 7) == Catch::Approx(31.5 - 3.0 + 6.0).epsilon(1e-13));
  // t density integrates to one
  auto td = [](double x) { return t_pdf(x, 3.7); };
  CHECK(adaptive_gk(td, -300.0, 300.0, 1e-11) == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("rng determinism and distributional sanity") {
  Rng r1(42), r2(42);
  for (int i = 0; i < 100; ++i) REQUIRE(r1.uniform() == r2.uniform());

  Rng a = Rng(42).substream("fit");
  Rng b = Rng(42).substream("gibbs");
  CHECK(a.uniform() != b.uniform());

  Rng r(7);
  const int n = 200000;
  std::vector<double> z(n);
  for (auto& v : z) v = r.normal();
  CHECK(mean(z) == Catch::Approx(0.0).margin(0.01));
  CHECK(variance(z) == Catch::Approx(1.0).margin(0.02));

  // gamma moments
  std::vector<double> g(n);
  for (auto& v : g) v = r.gamma(2.5, 1.25);
  CHECK(mean(g) == Catch::Approx(2.0).margin(0.02));
  CHECK(variance(g) == Catch::Approx(1.6).margin(0.05));

  // gamma with shape < 1 (boost path)
  std::vector<double> gs(n);
  for (auto& v : gs) v = r.gamma(0.4, 2.0);
  CHECK(mean(gs) == Catch::Approx(0.2).margin(0.01));

  // truncated normal with deep truncation stays positive with right law
  std::vector<double> tn(n);
  for (auto& v : tn) v = r.truncated_normal_positive(-3.0, 1.0);
  double mn = 1e9;
  for (double v : tn) mn = std::min(mn, v);
  CHECK(mn > 0.0);
  const double z0 = 3.0;
  const double expected_mean = -3.0 + norm_pdf(z0) / norm_cdf(-z0);
  CHECK(mean(tn) == Catch::Approx(expected_mean).margin(0.01));

  // serialization round trip
  Rng s1(99);
  for (int i = 0; i < 13; ++i) s1.uniform();
  const std::string blob = s1.serialize();
  Rng s2 = Rng::deserialize(blob);
  for (int i = 0; i < 50; ++i) REQUIRE(s1.uniform() == s2.uniform());
}

TEST_CASE("ks tests behave on null and alternative") {
  Rng r(11);
  std::vector<double> u(20000);
  for (auto& v : u) v = r.uniform();
  CHECK(ks_test_uniform(u).p_value > 0.01);

  std::vector<double> biased(20000);
  for (auto& v : biased) v = std::pow(r.uniform(), 1.15);
  CHECK(ks_test_uniform(biased).p_value < 1e-4);

  std::vector<double> a(20000), b(20000);
  for (auto& v : a) v = r.normal();
  for (auto& v : b) v = r.normal();
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  for (auto& v : b) v += 0.08;
  CHECK(ks_two_sample(a, b).p_value < 1e-4);
}

TEST_CASE("rank correlations on known structure") {
  Rng r(13);
  const int n = 30000;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = r.normal();
    y[i] = 0.5 * x[i] + std::sqrt(1 - 0.25) * r.normal();
  }
  // Gaussian: spearman = 6/pi asin(rho/2), kendall = 2/pi asin(rho)
  CHECK(spearman_sample(x, y) == Catch::Approx(4.8258373953099742e-01).margin(0.012));
  CHECK(kendall_sample(x, y) == Catch::Approx(3.3333333333333337e-01).margin(0.012));
  CHECK(pearson_sample(x, y) == Catch::Approx(0.5).margin(0.012));
}

TEST_CASE("monotone cubic preserves monotonicity and hits knots") {
  std::vector<double> xs{0.0, 0.5, 1.2, 2.0, 3.5};
  std::vector<double> ys{0.0, 0.1, 0.9, 1.0, 4.0};
  MonotoneCubic mc(xs, ys);
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(mc(xs[i]) == Catch::Approx(ys[i]).margin(1e-14));
  double prev = -1e18;
  for (double t = 0.0; t <= 3.5; t += 0.001) {
    const double v = mc(t);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}
