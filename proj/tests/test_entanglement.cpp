#include <doctest.h>

#include <cmath>

#include "cpol/entanglement.hpp"
#include "cpol/quadrature.hpp"
#include "cpol/rng.hpp"

using namespace cpol;
using namespace cpol::entanglement;

namespace {
constexpr double deg = M_PI / 180.0;
constexpr double me = physics::electron_mass_kev;
}

TEST_CASE("concurrence after one scattering: reference values") {
  CHECK(concurrence_qft(me, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(concurrence_qft(me, M_PI) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(concurrence_qft(me, M_PI / 2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("pure-state model concurrence") {
  CHECK(concurrence_pure_model(777.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(concurrence_pure_model(me, M_PI) == doctest::Approx(0.6).epsilon(1e-14));
  // sqrt(3)/2 - sqrt(1/60) from the 90-degree flip probabilities
  CHECK(concurrence_pure_model(me, M_PI / 2.0) ==
        doctest::Approx(std::sqrt(3.0) / 2.0 - std::sqrt(1.0 / 60.0)).epsilon(1e-13));
}

TEST_CASE("both concurrence models share their endpoints") {
  for (int i = 0; i < 20; ++i) {
    const double e = me * (0.05 + 4.95 * i / 19.0);
    const double gamma_pi = physics::gamma_factor(e, physics::scattered_energy(e, M_PI));
    CHECK(std::abs(concurrence_qft(e, 0.0) - 1.0) < 1e-12);
    CHECK(std::abs(concurrence_pure_model(e, 0.0) - 1.0) < 1e-12);
    CHECK(std::abs(concurrence_qft(e, M_PI) - 2.0 / gamma_pi) < 1e-12);
    CHECK(std::abs(concurrence_pure_model(e, M_PI) - 2.0 / gamma_pi) < 1e-12);
  }
}

TEST_CASE("low-energy curve approaches its limiting form within 2 percent") {
  for (int i = 0; i <= 90; ++i) {
    const double theta = M_PI * i / 90.0;
    const double c = std::cos(theta);
    const double s2 = 1.0 - c * c;
    const double limit = (1.0 + std::abs(c)) * (1.0 + std::abs(c)) / (2.0 * (2.0 - s2));
    CHECK(concurrence_qft(0.1 * me, theta) == doctest::Approx(limit).epsilon(0.02));
  }
}

TEST_CASE("annihilation concurrence dips at 90 degrees and never vanishes") {
  double prev = concurrence_qft(me, 0.0);
  for (int i = 1; i <= 45; ++i) {
    const double value = concurrence_qft(me, i * 2.0 * deg);
    CHECK(value < prev);
    prev = value;
  }
  prev = concurrence_qft(me, M_PI / 2.0);
  for (int i = 46; i <= 90; ++i) {
    const double value = concurrence_qft(me, i * 2.0 * deg);
    CHECK(value > prev);
    prev = value;
  }
  RngStream rng(6, 0);
  for (int i = 0; i < 300; ++i) {
    const double value = concurrence_qft(me * rng.uniform(0.05, 5.0), rng.uniform(0.0, M_PI));
    CHECK(value > 0.0);
    CHECK(value <= 1.0 + 1e-12);
  }
}

TEST_CASE("visibilities of entangled and classically correlated pairs") {
  CHECK(visibility_entangled(me, M_PI / 2.0, me, M_PI / 2.0) ==
        doctest::Approx(4.0 / 9.0).epsilon(1e-13));
  CHECK(visibility_entangled(me, 0.0, me, 1.0) == doctest::Approx(0.0));
  CHECK(std::abs(visibility_entangled(me, 82.0 * deg, me, 82.0 * deg) - 0.476) < 0.005);

  CHECK(visibility_classical(me, M_PI / 2.0, me, M_PI / 2.0) ==
        doctest::Approx(2.0 / 9.0).epsilon(1e-13));
  CHECK(std::abs(visibility_classical(me, 82.0 * deg, me, M_PI / 2.0) - 0.23) < 0.005);
  RngStream rng(7, 0);
  for (int i = 0; i < 50; ++i) {
    const double ta = rng.uniform(0.1, M_PI - 0.1);
    const double tb = rng.uniform(0.1, M_PI - 0.1);
    CHECK(visibility_classical(me, ta, me, tb) ==
          doctest::Approx(0.5 * visibility_entangled(me, ta, me, tb)).epsilon(1e-14));
  }
}

TEST_CASE("classical coincidence integrals match their closed forms") {
  const auto ci = classical_integrals(M_PI / 2.0, M_PI / 2.0, me, me);
  CHECK(ci.p_perp - ci.p_par == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ci.p_perp + ci.p_par == doctest::Approx(9.0).epsilon(1e-12));

  const auto small = classical_integrals(1e-5, 1.0, me, me);
  CHECK(small.p_perp == doctest::Approx(small.p_par).epsilon(1e-9));

  RngStream rng(8, 0);
  for (int i = 0; i < 10; ++i) {
    const double ta = rng.uniform(0.1, M_PI - 0.1);
    const double tb = rng.uniform(0.1, M_PI - 0.1);
    const double ea = me * rng.uniform(0.1, 4.0);
    const double eb = me * rng.uniform(0.1, 4.0);
    const auto c = classical_integrals(ta, tb, ea, eb);
    const double nu = (c.p_perp - c.p_par) / (c.p_perp + c.p_par);
    CHECK(nu == doctest::Approx(visibility_classical(ea, ta, eb, tb)).epsilon(1e-10));
  }
}

TEST_CASE("three-scattering terms with chained energies") {
  const ThreeComptonConfig cfg{me, M_PI / 2.0, M_PI / 2.0, M_PI / 2.0};
  const auto t = three_compton_terms(cfg);
  CHECK(t.b_term == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(t.e_ai == doctest::Approx(255.5).epsilon(1e-14));
  CHECK(t.e_af == doctest::Approx(255.5 / 1.5).epsilon(1e-12));
  // gamma chain: 2.5, 2.5, 13/6 gives (gamma - sin^2) products
  CHECK(t.a_term == doctest::Approx(1.5 * 1.5 * (13.0 / 6.0 - 1.0)).epsilon(1e-13));
}

TEST_CASE("correlation function favors orthogonal scattering planes") {
  RngStream rng(9, 0);
  for (int i = 0; i < 10; ++i) {
    ThreeComptonConfig cfg;
    cfg.e_in = me * rng.uniform(0.1, 3.0);
    cfg.theta = rng.uniform(0.05, M_PI - 0.05);
    cfg.theta_a = rng.uniform(0.3, M_PI - 0.3);
    cfg.theta_b = rng.uniform(0.3, M_PI - 0.3);
    const auto dir = convention_for(cfg);
    CHECK(correlation_r(cfg, 0.0, dir) < correlation_r(cfg, M_PI / 2.0, dir));
  }
}

TEST_CASE("visibility from quadrature agrees with the closed form and factorizes") {
  const ThreeComptonConfig symmetric{me, M_PI / 2.0, M_PI / 2.0, M_PI / 2.0};
  CHECK(visibility_closed_form(symmetric) ==
        doctest::Approx(2.0 / (2.0 * 2.625) * 0.5).epsilon(1e-13));
  CHECK(visibility_from_quadrature(symmetric) ==
        doctest::Approx(visibility_closed_form(symmetric)).epsilon(1e-12));

  SUBCASE("forward and backward limits") {
    const ThreeComptonConfig fwd{me, 1e-4, M_PI / 2.0, M_PI / 2.0};
    CHECK(factorization_residual(fwd) < 1e-9);
    CHECK(visibility_from_quadrature(fwd) == doctest::Approx(4.0 / 9.0).epsilon(1e-4));

    const ThreeComptonConfig bwd{me, M_PI - 1e-4, M_PI / 2.0, M_PI / 2.0};
    CHECK(factorization_residual(bwd) < 1e-9);
    const double a_a = physics::analyzing_power(three_compton_terms(bwd).e_ai, M_PI / 2.0);
    CHECK(visibility_from_quadrature(bwd) ==
          doctest::Approx(0.6 * a_a * 2.0 / 3.0).epsilon(1e-3));
  }

  SUBCASE("hemisphere symmetry of the extracted modulation factor") {
    for (double th : {20.0, 50.0, 80.0}) {
      const ThreeComptonConfig a{me, th * deg, 1.1, 1.9};
      const ThreeComptonConfig b{me, M_PI - th * deg, 1.1, 1.9};
      const auto ta = three_compton_terms(a);
      const auto tb = three_compton_terms(b);
      const double factor_a = visibility_from_quadrature(a) * 2.0 * ta.a_term / ta.b_term;
      const double factor_b = visibility_from_quadrature(b) * 2.0 * tb.a_term / tb.b_term;
      CHECK(factor_a == doctest::Approx(factor_b).epsilon(1e-10));
    }
  }

  SUBCASE("random grid") {
    RngStream rng(10, 0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      ThreeComptonConfig cfg;
      cfg.e_in = me * rng.uniform(0.05, 5.0);
      cfg.theta = rng.uniform(1e-3, M_PI - 1e-3);
      cfg.theta_a = rng.uniform(1e-3, M_PI - 1e-3);
      cfg.theta_b = rng.uniform(1e-3, M_PI - 1e-3);
      worst = std::max(worst, factorization_residual(cfg));
      worst = std::max(worst, std::abs(visibility_from_quadrature(cfg) -
                                       visibility_closed_form(cfg)));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("S-function curve") {
  CHECK(chsh_s_curve(M_PI / 4.0, 0.8) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(chsh_s_curve(0.0, 0.8) == doctest::Approx(-1.6).epsilon(1e-13));
  CHECK(chsh_s_curve(22.5 * deg, 1.0) == doctest::Approx(-2.0 * std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("quadrature is deterministic") {
  const ThreeComptonConfig cfg{me, 1.0, 1.3, 1.7};
  const double a = correlation_r(cfg, 0.6, convention_for(cfg));
  const double b = correlation_r(cfg, 0.6, convention_for(cfg));
  CHECK(a == b);
}

TEST_CASE("theory curve sampling") {
  const auto curve = concurrence_curve_qft(me, 181);
  CHECK(curve.samples.size() == 181);
  CHECK(curve.samples.front().second == doctest::Approx(1.0));
  CHECK(curve.samples.back().second == doctest::Approx(0.6));
}
