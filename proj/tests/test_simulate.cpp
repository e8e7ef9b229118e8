#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "swstab/certify.hpp"
#include "swstab/digraph.hpp"
#include "swstab/errors.hpp"
#include "swstab/signal.hpp"
#include "swstab/simulate.hpp"
#include "swstab/spectral.hpp"

using namespace swstab;
using namespace swstab::testing;

TEST_CASE("single mode trajectory matches the closed form") {
  Ensemble ens = Ensemble::from_matrices({(Eigen::MatrixXd(2, 2) << -1, 0, 0, -1).finished()});
  SwitchingSignal sig{{1}, {1.0}};
  Eigen::VectorXd x0(2);
  x0 << 3.0, 4.0;
  Trajectory tr = simulate(ens, sig, x0, 10);
  REQUIRE(tr.switch_log_norms.size() == 2);
  CHECK(tr.switch_log_norms[0] == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(tr.switch_log_norms[1] == doctest::Approx(std::log(5.0) - 1.0).epsilon(1e-12));
  REQUIRE(tr.times.size() == 11);  // 10 samples plus the endpoint
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(1.0));
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    CHECK(tr.norms[i] == doctest::Approx(5.0 * std::exp(-tr.times[i])).epsilon(1e-9));
    CHECK(tr.sample_modes[i] == 1);
  }
}

TEST_CASE("switch states agree with a dense propagator product") {
  std::mt19937_64 rng(909);
  for (int trial = 0; trial < 25; ++trial) {
    StableInstance inst = random_stable_instance(rng, 4, 3);
    SwitchingSignal sig = random_signal(rng, inst.graph, 6);
    int n = inst.ensemble.dimension();
    Eigen::VectorXd x0 = Eigen::VectorXd::Random(n);
    if (x0.norm() < 0.1) x0.setOnes();
    Trajectory tr = simulate(inst.ensemble, sig, x0, 4);

    Eigen::VectorXd x = x0;
    for (int m = 0; m < sig.length(); ++m) {
      REQUIRE(m < static_cast<int>(tr.switch_log_norms.size()));
      CHECK(tr.switch_log_norms[m] ==
            doctest::Approx(std::log(x.norm())).epsilon(1e-9));
      x = matrix_exponential(inst.ensemble.at(sig.modes[m]).A, sig.durations[m]) * x;
    }
    CHECK(tr.switch_log_norms.back() == doctest::Approx(std::log(x.norm())).epsilon(1e-9));
  }
}

TEST_CASE("alternating expansion and contraction cancel exactly") {
  Eigen::MatrixXd S = (Eigen::MatrixXd(2, 2) << -1, 0, 0, -1).finished();
  Eigen::MatrixXd U = (Eigen::MatrixXd(2, 2) << 1, 0, 0, 1).finished();
  Ensemble ens = Ensemble::from_matrices({S, U});
  SwitchingSignal sig;
  for (int i = 0; i < 20; ++i) {
    sig.modes.push_back(1 + (i % 2));
    sig.durations.push_back(0.7);
  }
  Eigen::VectorXd x0(2);
  x0 << 1.0, -2.0;
  Trajectory tr = simulate(ens, sig, x0, 2);
  for (std::size_t m = 0; m < tr.switch_log_norms.size(); m += 2) {
    CHECK(tr.switch_log_norms[m] == doctest::Approx(std::log(x0.norm())).epsilon(1e-9));
  }
}

TEST_CASE("log norms survive decay that underflows doubles") {
  Eigen::MatrixXd A = (Eigen::MatrixXd(1, 1) << -5.0).finished();
  Ensemble ens = Ensemble::from_matrices({A, A});
  Digraph ring(2, {{1, 2}, {2, 1}});
  SwitchingSignal sig;
  for (int i = 0; i < 300; ++i) {
    sig.modes.push_back(1 + (i % 2));
    sig.durations.push_back(1.0);
  }
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  Trajectory tr = simulate(ens, sig, x0, 1);
  // ln||x(t_m)|| = -5 m stays exact even though e^{-1500} flushes to zero.
  for (std::size_t m = 0; m < tr.switch_log_norms.size(); ++m) {
    CHECK(std::isfinite(tr.switch_log_norms[m]));
    CHECK(tr.switch_log_norms[m] == doctest::Approx(-5.0 * static_cast<double>(m)).epsilon(1e-9));
  }
}

TEST_CASE("simulate validates inputs") {
  Ensemble ens = Ensemble::from_matrices({(Eigen::MatrixXd(2, 2) << -1, 0, 0, -2).finished()});
  Eigen::VectorXd x0(2);
  x0 << 1, 1;
  CHECK_THROWS_AS((void)simulate(ens, SwitchingSignal{{2}, {1.0}}, x0), Error);
  Eigen::VectorXd bad(3);
  bad << 1, 1, 1;
  CHECK_THROWS_AS((void)simulate(ens, SwitchingSignal{{1}, {1.0}}, bad), Error);
  CHECK_THROWS_AS((void)simulate(ens, SwitchingSignal{{1}, {1.0}}, x0, 0), Error);
}

TEST_CASE("envelope on a single interval is trivial") {
  Ensemble ens = Ensemble::from_matrices({(Eigen::MatrixXd(2, 2) << -1, 0, 0, -2).finished()});
  Digraph g(1, {});
  SwitchingSignal sig{{1}, {3.0}};
  EnvelopeSeries env = envelope(ens, g, sig);
  REQUIRE(env.log_a.size() == 1);
  CHECK(env.log_a[0] == 0.0);  // a_1 = 1 exactly
  CHECK(env.rho == 1.0);       // edgeless graph
  CHECK(env.loop_terms.empty());
  CHECK(env.residual_log_cost == 0.0);
}

TEST_CASE("diagonal ensembles make the envelope exact") {
  // First diagonal entry is the dominant eigenvalue of every mode, so a
  // first-axis start rides the envelope with equality and rho = 1.
  Eigen::MatrixXd A1 = (Eigen::MatrixXd(2, 2) << -0.5, 0, 0, -2).finished();
  Eigen::MatrixXd A2 = (Eigen::MatrixXd(2, 2) << -1.5, 0, 0, -3).finished();
  Ensemble ens = Ensemble::from_matrices({A1, A2});
  Digraph ring(2, {{1, 2}, {2, 1}});
  SwitchingSignal sig;
  std::mt19937_64 rng(111);
  std::uniform_real_distribution<double> dur(0.3, 1.5);
  for (int i = 0; i < 12; ++i) {
    sig.modes.push_back(1 + (i % 2));
    sig.durations.push_back(dur(rng));
  }
  EnvelopeSeries env = envelope(ens, ring, sig);
  double acc = 0.0;
  for (int m = 0; m < sig.length(); ++m) {
    CHECK(env.log_a[m] == doctest::Approx(acc).epsilon(1e-12));
    double rate = sig.modes[m] == 1 ? -0.5 : -1.5;
    acc += rate * sig.durations[m];
  }
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.0;
  Trajectory tr = simulate(ens, sig, x0, 1);
  for (int m = 0; m < sig.length(); ++m) {
    CHECK(tr.switch_log_norms[m] == doctest::Approx(env.log_a[m]).epsilon(1e-10));
  }
  EnvelopeCheck chk = envelope_check(ens, ring, sig, x0);
  CHECK(chk.ok);
  CHECK(chk.max_log_excess <= 1e-10);
}

TEST_CASE("envelope bounds random stable trajectories") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    StableInstance inst = random_stable_instance(rng, 4, 3);
    SwitchingSignal sig = random_signal(rng, inst.graph, 15);
    int n = inst.ensemble.dimension();
    Eigen::VectorXd x0 = Eigen::VectorXd::Random(n);
    if (x0.norm() < 1e-6) x0.setOnes();
    EnvelopeCheck chk = envelope_check(inst.ensemble, inst.graph, sig, x0);
    CHECK(chk.ok);
    CHECK(chk.first_violation == -1);
  }
}

TEST_CASE("envelope terms redistribute along the decomposition exactly") {
  std::mt19937_64 rng(3141);
  for (int trial = 0; trial < 40; ++trial) {
    StableInstance inst = random_stable_instance(rng, 4, 3);
    SwitchingSignal sig = random_signal(rng, inst.graph, 18);
    EnvelopeSeries env = envelope(inst.ensemble, inst.graph, sig);
    REQUIRE(env.log_a.size() == static_cast<std::size_t>(sig.length()));
    double sum = env.residual_log_cost;
    for (const LoopTerm& term : env.loop_terms) {
      CHECK(term.exact_term ==
            doctest::Approx(term.cost_sum + term.rate_time_sum).epsilon(1e-12));
      sum += term.exact_term;
      // All-stable loops also carry the certification bound, which dominates
      // the exact rate term.
      REQUIRE(term.bound_term.has_value());
      const LoopInstance& li = env.decomposition.instances[term.instance_index - 1];
      double lambda_min = 1e300;
      for (const Edge& e : li.loop.edges())
        lambda_min = std::min(lambda_min, inst.ensemble.at(e.from).decay_rate);
      CHECK(*term.bound_term ==
            doctest::Approx(term.cost_sum - lambda_min * li.total_time).epsilon(1e-9));
      CHECK(*term.bound_term >= term.exact_term - 1e-9);
    }
    CHECK(env.log_a.back() == doctest::Approx(sum).epsilon(1e-10));
  }
}

TEST_CASE("envelope needs usable bases everywhere and an admissible signal") {
  Eigen::MatrixXd J(2, 2);
  J << -1, 1, 0, -1;
  Eigen::MatrixXd S(2, 2);
  S << -2, 0, 0, -3;
  Ensemble ens = Ensemble::from_matrices({S, J});
  Digraph ring(2, {{1, 2}, {2, 1}});
  SwitchingSignal sig{{1, 2, 1}, {1, 1, 1}};
  CHECK_THROWS_AS((void)envelope(ens, ring, sig), Error);
  try {
    (void)envelope(ens, ring, sig);
  } catch (const Error& e) {
    CHECK(e.code() == "DefectiveEndpoint");
  }
  ens.at(2).override_P = Eigen::MatrixXcd::Identity(2, 2);
  CHECK_NOTHROW((void)envelope(ens, ring, sig));

  SwitchingSignal off{{1, 1}, {1, 1}};
  CHECK_THROWS_AS((void)envelope(ens, ring, off), Error);
}

TEST_CASE("envelope check rejects a zero start") {
  Ensemble ens = Ensemble::from_matrices({(Eigen::MatrixXd(1, 1) << -1).finished()});
  Digraph g(1, {});
  SwitchingSignal sig{{1}, {1.0}};
  CHECK_THROWS_AS((void)envelope_check(ens, g, sig, Eigen::VectorXd::Zero(1)), Error);
}

TEST_CASE("least squares slope recovers exact lines") {
  std::vector<double> t{0, 1, 2, 3, 4};
  std::vector<double> y{5, 3, 1, -1, -3};
  CHECK(least_squares_slope(t, y, 0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(least_squares_slope(t, y, 2) == doctest::Approx(-2.0).epsilon(1e-12));
  std::vector<double> flat{1, 1, 1};
  std::vector<double> tf{0, 1, 2};
  CHECK(least_squares_slope(tf, flat, 0) == doctest::Approx(0.0));
  CHECK(least_squares_slope(tf, flat, 2) == 0.0);  // one point, no trend
  CHECK_THROWS_AS((void)least_squares_slope(tf, flat, 3), Error);
  CHECK_THROWS_AS((void)least_squares_slope(tf, {1.0, 2.0}, 0), Error);
}

TEST_CASE("monte carlo validation accepts a certified loop dwell instance") {
  std::mt19937_64 rng(60);
  StableInstance inst = random_stable_instance(rng, 4, 2);
  auto loops = enumerate_simple_loops(inst.graph);
  REQUIRE_FALSE(loops.empty());
  std::vector<double> tau(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) {
    double nu = nu_loop(inst.ensemble, loops[i]);
    tau[i] = std::max(1.2 * nu, 0.05);
  }
  StabilityCertificate cert = certify_simple_loop_dwell(inst.ensemble, inst.graph, tau);
  REQUIRE(cert.verdict == Verdict::Certified);
  ValidationReport rep = validate_certificate(inst.ensemble, inst.graph, cert,
                                              SimpleLoopDwellSpec{tau}, std::nullopt, 20, 60, 17);
  CHECK(rep.pass);
  CHECK(rep.trials == 20);
  CHECK(rep.slopes.size() == 20);
  CHECK(rep.max_slope < 1e-6);
  CHECK(rep.max_terminal_log_ratio < 0.0);

  // Only Certified verdicts are eligible.
  StabilityCertificate not_cert = cert;
  not_cert.verdict = Verdict::NotCertified;
  CHECK_THROWS_AS((void)validate_certificate(inst.ensemble, inst.graph, not_cert,
                                             SimpleLoopDwellSpec{tau}, std::nullopt, 5, 20, 1),
                  Error);
  CHECK_THROWS_AS((void)validate_certificate(inst.ensemble, inst.graph, cert,
                                             SimpleLoopDwellSpec{tau}, std::nullopt, 0, 20, 1),
                  Error);
  CHECK_THROWS_AS((void)validate_certificate(inst.ensemble, inst.graph, cert,
                                             SimpleLoopDwellSpec{tau}, std::nullopt, 5, 0, 1),
                  Error);
}
