#include <cmath>
#include <vector>

#include "doctest.h"
#include "sps/analytic.hpp"

using namespace sps;

namespace {

// Independent transcription of the fully connected fixed-point map, used
// only by the bisection oracle below.
double oracle_rhs(double p_keep, double alpha, double n_rbgs, double n_sensed, double prr) {
    const double n_a = n_rbgs - (1.0 + prr) * n_sensed / 2.0;
    return (p_keep + std::pow(1.0 - (1.0 - p_keep) / (10.0 * alpha * n_a), n_sensed)) / (1.0 + p_keep);
}

// Root of x - rhs(x) on the feasible interval, by plain bisection.
double bisect_prr(double p_keep, double alpha, double n_rbgs, double n_sensed) {
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid - oracle_rhs(p_keep, alpha, n_rbgs, n_sensed, mid) > 0.0) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("SpsConfig derives alpha, counter and RBG count") {
    const auto cfg = SpsConfig::make(0.0, 5, 1.0, 10.0);
    CHECK(cfg.alpha() == doctest::Approx(1.0));
    CHECK(cfg.rc_init() == 10);
    CHECK(cfg.num_rbgs() == 500);
    CHECK(cfg.slots_per_period_exact() == 100u);

    const auto fast = SpsConfig::make(0.0, 5, 1.0, 20.0);
    CHECK(fast.alpha() == doctest::Approx(2.0));
    CHECK(fast.rc_init() == 20);

    // 1000/tau below 20 saturates alpha at 5.
    CHECK(SpsConfig::make(0.0, 1, 1.0, 100.0).alpha() == doctest::Approx(5.0));
}

TEST_CASE("SpsConfig rejects invalid parameters") {
    CHECK_THROWS_AS(SpsConfig::make(-0.1, 5), ConfigError);
    CHECK_THROWS_AS(SpsConfig::make(1.1, 5), ConfigError);
    CHECK_THROWS_AS(SpsConfig::make(0.5, 0), ConfigError);
    CHECK_THROWS_AS(SpsConfig::make(0.5, 5, 0.0, 10.0), ConfigError);
    CHECK_THROWS_AS(SpsConfig::make(0.5, 5, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(SpsConfig::make(0.5, 5, 1.0, NAN), ConfigError);
}

TEST_CASE("hd_probability") {
    CHECK(hd_probability(SpsConfig::make(0.0, 5, 1.0, 10.0)) == doctest::Approx(0.01));
    CHECK(hd_probability(SpsConfig::make(0.0, 5, 1.0, 20.0)) == doctest::Approx(0.02));
}

TEST_CASE("num_rbgs") {
    CHECK(num_rbgs(SpsConfig::make(0.0, 5, 1.0, 10.0)) == 500);
    CHECK(num_rbgs(SpsConfig::make(0.0, 15, 1.0, 10.0)) == 1500);
    CHECK_THROWS_AS(SpsConfig::make(0.0, 1, 1.0, 3.0), ConfigError);  // 333.3...
}

TEST_CASE("available_rbgs") {
    CHECK(available_rbgs(500, 100, 1.0) == 400.0);
    CHECK(available_rbgs(500, 0, 0.37) == 500.0);
    CHECK_THROWS_AS(available_rbgs(500, 1000, 1.0), ModelError);
    try {
        available_rbgs(500, 1000, 1.0);
    } catch (const ModelError& e) {
        CHECK(e.kind() == ModelError::Kind::Overload);
    }
}

TEST_CASE("p_rs closed form") {
    const auto keep_all = SpsConfig::make(1.0, 5);
    CHECK(p_rs_closed_form(keep_all, 250, 123.0) == 0.0);
    CHECK(p_rs_closed_form(SpsConfig::make(0.3, 5), 0, 400.0) == 0.0);
    // 1 - (1 - 1/4000)^100, evaluated at 40 digits.
    CHECK(p_rs_closed_form(SpsConfig::make(0.0, 5), 100, 400.0) ==
          doctest::Approx(0.0246931363184478).epsilon(1e-12));
    CHECK_THROWS_AS(p_rs_closed_form(SpsConfig::make(0.0, 5), 10, 0.0), ModelError);
    CHECK_THROWS_AS(p_rs_closed_form(SpsConfig::make(0.0, 5), 10, 0.05), ModelError);
}

TEST_CASE("p_rs binomial sum") {
    const auto cfg = SpsConfig::make(0.0, 5);
    CHECK(p_rs_binomial_sum(cfg, 0, 400.0) == 0.0);
    // One sensed vehicle: reselects with 1/10, then hits with 1/10.
    CHECK(p_rs_binomial_sum(cfg, 1, 10.0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(std::abs(p_rs_binomial_sum(cfg, 100, 400.0) - p_rs_closed_form(cfg, 100, 400.0)) <= 1e-12);
    CHECK_THROWS_AS(p_rs_binomial_sum(cfg, 3, 0.5), ModelError);
}

TEST_CASE("binomial sum equals the closed form over the parameter grid") {
    for (const double p : {0.0, 0.2, 0.5, 0.8, 1.0})
        for (const std::size_t n : {1u, 10u, 100u, 400u})
            for (const double n_a : {50.0, 400.0, 1000.0}) {
                const auto cfg = SpsConfig::make(p, 5);
                CAPTURE(p);
                CAPTURE(n);
                CAPTURE(n_a);
                CHECK(std::abs(p_rs_binomial_sum(cfg, n, n_a) - p_rs_closed_form(cfg, n, n_a)) <= 1e-10);
            }
}

TEST_CASE("prr_fcn fixed point") {
    const auto cfg0 = SpsConfig::make(0.0, 5);
    const auto cfg8 = SpsConfig::make(0.8, 5);

    CHECK(prr_fcn(cfg0, 0) == 1.0);
    CHECK(prr_fcn(SpsConfig::make(1.0, 5), 300) == 1.0);

    // Frozen from a 40-digit bisection of the same equation.
    CHECK(prr_fcn(cfg0, 100) == doctest::Approx(0.975381687568123).epsilon(1e-9));
    CHECK(prr_fcn(cfg8, 400) == doctest::Approx(0.960309491220257).epsilon(1e-9));
    CHECK(prr_fcn(cfg0, 400) == doctest::Approx(0.762425190726723).epsilon(1e-9));
    CHECK(prr_fcn(cfg8, 400) - prr_fcn(cfg0, 400) == doctest::Approx(0.197884300494).epsilon(1e-8));

    const auto sol = solve_prr_fcn(cfg0, 300);
    CHECK(sol.residual <= 1e-10);
    CHECK(std::abs(sol.prr - prr_fcn_rhs(cfg0, 300, sol.prr)) <= 1e-9);
}

TEST_CASE("prr_fcn agrees with bisection over the tabulated grid") {
    for (const double p : {0.0, 0.8})
        for (const int ns : {5, 10, 15})
            for (const std::size_t n : {50u, 100u, 159u, 200u, 300u, 400u}) {
                const auto cfg = SpsConfig::make(p, ns);
                const double oracle =
                    bisect_prr(p, cfg.alpha(), static_cast<double>(cfg.num_rbgs()), static_cast<double>(n));
                CAPTURE(p);
                CAPTURE(ns);
                CAPTURE(n);
                CHECK(std::abs(prr_fcn(cfg, n) - oracle) <= 1e-8);
            }
}

TEST_CASE("prr_fcn errors") {
    // N_a = N_r - N_sen <= 0 at the first iterate.
    CHECK_THROWS_AS(prr_fcn(SpsConfig::make(0.0, 1), 200), ModelError);

    FixedPointOptions starved;
    starved.max_iterations = 1;
    try {
        solve_prr_fcn(SpsConfig::make(0.0, 5), 400, starved);
        FAIL("expected an iteration error");
    } catch (const ModelError& e) {
        CHECK(e.kind() == ModelError::Kind::Iteration);
        CHECK(e.residual() > 0.0);
    }
}

TEST_CASE("prr_fcn monotonicity on the tabulated grid") {
    for (const int ns : {5, 10, 15})
        for (const double p : {0.0, 0.8}) {
            double prev = 1.0;
            for (const std::size_t n : {50u, 100u, 200u, 300u, 400u}) {
                const double v = prr_fcn(SpsConfig::make(p, ns), n);
                CHECK(v <= prev);
                prev = v;
            }
        }
    for (const std::size_t n : {100u, 200u, 300u, 400u}) {
        double prev = 0.0;
        for (int k = 0; k <= 10; ++k) {
            const double v = prr_fcn(SpsConfig::make(k / 10.0, 5), n);
            CHECK(v >= prev);
            prev = v;
        }
        prev = 0.0;
        for (const int ns : {5, 10, 15}) {
            const double v = prr_fcn(SpsConfig::make(0.0, ns), n);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("prr_rsc") {
    CHECK(prr_rsc(0.0, 400.0, 0.93) == doctest::Approx(0.93));
    CHECK(prr_rsc(250.0, 400.0, 1.0) == 1.0);
    CHECK(prr_rsc(400.0, 400.0, 0.9549) == doctest::Approx(0.97745).epsilon(1e-12));
    CHECK_THROWS_AS(prr_rsc(-1.0, 400.0, 0.9), ModelError);
    CHECK_THROWS_AS(prr_rsc(400.5, 400.0, 0.9), ModelError);
}

TEST_CASE("PcnParams derives the sensed count") {
    CHECK(PcnParams{200.0, 0.4}.n_sensed() == 159);
    CHECK_THROWS_AS((PcnParams{1.0, 0.4}.n_sensed()), ConfigError);
    CHECK_THROWS_AS((PcnParams{201.3, 0.4}.n_sensed()), ConfigError);
}

TEST_CASE("prr_pcn") {
    const auto cfg = SpsConfig::make(0.0, 5);
    const PcnParams road{200.0, 0.4};
    CHECK(prr_pcn(cfg, road, 0.0) == doctest::Approx(prr_fcn(cfg, 159)).epsilon(1e-15));
    CHECK(prr_fcn(cfg, 159) == doctest::Approx(0.954899582577525).epsilon(1e-9));
    CHECK(hidden_vehicles(road, 400.0) == doctest::Approx(80.0));
    // Chained evaluation at 40 digits: rsc 0.977449791288762 x hidden 0.826565363247272.
    CHECK(prr_pcn(cfg, road, 400.0) == doctest::Approx(0.807926141792566).epsilon(1e-9));

    CHECK(prr_pcn(SpsConfig::make(1.0, 5), road, 0.0) == 1.0);
    CHECK_THROWS_AS(prr_pcn(cfg, road, 401.0), ModelError);
    // N_r - N_sen/2 <= 1.
    CHECK_THROWS_AS(prr_pcn(SpsConfig::make(0.0, 1), PcnParams{250.0, 0.4}, 100.0), ModelError);
}

TEST_CASE("prr_pcn bounded by prr_rsc and non-increasing in distance") {
    for (const double p : {0.0, 0.8})
        for (const int ns : {5, 10, 15}) {
            const auto cfg = SpsConfig::make(p, ns);
            const PcnParams road{200.0, 0.4};
            const double fcn = prr_fcn(cfg, road.n_sensed());
            double prev = 1.0;
            for (double d = 0.0; d <= 400.0; d += 12.5) {
                const double pcn = prr_pcn(cfg, road, d);
                const double rsc = prr_rsc(d, 400.0, fcn);
                CHECK(pcn <= rsc);
                CHECK(rsc <= 1.0);
                CHECK(pcn >= 0.0);
                CHECK(pcn <= prev);
                prev = pcn;
            }
        }
}

TEST_CASE("throughput") {
    const auto cfg = SpsConfig::make(0.0, 5);
    CHECK(throughput(cfg, 1.0) == doctest::Approx(9.9));
    CHECK(throughput(cfg, 0.0) == 0.0);
    CHECK(throughput(cfg, 0.8079) == doctest::Approx(7.99821).epsilon(1e-9));
    CHECK_THROWS_AS(throughput(cfg, 1.2), ModelError);
    for (double prr = 0.0; prr < 1.0; prr += 0.05) CHECK(throughput(cfg, prr) < 9.9);
}

TEST_CASE("sweep") {
    const SweepTemplate fcn{SpsConfig::make(0.8, 5), 100, std::nullopt};
    const std::vector<double> n_grid{100, 200, 300, 400};
    const auto pts = sweep(fcn, SweepKind::NSensed, n_grid);
    REQUIRE(pts.size() == 4);
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].throughput < pts[i - 1].throughput);
    CHECK(pts[0].abscissa == 100.0);

    const SweepTemplate pcn{SpsConfig::make(0.0, 5), 0, PcnParams{200.0, 0.4}};
    const std::vector<double> d_grid{0, 100, 200, 300, 400};
    const auto curve = sweep(pcn, SweepKind::Distance, d_grid);
    REQUIRE(curve.size() == 5);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].prr <= curve[i - 1].prr);

    CHECK(sweep(fcn, SweepKind::PKeep, std::vector<double>{}).empty());

    const auto ps = sweep(fcn, SweepKind::PKeep, std::vector<double>{0.0, 0.5});
    CHECK(ps[1].prr > ps[0].prr);
    const auto ns = sweep(fcn, SweepKind::Subchannels, std::vector<double>{5, 15});
    CHECK(ns[1].prr > ns[0].prr);
}

TEST_CASE("sweep tags the failing grid point") {
    const SweepTemplate fcn{SpsConfig::make(0.0, 1), 0, std::nullopt};
    try {
        sweep(fcn, SweepKind::NSensed, std::vector<double>{10, 250});
        FAIL("expected overload");
    } catch (const ModelError& e) {
        CHECK(e.kind() == ModelError::Kind::Overload);
        CHECK(std::string(e.what()).find("N_sen=250") != std::string::npos);
    }
    CHECK_THROWS_AS(sweep(fcn, SweepKind::Distance, std::vector<double>{10}), ConfigError);
}
