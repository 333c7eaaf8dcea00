#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "cournot/distributions.hpp"
#include "cournot/linalg.hpp"
#include "cournot/optim.hpp"
#include "cournot/quadrature.hpp"
#include "cournot/rng.hpp"
#include "cournot/special.hpp"
#include "helpers.hpp"

using Catch::Approx;
using namespace cournot;

TEST_CASE("incomplete beta matches closed forms") {
    // I_x(1,1) = x, I_x(2,1) = x^2, I_x(1,2) = 2x - x^2, I_x(2,2) = 3x^2 - 2x^3
    for (double x : {0.05, 0.3, 0.5, 0.77, 0.99}) {
        CHECK(inc_beta(1.0, 1.0, x) == Approx(x).margin(1e-14));
        CHECK(inc_beta(2.0, 1.0, x) == Approx(x * x).margin(1e-14));
        CHECK(inc_beta(1.0, 2.0, x) == Approx(2.0 * x - x * x).margin(1e-14));
        CHECK(inc_beta(2.0, 2.0, x) == Approx(3.0 * x * x - 2.0 * x * x * x).margin(1e-14));
    }
    CHECK(inc_beta(2.0, 2.0, 0.25) == Approx(0.15625).margin(1e-15));
    // symmetry point
    CHECK(inc_beta(0.6, 0.6, 0.5) == Approx(0.5).margin(1e-13));
    CHECK(inc_beta(3.7, 3.7, 0.5) == Approx(0.5).margin(1e-13));
}

TEST_CASE("incomplete beta inverse round-trips") {
    const double shapes[][2] = {{0.6, 0.6}, {0.8, 0.9}, {2.0, 2.0}, {5.0, 1.0}, {1.3512, 1.3512}};
    for (const auto& ab : shapes) {
        for (double p : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999}) {
            double x = inc_beta_inv(ab[0], ab[1], p);
            CHECK(inc_beta(ab[0], ab[1], x) == Approx(p).margin(1e-12));
        }
    }
}

TEST_CASE("normal cdf and quantile") {
    CHECK(normal_cdf(0.0) == Approx(0.5).margin(1e-16));
    CHECK(normal_cdf(1.96) == Approx(0.9750021048517795).margin(1e-12));
    CHECK(normal_quantile(0.975) == Approx(1.9599639845400545).margin(1e-12));
    CHECK(normal_quantile(0.5) == Approx(0.0).margin(1e-15));
    for (double z = -4.5; z <= 4.5; z += 0.37)
        CHECK(normal_quantile(normal_cdf(z)) == Approx(z).margin(1e-11));
    // far tails: p loses resolution near 1, so only absolute accuracy ~1e-6
    for (double z = -7.5; z <= 7.5; z += 1.1)
        CHECK(normal_quantile(normal_cdf(z)) == Approx(z).margin(1e-6));
}

TEST_CASE("beta spec closed-form oracles") {
    BetaSpec b22{2.0, 2.0, 0.0, 1.0, 1.0, 0.0};
    b22.validate();
    CHECK(density(b22, 0.5) == Approx(1.5).margin(1e-13));
    CHECK(cdf(b22, 0.25) == Approx(0.15625).margin(1e-13));
    CHECK(quantile(b22, 0.5) == Approx(0.5).margin(1e-12));
    CHECK(mean(b22) == Approx(0.5).margin(1e-13));
    CHECK(variance(b22) == Approx(0.05).margin(1e-4));

    BetaSpec b89{0.8, 0.9, 0.0, 1.0, 1.0, 0.0};
    CHECK(mean(b89) == Approx(8.0 / 17.0).margin(1e-13));

    // affine map: X = 1 + 5 B
    BetaSpec mapped{0.8, 0.9, 0.0, 1.0, 5.0, 1.0};
    CHECK(mean(mapped) == Approx(1.0 + 5.0 * 8.0 / 17.0).margin(1e-12));
    CHECK(cdf(mapped, 1.0 + 5.0 * 0.3) == Approx(inc_beta(0.8, 0.9, 0.3)).margin(1e-13));
    CHECK(density(mapped, 2.5) == Approx(density(b89, 0.3) / 5.0).margin(1e-13));
}

TEST_CASE("truncated beta spec") {
    // symmetric shape, symmetric window: mean is the untruncated center
    BetaSpec sym{0.6, 0.6, 0.025, 0.975, 5.0, 5.0};
    sym.validate();
    CHECK(mean(sym) == Approx(7.5).margin(1e-10));
    CHECK(cdf(sym, sym.support_lo()) == Approx(0.0).margin(1e-15));
    CHECK(cdf(sym, sym.support_hi()) == Approx(1.0).margin(1e-15));
    CHECK(quantile(sym, 0.0) == Approx(sym.support_lo()).margin(1e-12));
    CHECK(quantile(sym, 1.0) == Approx(sym.support_hi()).margin(1e-12));

    // asymmetric: closed-form truncated mean against quantile quadrature
    BetaSpec asym{0.8, 0.9, 0.025, 0.975, 5.0, 5.0};
    double m_quad = expect_by_quantile([](double x) { return x; },
                                       [&](double a) { return quantile(asym, a); }, 128);
    CHECK(mean(asym) == Approx(m_quad).margin(1e-8));

    // density renormalizes on the window
    double mass = integrate([&](double x) { return density(asym, x); },
                            asym.support_lo(), asym.support_hi(), 256);
    CHECK(mass == Approx(1.0).margin(1e-8));

    // cdf/quantile round trip
    for (double p : {0.01, 0.3, 0.5, 0.77, 0.99})
        CHECK(cdf(asym, quantile(asym, p)) == Approx(p).margin(1e-11));

    // degenerate window rejected once its mass drops below the floor
    BetaSpec bad{2.0, 2.0, 0.7, 0.7 + 1e-14, 1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), invalid_input);
}

TEST_CASE("beta spec draws invert the cdf uniformly") {
    BetaSpec spec{0.8, 0.9, 0.025, 0.975, 5.0, 5.0};
    auto draws = testutil::draw_many([&](Stream& r) { return cdf(spec, draw(spec, r)); },
                                     100000, 20260817u);
    CHECK(testutil::ks_uniform(draws) < testutil::ks_crit(draws.size()));
}

TEST_CASE("left-truncated normal closed forms") {
    TruncNormalSpec half{0.0, 1.0, 0.0};  // half-normal
    half.validate();
    CHECK(density(half, 0.5) == Approx(2.0 * normal_pdf(0.5)).margin(1e-14));
    CHECK(mean(half) == Approx(std::sqrt(2.0 / M_PI)).margin(1e-13));
    CHECK(variance(half) == Approx(1.0 - 2.0 / M_PI).margin(1e-13));
    CHECK(quantile(half, 0.5) == Approx(normal_quantile(0.75)).margin(1e-12));

    TruncNormalSpec s{300.0, 800.0, 200.0};
    s.validate();
    for (double p : {0.001, 0.1, 0.5, 0.9, 0.999})
        CHECK(cdf(s, quantile(s, p)) == Approx(p).margin(1e-12));
    double m_quad = expect_by_quantile([](double x) { return x; },
                                       [&](double a) { return quantile(s, a); }, 256);
    CHECK(mean(s) == Approx(m_quad).margin(1e-3));
    double mass = integrate([&](double x) { return density(s, x); }, 200.0,
                            300.0 + 12.0 * s.sigma(), 256);
    CHECK(mass == Approx(1.0).margin(1e-9));
    // draws respect the truncation
    Stream rng(7u);
    for (int i = 0; i < 1000; ++i) CHECK(draw(s, rng) >= 200.0);
}

TEST_CASE("common shock law") {
    WGivenUSpec w{5.0, 0.001, 0.001, 0.025, 0.975};
    w.validate();
    CHECK(w.shape(300.0) == Approx(std::exp(0.001 + 0.3)).margin(1e-15));
    CHECK(w.support_lo() == Approx(-4.75).margin(1e-12));
    CHECK(w.support_hi() == Approx(4.75).margin(1e-12));

    BetaSpec at300 = w.at(300.0);
    at300.validate();
    CHECK(at300.a == at300.b);
    CHECK(mean(at300) == Approx(0.0).margin(1e-12));
    CHECK(density(at300, 1.3) == Approx(density(at300, -1.3)).margin(1e-12));

    WGivenUSpec asym_trunc{1.0, 0.0, 0.0, 0.1, 0.8};
    CHECK_THROWS_AS(asym_trunc.validate(), invalid_input);
}

TEST_CASE("characteristic function from quantile table") {
    // uniform on [-1, 1]: phi(z) = sin(z) / z, quantile is linear so the
    // per-segment closed form is exact up to rounding
    BetaSpec unif{1.0, 1.0, 0.0, 1.0, 2.0, -1.0};
    for (double z : {0.3, 1.0, 3.7, 10.0, 50.0}) {
        auto phi = char_fn(unif, z);
        CHECK(phi.real() == Approx(std::sin(z) / z).margin(1e-9));
        CHECK(phi.imag() == Approx(0.0).margin(1e-9));
    }
    // symmetric law: imaginary part vanishes
    BetaSpec b22{2.0, 2.0, 0.0, 1.0, 2.0, -1.0};
    for (double z : {0.5, 2.0, 8.0})
        CHECK(char_fn(b22, z).imag() == Approx(0.0).margin(1e-9));
}

TEST_CASE("gil-pelaez inversion recovers the uniform cdf") {
    auto grid = make_char_fn_grid(
        [](double z) { return std::complex<double>(std::sin(z) / z, 0.0); }, 0.01, 400.0);
    grid.validate();
    CHECK_FALSE(std::abs(grid.phi.back()) > default_config().gp_tail_tol);

    std::vector<double> xs;
    for (double x = -1.2; x <= 1.201; x += 0.05) xs.push_back(x);
    auto res = gil_pelaez_invert(grid, xs);
    CHECK_FALSE(res.tail_warning);
    double max_err = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        double truth = std::min(1.0, std::max(0.0, 0.5 * (xs[j] + 1.0)));
        max_err = std::max(max_err, std::fabs(res.cdf[j] - truth));
    }
    CHECK(max_err < 1e-3);
    for (std::size_t j = 1; j < res.cdf.size(); ++j) CHECK(res.cdf[j] >= res.cdf[j - 1]);
}

TEST_CASE("gil-pelaez inversion recovers a beta cdf from its tabulated phi") {
    BetaSpec spec{2.0, 2.0, 0.0, 1.0, 2.0, -1.0};
    auto grid = make_char_fn_grid([&](double z) { return char_fn(spec, z, 1024); }, 0.01, 400.0);
    std::vector<double> xs;
    for (double x = -0.95; x <= 0.951; x += 0.05) xs.push_back(x);
    auto res = gil_pelaez_invert(grid, xs);
    double max_err = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j)
        max_err = std::max(max_err, std::fabs(res.cdf[j] - cdf(spec, xs[j])));
    CHECK(max_err < 1e-3);
}

TEST_CASE("gil-pelaez degenerate law gives a sharp step") {
    auto grid = make_char_fn_grid([](double) { return std::complex<double>(1.0, 0.0); },
                                  0.01, 400.0);
    auto res = gil_pelaez_invert(grid, {-0.05, -0.02, 0.02, 0.05});
    CHECK(res.tail_warning);  // point mass never decays
    CHECK(res.cdf[0] < 0.02);
    CHECK(res.cdf[3] > 0.98);
    for (std::size_t j = 1; j < res.cdf.size(); ++j) CHECK(res.cdf[j] >= res.cdf[j - 1]);
}

TEST_CASE("gil-pelaez warns when the grid is truncated too early") {
    auto grid = make_char_fn_grid(
        [](double z) { return std::complex<double>(std::sin(z) / z, 0.0); }, 0.01, 5.0);
    auto res = gil_pelaez_invert(grid, {0.0});
    CHECK(res.tail_warning);
}

TEST_CASE("rng streams are deterministic and distinct") {
    Stream a(42u), b(42u);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Stream c(1u, {2u, 3u}), d(1u, {3u, 2u}), e(1u, {2u, 4u});
    bool differ_cd = false, differ_ce = false;
    for (int i = 0; i < 16; ++i) {
        auto vc = c.next_u64();
        if (vc != d.next_u64()) differ_cd = true;
        if (vc != e.next_u64()) differ_ce = true;
    }
    CHECK(differ_cd);
    CHECK(differ_ce);
}

TEST_CASE("rng uniforms pass a ks test and stay in range") {
    auto u = testutil::draw_many([](Stream& r) { return r.uniform(); }, 100000, 99u);
    CHECK(testutil::ks_uniform(u) < testutil::ks_crit(u.size()));
    Stream r(5u);
    for (int i = 0; i < 1000; ++i) {
        double x = r.uniform(2.0, 3.0);
        CHECK(x >= 2.0);
        CHECK(x <= 3.0);
    }
}

TEST_CASE("gauss-legendre rules") {
    const auto& r = gauss_legendre(64);
    double wsum = 0.0;
    for (double w : r.w) wsum += w;
    CHECK(wsum == Approx(2.0).margin(1e-13));
    for (int i = 0; i < 32; ++i) CHECK(r.x[i] == Approx(-r.x[63 - i]).margin(1e-14));

    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, 2) ==
          Approx(1.0 / 3.0).margin(1e-14));
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI, 20) ==
          Approx(2.0).margin(1e-12));
}

TEST_CASE("linear algebra solves and determinants") {
    Matrix m(3);
    m(0, 0) = 4; m(0, 1) = 1; m(0, 2) = 0;
    m(1, 0) = 1; m(1, 1) = 3; m(1, 2) = 1;
    m(2, 0) = 0; m(2, 1) = 1; m(2, 2) = 2;
    auto x = solve(m, {5.0, 10.0, 7.0});
    // residual check
    CHECK(4 * x[0] + x[1] == Approx(5.0).margin(1e-12));
    CHECK(x[0] + 3 * x[1] + x[2] == Approx(10.0).margin(1e-12));
    CHECK(x[1] + 2 * x[2] == Approx(7.0).margin(1e-12));

    Matrix d2(2);
    d2(0, 0) = 2; d2(0, 1) = 1; d2(1, 0) = 1; d2(1, 1) = 3;
    CHECK(determinant(d2) == Approx(5.0).margin(1e-13));

    Matrix perm(2);
    perm(0, 0) = 0; perm(0, 1) = 1; perm(1, 0) = 1; perm(1, 1) = 0;
    CHECK(determinant(perm) == Approx(-1.0).margin(1e-15));

    Matrix sing(2);
    sing(0, 0) = 1; sing(0, 1) = 2; sing(1, 0) = 2; sing(1, 1) = 4;
    CHECK_THROWS_AS(determinant(sing), numeric_error);
}

TEST_CASE("golden section finds a quadratic minimum") {
    double x = golden_section_min([](double t) { return (t - 2.3) * (t - 2.3); }, 0.0, 5.0);
    CHECK(x == Approx(2.3).margin(1e-8));
}

TEST_CASE("nelder-mead minimizes rosenbrock") {
    auto rosen = [](const std::vector<double>& p) {
        double a = 1.0 - p[0], b = p[1] - p[0] * p[0];
        return a * a + 100.0 * b * b;
    };
    auto r = nelder_mead(rosen, {-1.2, 1.0});
    CHECK(r.converged);
    CHECK(r.value < 1e-6);
    CHECK(r.x[0] == Approx(1.0).margin(1e-2));
    CHECK(r.x[1] == Approx(1.0).margin(1e-2));
}

TEST_CASE("box-constrained minimization") {
    BoxTransform box{{0.0, 0.0}, {1.0, 1.0}};
    box.validate();
    auto y = box.to_unbounded({0.3, 0.9});
    auto back = box.to_bounded(y);
    CHECK(back[0] == Approx(0.3).margin(1e-10));
    CHECK(back[1] == Approx(0.9).margin(1e-10));

    auto quad = [](const std::vector<double>& p) {
        return (p[0] - 0.7) * (p[0] - 0.7) + (p[1] - 0.2) * (p[1] - 0.2);
    };
    auto r = minimize_box(quad, {0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0});
    CHECK(r.x[0] == Approx(0.7).margin(1e-4));
    CHECK(r.x[1] == Approx(0.2).margin(1e-4));

    // target outside the box: solution pushes to the boundary
    auto off = [](const std::vector<double>& p) { return (p[0] - 2.0) * (p[0] - 2.0); };
    auto rb = minimize_box(off, {0.5}, {0.0}, {1.0});
    CHECK(rb.x[0] > 0.99);
}
