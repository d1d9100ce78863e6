#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "bimode/states.hpp"

using namespace bimode;
using std::numbers::pi;

static double binom(int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

TEST_CASE("Fock and coherent states") {
    auto s = build_space(2, 30, 30);
    auto f = fock(s, 1, 2, 3);
    CHECK(f.amp[s.index(1, 2, 3)] == cd(1));
    auto c = coherent(s, cd(1.2, -0.7), cd(0.5, 0.1));
    CHECK(c.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.tail_norm < kTailTol);
    auto n1 = mode_op(s, 1, Ladder::number);
    CHECK(expectation(c, n1).real() == doctest::Approx(std::norm(cd(1.2, -0.7))).epsilon(1e-9));
    CHECK(variance(c, n1) == doctest::Approx(std::norm(cd(1.2, -0.7))).epsilon(1e-8));
    CHECK(expectation(c, mode_op(s, 2, Ladder::annihilate)).real() == doctest::Approx(0.5).epsilon(1e-9));
    // |alpha|^2 = 10 does not fit in cutoff 12
    CHECK_THROWS_WITH(coherent(build_space(2, 12, 0), std::sqrt(10.0), 0.0), doctest::Contains("tail"));
}

TEST_CASE("SU(2) coherent states") {
    auto s = build_space(2, 12, 12);
    auto z = su2_coherent(s, 0.0, 8);
    CHECK(std::abs(z.amp[s.index(0, 0, 8)]) == doctest::Approx(1.0));
    for (cd tau : {cd(0.4, 0.0), cd(1.0, 0.0), cd(-0.3, 0.8), cd(2.0, -1.0)}) {
        const int N = 9;
        auto psi = su2_coherent(s, tau, N);
        double pre = std::pow(1 + std::norm(tau), -N / 2.0);
        for (int k = 0; k <= N; ++k) CHECK(std::abs(psi.amp[s.index(0, k, N - k)] - pre * std::sqrt(binom(N, k)) * std::pow(tau, k)) < 1e-12);
        auto Ntot = mode_op(s, 1, Ladder::number) + mode_op(s, 2, Ladder::number);
        CHECK(variance(psi, Ntot) < 1e-12);
    }
    // tau = 1 is the Fock state along the 45 degree axis, tau = i a circular state
    CHECK(fidelity(su2_coherent(s, 1.0, 10), rotated_fock(s, 10, pi / 4)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fidelity(su2_coherent(s, cd(0, 1), 10), circular_fock(s, 0, 10)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pair coherent states") {
    auto s = build_space(1, 30, 30);
    auto psi = pair_coherent(s, 1.0, 2);
    auto A = mode_op(s, 1, Ladder::annihilate) * mode_op(s, 2, Ladder::annihilate);
    CHECK((matvec(A, psi.amp) - psi.amp).norm() <= 1e-8);
    auto Q = mode_op(s, 1, Ladder::number) - mode_op(s, 2, Ladder::number);
    CHECK(expectation(psi, Q).real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(variance(psi, Q) < 1e-14);
    // normalization constant from the Bessel function agrees with direct summation
    cd xi(0.8, 0.6);
    auto p = pair_coherent(s, xi, 3);
    double sum = 0;
    for (int l = 0; l < 60; ++l) sum += std::pow(std::abs(xi), 2 * l) / (std::tgamma(l + 1.0) * std::tgamma(l + 4.0));
    double nq = 1 / std::sqrt(sum);
    CHECK(std::abs(p.amp[s.index(0, 3, 0)]) == doctest::Approx(nq / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(std::abs(pair_coherent(s, 0.0, 2).amp[s.index(0, 2, 0)]) == doctest::Approx(1.0));
}

TEST_CASE("pair cats") {
    auto s = build_space(1, 25, 25);
    auto A2 = power(mode_op(s, 1, Ladder::annihilate) * mode_op(s, 2, Ladder::annihilate), 2);
    for (double phi : {0.0, pi, 0.7}) {
        auto psi = pair_cat(s, 1.2, 1, phi);
        CHECK((matvec(A2, psi.amp) - 1.44 * psi.amp).norm() < 1e-8);
    }
    auto even = pair_cat(s, 1.2, 1, 0.0), odd = pair_cat(s, 1.2, 1, pi);
    CHECK(fidelity(even, odd) < 1e-28);
}

TEST_CASE("squeezed and cat states") {
    auto s = build_space(1, 40, 0);
    const double r = 0.3;
    auto sq = squeezed(s, 0.0, r);
    CHECK(expectation(sq, mode_op(s, 1, Ladder::number)).real() == doctest::Approx(std::pow(std::sinh(2 * r), 2)).epsilon(1e-10));
    auto d = squeezed(s, cd(0.5, 0.2), cd(0.1, 0.05));
    CHECK(std::abs(expectation(d, mode_op(s, 1, Ladder::annihilate)) - cd(0.5, 0.2)) < 1e-10);
    auto e = cat(s, 1.5, 0.0), o = cat(s, 1.5, pi);
    CHECK(fidelity(e, o) < 1e-28);
    // parity
    auto par = diagonal_op(s, [](int, int n, int) { return cd(n % 2 ? -1.0 : 1.0); });
    CHECK(expectation(e, par).real() == doctest::Approx(1.0));
    CHECK(expectation(o, par).real() == doctest::Approx(-1.0));
    auto plain = cat(s, 1.5, pi / 2);
    CHECK(plain.norm() == doctest::Approx(1.0));
}

TEST_CASE("rotated and circular Fock states") {
    auto s = build_space(1, 10, 10);
    auto psi = rotated_fock(s, 10, pi / 4);
    CHECK(expectation(psi, schwinger(s, 1)).real() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(variance(psi, schwinger(s, 1)) < 1e-11);
    CHECK(fidelity(rotated_fock(s, 4, 0.0), fock(s, 0, 4, 0)) == doctest::Approx(1.0));
    CHECK(expectation(circular_fock(s, 0, 7), lz_op(s)).real() == doctest::Approx(-7.0).epsilon(1e-12));
    auto epr = epr_pair(s, 0.4);
    CHECK(std::abs(epr.amp[s.index(0, 1, 0)]) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(std::abs(epr.amp[s.index(0, 0, 1)] - std::exp(cd(0, 0.4)) / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("observables and populations") {
    auto s = build_space(2, 3, 3);
    CHECK(expectation(fock(s, 0, 2, 0), schwinger(s, 3)).real() == 1.0);
    CHECK(fidelity(fock(s, 0, 1, 0), fock(s, 0, 0, 1)) == 0.0);
    auto p = electronic_populations(fock(s, 0, 2, 1));
    CHECK(p[0] == 1.0);
    auto mix = superpose({{1.0, fock(s, 0, 0, 0)}, {1.0, fock(s, 1, 1, 1)}});
    auto q = electronic_populations(mix);
    CHECK(q[0] == doctest::Approx(0.5));
    auto rho = DensityMatrix::pure(mix);
    CHECK(electronic_populations(rho)[1] == doctest::Approx(0.5));
    CHECK(expectation(rho, spin_op(s, Spin::Sz)).real() == doctest::Approx(0.0));
    CHECK_THROWS_AS(fidelity(fock(s, 0, 0, 0), fock(build_space(2, 2, 2), 0, 0, 0)), ValidationError);
}

TEST_CASE("spatial density") {
    auto s = build_space(1, 2, 2);
    auto vac = fock(s, 0, 0, 0);
    std::vector<GridPoint> pts{{0, 0}, {0.5, -1}, {1.3, 0.2}};
    auto d = spatial_density(vac, pts);
    for (size_t i = 0; i < pts.size(); ++i)
        CHECK(d[i] == doctest::Approx(std::exp(-(pts[i].x * pts[i].x + pts[i].y * pts[i].y)) / pi).epsilon(1e-13));
    // normalization on a 200 x 200 grid spanning +-8
    auto big = build_space(1, 21, 21);
    auto catst = superpose({{1.0, circular_fock(big, 0, 21)}, {cd(0, 1), circular_fock(big, 21, 0)}});
    auto grid = square_grid(8.0, 200);
    auto dens = spatial_density(catst, grid);
    double step = 16.0 / 199, total = 0;
    for (double v : dens) total += v * step * step;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
    // fringes: superposition vs matched mixture
    auto r = circular_fock(big, 0, 21), l = circular_fock(big, 21, 0);
    double var_cat = angular_variance(catst, std::sqrt(21.0));
    double var_mix = 0.5 * (angular_variance(r, std::sqrt(21.0)) + angular_variance(l, std::sqrt(21.0)));
    CHECK(var_cat > 10 * var_mix);
    // serial and parallel kernels agree
    auto ser = spatial_density_serial(catst, grid);
    for (size_t i = 0; i < grid.size(); i += 97) CHECK(ser[i] == dens[i]);
    // Hermite functions are orthonormal
    double ortho = 0, norm = 0;
    for (int i = 0; i < 4000; ++i) {
        double x = -12 + 24.0 * i / 3999;
        auto h = hermite_functions(40, x);
        ortho += h[40] * h[37] * 24.0 / 3999;
        norm += h[40] * h[40] * 24.0 / 3999;
    }
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(ortho) < 1e-8);
}

TEST_CASE("squeezing check") {
    auto s = build_space(1, 20, 20);
    auto v = squeezing_check(fock(s, 0, 0, 0), 0.0, 0.0);
    CHECK(v.variance1 == doctest::Approx(0.25));
    CHECK_FALSE(v.squeezed1);
    CHECK_FALSE(v.squeezed2);
    auto c = squeezing_check(coherent(build_space(1, 30, 30), 1.0, cd(0, 0.5)), 0.2, 0.4);
    CHECK(c.variance2 == doctest::Approx(0.25).epsilon(1e-9));
    auto sq = squeezing_check(squeezed(build_space(1, 40, 0), 0.0, 0.2), 0.0, 0.0);
    CHECK((sq.squeezed1 || sq.squeezed2));
}

TEST_CASE("JSON round trip and factory dispatch") {
    auto s = build_space(2, 6, 6);
    auto psi = superpose({{1.0, coherent(build_space(2, 6, 6), 0.3, 0.2)}, {cd(0, 1), fock(s, 1, 1, 2)}});
    auto back = state_from_json(state_to_json(psi));
    CHECK(back.space == s);
    CHECK((back.amp - psi.amp).norm() == 0);
    nlohmann::json spec = {{"kind", "pair_coherent"}, {"xi", {0.5, 0.1}}, {"q", 1}, {"atom", "+"}};
    auto pc = make_state(s, spec);
    CHECK(fidelity(pc, pair_coherent(s, cd(0.5, 0.1), 1, 1)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_state(s, nlohmann::json{{"kind", "fock"}, {"n1", 1}, {"n2", 0}, {"bogus", 1}}), ValidationError);
    CHECK_THROWS_AS(make_state(s, nlohmann::json{{"kind", "warp"}}), ValidationError);
}
