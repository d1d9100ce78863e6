#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include "doctest.h"

#include "bimode/models.hpp"

using namespace bimode;

namespace {

ModelSpec spec(std::string tag, std::map<std::string, cd> p, std::map<std::string, std::string> opt = {}) {
    ModelSpec m;
    m.tag = std::move(tag);
    m.params = std::move(p);
    m.options = std::move(opt);
    return m;
}

std::vector<ModelSpec> catalog() {
    std::vector<ModelSpec> v;
    v.push_back(spec("JC", {{"lambda", cd(0.3, 0.1)}, {"omega", 1.0}, {"omega0", 1.2}}));
    v.push_back(spec("Lambda3", {{"g1", 0.4}, {"g2", cd(0.2, 0.3)}, {"omega1", 1.0}, {"omega2", 0.8}, {"E0", 0.0}, {"E1", 1.1}, {"E2", 0.3}}));
    v.push_back(spec("DegenerateOnePhoton", {{"g1", 0.7}, {"g2", 1.3}, {"phi1", 0.4}, {"phi2", -0.9}, {"omega", 1.0}, {"omega0", 0.95}}));
    v.push_back(spec("Raman", {{"gR", cd(0.2, -0.1)}, {"omega0", 0.5}, {"omega1", 1.5}, {"omega2", 1.0}}));
    v.push_back(spec("RamanStark", {{"gR", 0.2}, {"omega0", 0.5}, {"omega1", 1.5}, {"omega2", 1.0}, {"g1", 0.3}, {"g2", 0.4}, {"delta", 2.0}}));
    v.push_back(spec("NondegTwoPhoton", {{"lambda", 0.3}, {"omega0", 2.0}, {"omega1", 1.2}, {"omega2", 0.8}, {"beta1", 0.1}, {"beta2", 0.05}}));
    v.push_back(spec("IntensityDependent", {{"lambda", 0.3}, {"omega0", 2.0}, {"omega1", 1.2}, {"omega2", 0.8}, {"G1", 0.1}}, {{"F", "sqrt_product"}}));
    v.push_back(spec("DegenerateTwoPhoton", {{"lambda1", 0.3}, {"lambda2", cd(0.1, 0.2)}, {"g", 0.25}, {"r1", cd(0.05, 0.02)}, {"r2", 0.03},
                                             {"s", 0.07}, {"omega", 1.0}, {"omega0", 2.0}}));
    v.push_back(spec("DegenerateTwoPhoton", {{"lambda", 0.3}, {"r1", 0.05}, {"r2", 0.03}, {"s", 0.07}, {"omega", 1.0}, {"omega0", 2.0}},
                     {{"preset", "parity"}}));
    v.push_back(spec("IonSideband1D", {{"k", 2.0}, {"eta", 0.3}, {"Omega", 1.0}}, {{"regime", "full"}}));
    v.push_back(spec("IonSideband1D", {{"k", -1.0}, {"eta", 0.3}, {"Omega", 1.0}}, {{"regime", "lamb_dicke"}}));
    v.push_back(spec("Ion2D", {{"m_x", -1.0}, {"m_y", 2.0}, {"eta_x", 0.2}, {"eta_y", 0.3}, {"Omega", 1.0}, {"Phi", 0.3}}));
    v.push_back(spec("Ion2D", {{"m_x", 1.0}, {"m_y", -1.0}, {"eta_x", 0.2}, {"eta_y", 0.3}, {"Omega", 1.0}, {"epsilon", 0.0}}));
    v.push_back(spec("QndCoupler", {{"Omega_Lx", 1.0}, {"Omega_Ly", 0.5}, {"chi", 0.01}}));
    v.push_back(spec("BimodalCatCoupler", {{"chi", 0.2}}));
    v.push_back(spec("DarkState", {{"epsilon", cd(0.8, 0.3)}, {"Omega", 1.0}}, {{"A", "pair"}}));
    v.push_back(spec("DarkState", {{"epsilon", 0.5}, {"Omega", 1.0}}, {{"A", "pair_squared"}}));
    return v;
}

}  // namespace

TEST_CASE("every model is Hermitian and conserves its registered constants") {
    for (auto& m : catalog()) {
        CAPTURE(m.tag);
        auto s = build_space(m.tag == "Lambda3" ? 3 : 2, 8, 7);
        auto b = build_model(m, s);
        CHECK(is_hermitian(b.hamiltonian, 1e-12));
        CHECK(!b.conserved.empty());
        for (auto& [name, k] : b.conserved) {
            CAPTURE(name);
            CHECK(conservation_residual(b, k) <= 1e-12);
        }
    }
}

TEST_CASE("model tag list is complete") {
    std::set<std::string> seen;
    for (auto& m : catalog()) seen.insert(m.tag);
    for (auto& t : model_tags()) CHECK(seen.count(t) == 1);
}

TEST_CASE("parameter and atom validation") {
    auto s2 = build_space(2, 3, 3);
    CHECK_THROWS_WITH(build_model(spec("JC", {{"omega", 1.0}, {"omega0", 1.0}}), s2), doctest::Contains("lambda"));
    CHECK_THROWS_AS(build_model(spec("Lambda3", {{"g1", 1.0}, {"g2", 1.0}}), s2), ValidationError);
    CHECK_THROWS_AS(build_model(spec("Nope", {}), s2), ValidationError);
    CHECK_THROWS_AS(qnd_model(1.0, 1.0, 0.1, s2), ValidationError);
}

TEST_CASE("vacuum Rabi doublet") {
    auto s = build_space(2, 3, 0);
    ModelSpec m = spec("JC", {{"lambda", 0.37}, {"omega", 1.0}, {"omega0", 1.0}});
    auto h = build_model(m, s).hamiltonian;
    // one-excitation block {|+,0>, |-,1>}
    int a = s.index(1, 0, 0), b = s.index(0, 1, 0);
    Eigen::Matrix2cd blk;
    blk << h.coeff(a, a), h.coeff(a, b), h.coeff(b, a), h.coeff(b, b);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(blk);
    // mean energy 1/2 from omega n + omega0 Sz, splitting +-lambda
    CHECK(es.eigenvalues()[0] == doctest::Approx(0.5 - 0.37));
    CHECK(es.eigenvalues()[1] == doctest::Approx(0.5 + 0.37));
}

TEST_CASE("two-photon degenerate model constants at cutoff 30") {
    auto s = build_space(2, 30, 30);
    auto b = build_model(spec("DegenerateTwoPhoton", {{"lambda", 0.4}, {"omega", 1.0}, {"omega0", 2.0}}, {{"preset", "parity"}}), s);
    REQUIRE(b.conserved.size() == 2);
    for (auto& [n, k] : b.conserved) CHECK(conservation_residual(b, k) <= 1e-12);
    // the generic parameterization does not register C
    auto g = build_model(spec("DegenerateTwoPhoton", {{"lambda1", 0.4}, {"lambda2", 0.3}, {"g", 0.0}, {"omega", 1.0}, {"omega0", 2.0}}), s);
    CHECK(g.conserved.size() == 1);
}

TEST_CASE("Raman coupling channel") {
    auto s = build_space(2, 2, 2);
    auto b = build_model(spec("Raman", {{"gR", 0.3}, {"omega0", 0.5}, {"omega1", 1.5}, {"omega2", 1.0}}), s);
    CHECK(std::abs(b.hamiltonian.coeff(s.index(1, 0, 1), s.index(0, 1, 0)) - 0.3) < 1e-15);
}

TEST_CASE("intensity-dependent model reduces to the nondegenerate two-photon model") {
    auto s = build_space(2, 6, 6);
    const double w0 = 2.0, b1 = 0.1, b2 = 0.05;
    auto nd = build_model(spec("NondegTwoPhoton", {{"lambda", 0.3}, {"omega0", w0}, {"omega1", 1.2}, {"omega2", 0.8}, {"beta1", b1}, {"beta2", b2}}), s);
    auto id = build_model(
        spec("IntensityDependent", {{"lambda", 0.3}, {"omega0", w0}, {"omega1", 1.2}, {"omega2", 0.8}, {"G0", 1.0}, {"G1", -b1 / w0}, {"G2", b2 / w0}}), s);
    CHECK((nd.hamiltonian - id.hamiltonian).max_abs() <= 1e-14);
}

TEST_CASE("first red sideband in the Lamb-Dicke limit is the JC coupling") {
    auto s = build_space(2, 6, 0);
    const double eta = 0.1, omega = 0.8;
    auto ion = build_model(spec("IonSideband1D", {{"k", 1.0}, {"eta", eta}, {"Omega", omega}}, {{"regime", "lamb_dicke"}}), s);
    ModelSpec jc = spec("JC", {{"lambda", std::conj(cd(0, eta * omega))}});
    jc.interaction_picture = true;
    auto j = build_model(jc, s);
    CHECK((ion.hamiltonian - j.hamiltonian).max_abs() < 1e-15);
}

TEST_CASE("two-dimensional ion Hamiltonians") {
    auto s = build_space(2, 5, 5);
    auto ax = mode_op(s, 1, Ladder::annihilate), ay = mode_op(s, 2, Ladder::annihilate), sp = spin_op(s, Spin::Splus);
    auto b = ion_effective(-1, -1, 0.1, 0.2, 1.0, 0.0, 1, Regime::lamb_dicke, s);
    cd pre = cd(0, 0.1) * cd(0, 0.2);
    Operator t = pre * (ax * ay * sp);
    CHECK((b.hamiltonian - (t + t.adjoint())).max_abs() < 1e-15);
    auto p = parity_ion_model(0.5, s);
    Operator q = 0.5 * (ax * ay * sp);
    CHECK((p.hamiltonian - (q + q.adjoint())).max_abs() < 1e-15);
    auto bs = ion_effective(1, -1, 0.1, 0.2, 1.0, 0.0, 0, Regime::lamb_dicke, s);
    Operator u = cd(0, 0.1) * cd(0, 0.2) * (ax.adjoint() * ay);
    CHECK((bs.hamiltonian - (u + u.adjoint())).max_abs() < 1e-15);
    // full vs Lamb-Dicke for small eta; f_k(0) = 1/k! so second-order sidebands carry 1/2
    const double eta = 0.05;
    for (auto [mx, my, scale] : {std::tuple{-1, -1, 1.0}, std::tuple{1, 0, 1.0}, std::tuple{-1, 2, 0.5}}) {
        // a spectator mode (m = 0) gets no recoil so that f_0 = 1
        const double ex = mx ? eta : 0.0, ey = my ? eta : 0.0;
        auto full = ion_effective(mx, my, ex, ey, 1.0, 0.0, 1, Regime::full, s);
        auto ld = ion_effective(mx, my, ex, ey, 1.0, 0.0, 1, Regime::lamb_dicke, s);
        int compared = 0;
        // relative error up to 2 eta^2 per coupled mode
        const int active = (mx != 0) + (my != 0);
        for (int i = 0; i < s.total_dim(); ++i)
            for (int j = 0; j < s.total_dim(); ++j) {
                auto bi = s.unindex(i), bj = s.unindex(j);
                if (std::max({bi.n1, bi.n2, bj.n1, bj.n2}) > 3) continue;
                cd l = scale * ld.hamiltonian.coeff(i, j);
                if (std::abs(l) == 0) continue;
                ++compared;
                CHECK(std::abs(full.hamiltonian.coeff(i, j) - l) <= active * 2 * eta * eta * std::abs(l));
            }
        CHECK(compared > 0);
    }
}

TEST_CASE("QND coupler frequencies") {
    auto s = build_space(2, 6, 6);
    const double lx = 1.0, ly = 0.6, chi = 0.1;
    auto b = qnd_model(lx, ly, chi, s);
    for (int nx = 0; nx <= 6; ++nx)
        for (int ny = 0; ny <= 6; ++ny)
            CHECK(std::abs(b.hamiltonian.coeff(s.index(1, nx, ny), s.index(0, nx, ny))) ==
                  doctest::Approx(std::abs(lx - ly - chi * (nx - ny))));
    // q* = (lx - ly)/chi = 4 is dark
    CHECK(std::abs(b.hamiltonian.coeff(s.index(1, 5, 1), s.index(0, 5, 1))) < 1e-15);
}

TEST_CASE("dark Hamiltonian kernel") {
    auto s = build_space(2, 10, 10);
    auto A = mode_op(s, 1, Ladder::annihilate) * mode_op(s, 2, Ladder::annihilate);
    auto b = dark_hamiltonian(A, 0.0, 1.0, s);
    REQUIRE(b.conserved.size() == 1);
    Vec v = Vec::Zero(s.total_dim());
    v[s.index(0, 3, 0)] = 1;
    CHECK(matvec(b.hamiltonian, v).norm() < 1e-15);
    auto x = mode_op(s, 1, Ladder::annihilate) + mode_op(s, 1, Ladder::create);
    auto c = dark_hamiltonian(x, 0.0, 1.0, s);
    CHECK(c.conserved.empty());
    CHECK_THROWS_AS(dark_hamiltonian(spin_op(s, Spin::Splus), 0.0, 1.0, s), ValidationError);
}

TEST_CASE("trap relation") {
    CHECK(validate_trap(1.0, 2.0, 3.0).ok);
    CHECK_FALSE(validate_trap(1.0, 1.0, 3.0).ok);
    auto iso = validate_trap(1.0, 1.0, 2.0);
    CHECK(iso.ok);
    CHECK(iso.commensurate);
    CHECK(iso.diagnostics.find("resonant") != std::string::npos);
    CHECK_FALSE(validate_trap(1.0, std::sqrt(2.0), 1.0 + std::sqrt(2.0)).commensurate);
}
