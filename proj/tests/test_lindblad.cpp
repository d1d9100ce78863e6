#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"

#include "bimode/lindblad.hpp"

using namespace bimode;

namespace {

BuiltModel jc(const HilbertSpace& s, double lambda) {
    ModelSpec m;
    m.tag = "JC";
    m.params = {{"lambda", lambda}};
    m.interaction_picture = true;
    return build_model(m, s);
}

// Column-stacked superoperator of the master equation without recoil.
Mat superoperator(const Mat& h, const Mat& c, double gamma) {
    const int d = h.rows();
    Mat id = Mat::Identity(d, d);
    Mat cdc = c.adjoint() * c;
    Mat l = cd(0, -1) * (Eigen::kroneckerProduct(id, h) - Eigen::kroneckerProduct(h.transpose(), id)).eval();
    l += gamma * Eigen::kroneckerProduct(c.conjugate(), c).eval();
    l -= 0.5 * gamma * (Eigen::kroneckerProduct(id, cdc) + Eigen::kroneckerProduct(cdc.transpose(), id)).eval();
    return l;
}

}  // namespace

TEST_CASE("spontaneous decay of a bare atom") {
    auto s = build_space(2, 2, 0);
    auto model = jc(s, 0.0);
    LindbladParams p;
    p.gamma = 0.7;
    auto rho0 = DensityMatrix::pure(fock(s, 1, 1, 0));
    auto tr = integrate(model, p, rho0, 5.0, 0.5);
    REQUIRE(tr.times.size() == 11);
    for (size_t i = 0; i < tr.times.size(); ++i) {
        double pe = electronic_populations(tr.states[i])[1];
        CHECK(pe == doctest::Approx(std::exp(-0.7 * tr.times[i])).epsilon(1e-9));
        CHECK(tr.fluorescence[i] == doctest::Approx(0.7 * pe).epsilon(1e-9));
        CHECK(tr.trace[i] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(tr.min_eigenvalue[i] > -1e-10);
    }
}

TEST_CASE("damped Jaynes-Cummings matches the superoperator exponential") {
    auto s = build_space(2, 4, 0);
    auto model = jc(s, 0.3);
    LindbladParams p;
    p.gamma = 0.5;
    Mat c = spin_op(s, Spin::Sminus).dense();
    Mat L = superoperator(model.hamiltonian.dense(), c, p.gamma);
    auto rho0 = DensityMatrix::pure(superpose({{1.0, fock(s, 1, 2, 0)}, {cd(0.3, 0.4), fock(s, 0, 4, 0)}}));
    auto tr = integrate(model, p, rho0, 6.0, 2.0);
    Eigen::Map<const Eigen::VectorXcd> v0(rho0.rho.data(), rho0.rho.size());
    for (size_t i = 0; i < tr.times.size(); ++i) {
        Eigen::VectorXcd v = (L * tr.times[i]).exp() * v0;
        Eigen::Map<const Mat> ref(v.data(), s.total_dim(), s.total_dim());
        CHECK((tr.states[i].rho - ref).norm() < 1e-8);
    }
    // kernels agree
    Liouvillian lv(model, p);
    Mat r = tr.states[1].rho;
    CHECK((lv.rhs(r) - lv.rhs_serial(r)).norm() < 1e-14);
    Eigen::Map<const Eigen::VectorXcd> vr(r.data(), r.size());
    Eigen::VectorXcd lr = L * vr;
    CHECK((lv.rhs(r) - Eigen::Map<const Mat>(lr.data(), r.rows(), r.cols())).norm() < 1e-12);
}

TEST_CASE("recoil map") {
    auto s = build_space(2, 20, 20);
    LindbladParams p;
    p.recoil = Recoil::uniform;
    p.k_eta = 0.5;
    auto rho = DensityMatrix::pure(fock(s, 0, 0, 0));
    auto out = recoil_map(rho, p);
    CHECK(out.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
    // a kick by eta u leaves the vacuum with <n> = (eta u)^2; the uniform average of u^2 is 1/3
    CHECK(expectation(out, mode_op(s, 1, Ladder::number)).real() == doctest::Approx(0.25 / 3).epsilon(1e-9));
    CHECK(expectation(out, mode_op(s, 2, Ladder::number)).real() == doctest::Approx(0.25 / 3).epsilon(1e-9));
    CHECK(out.min_eigenvalue() > -1e-12);
    p.recoil = Recoil::custom;
    p.W = [](double u, double) { return u * u; };
    CHECK_THROWS_AS(recoil_map(rho, p), ValidationError);
    p.W = [](double u, double) { return 3 * u * u; };
    auto peaked = recoil_map(rho, p);
    // <u^2> under 3u^2/2 is 3/5
    CHECK(expectation(peaked, mode_op(s, 1, Ladder::number)).real() == doctest::Approx(0.25 * 0.6).epsilon(1e-9));
    CHECK(expectation(peaked, mode_op(s, 2, Ladder::number)).real() == doctest::Approx(0.25 / 3).epsilon(1e-9));
    p.recoil = Recoil::none;
    CHECK((recoil_map(rho, p).rho - rho.rho).norm() == 0);
}

TEST_CASE("recoil map on a random state") {
    auto s = build_space(2, 10, 10);
    const int d = s.total_dim();
    std::srand(7);
    Mat g = Mat::Random(d, d);
    DensityMatrix rho{s, g * g.adjoint()};
    rho.rho /= rho.trace();
    LindbladParams p;
    p.recoil = Recoil::uniform;
    p.k_eta = 0.1;
    auto out = recoil_map(rho, p);
    CHECK(std::abs(out.trace() - rho.trace()) < 1e-10);
    // quadrature order doubling changes nothing visible
    LindbladParams p16 = p;
    p16.quadrature_order = 16;
    CHECK((recoil_map(rho, p16).rho - out.rho).cwiseAbs().maxCoeff() < 1e-8);
    // second order in k_eta
    p.k_eta = 0.02;
    double d1 = (recoil_map(rho, p).rho - rho.rho).cwiseAbs().maxCoeff();
    p.k_eta = 0.01;
    double d2 = (recoil_map(rho, p).rho - rho.rho).cwiseAbs().maxCoeff();
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.02));
    // factorized application against the full kick products
    p.k_eta = 0.3;
    RecoilKernel kern(s, p);
    const int blk = 121;
    Mat x = rho.rho.topLeftCorner(blk, blk);
    Mat ref = Mat::Zero(blk, blk);
    std::vector<double> nodes, wts;
    {
        // Gauss-Legendre order 8 nodes recovered from the kernel's own weights is circular; use Golub-Welsch here too
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(8, 8);
        for (int k = 1; k < 8; ++k) j(k - 1, k) = j(k, k - 1) = k / std::sqrt(4.0 * k * k - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
        for (int k = 0; k < 8; ++k) {
            nodes.push_back(es.eigenvalues()[k]);
            wts.push_back(2 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
        }
    }
    HilbertSpace modes{1, 10, 10};
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
            Mat k = (kick_unitary(modes, 1, 0.3 * nodes[a]) * kick_unitary(modes, 2, 0.3 * nodes[b])).dense();
            ref += 0.25 * wts[a] * wts[b] * (k * x * k.adjoint());
        }
    CHECK((kern.apply(x) - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((kern.apply(x, false) - kern.apply(x, true)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("recoil keeps the trace and positivity along a trajectory") {
    auto s = build_space(2, 6, 6);
    auto model = build_model([] {
        ModelSpec m;
        m.tag = "Ion2D";
        m.params = {{"m_x", -1.0}, {"m_y", -1.0}, {"eta_x", 0.2}, {"eta_y", 0.2}, {"Omega", 0.5}};
        return m;
    }(), s);
    LindbladParams p;
    p.recoil = Recoil::uniform;
    p.k_eta = 0.2;
    auto tr = integrate(model, p, DensityMatrix::pure(fock(s, 0, 2, 2)), 4.0, 1.0);
    for (size_t i = 0; i < tr.times.size(); ++i) {
        CHECK(tr.trace[i] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(tr.min_eigenvalue[i] > -1e-9);
    }
    CHECK(tr.steps > 0);
}

TEST_CASE("steady state is the dark pair coherent state") {
    auto s = build_space(2, 12, 12);
    const cd eps(0.3, 0.1);
    auto A = mode_op(s, 1, Ladder::annihilate) * mode_op(s, 2, Ladder::annihilate);
    auto model = dark_hamiltonian(A, eps, 1.0, s);
    LindbladParams p;
    auto ss = steady_state(model, p, DensityMatrix::pure(fock(s, 1, 1, 0)));
    CHECK(ss.converged);
    CHECK(ss.residual < 1e-10);
    CHECK(ss.fluorescence < 1e-9);
    auto target = pair_coherent(s, eps, 1);
    CHECK(fidelity(ss.rho, target) > 1 - 1e-8);
    CHECK(fidelity(dominant_motional_state(ss.rho), target) > 1 - 1e-8);
    auto tr = integrate(model, p, DensityMatrix::pure(fock(s, 1, 1, 0)), 2.0, 1.0, &target);
    CHECK(tr.fidelity.size() == tr.times.size());
    auto csv = trajectory_csv(tr, "h");
    CHECK(csv.rfind("# config h\n", 0) == 0);
}

TEST_CASE("steady states of the dark family") {
    auto s = build_space(2, 10, 10);
    auto A = mode_op(s, 1, Ladder::annihilate) * mode_op(s, 2, Ladder::annihilate);
    LindbladParams p;
    // the kernel state is its own steady state
    auto k = steady_state(dark_hamiltonian(A, 0.0, 1.0, s), p, DensityMatrix::pure(fock(s, 0, 3, 0)));
    CHECK(k.converged);
    CHECK(fidelity(k.rho, fock(s, 0, 3, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    // pair cats from the squared coupling
    auto A2 = A * A;
    const double xi = 0.6;
    auto even = steady_state(dark_hamiltonian(A2, xi * xi, 1.0, s), p, DensityMatrix::pure(fock(s, 0, 1, 0)));
    CHECK(fidelity(even.rho, pair_cat(s, xi, 1, 0.0)) > 0.999);
    auto odd = steady_state(dark_hamiltonian(A2, xi * xi, 1.0, s), p, DensityMatrix::pure(fock(s, 0, 2, 1)));
    CHECK(fidelity(odd.rho, pair_cat(s, xi, 1, std::numbers::pi)) > 0.999);
    auto psi = dominant_motional_state(even.rho);
    CHECK((matvec(A2, psi.amp) - xi * xi * psi.amp).norm() < 1e-6);
}

TEST_CASE("closed system reduces to unitary evolution") {
    auto s = build_space(2, 6, 0);
    auto model = jc(s, 0.4);
    LindbladParams p;
    p.gamma = 0.0;
    auto psi0 = coherent(build_space(2, 6, 0), 0.2, 0.0, 1);
    auto tr = integrate(model, p, DensityMatrix::pure(psi0), 6.0, 1.0);
    Evolver ev(model);
    for (size_t i = 0; i < tr.times.size(); ++i) {
        auto psi = ev.evolve(psi0, tr.times[i]);
        CHECK((tr.states[i].rho - psi.amp * psi.amp.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("trace preserved over twenty lifetimes at cutoff 12") {
    auto s = build_space(2, 12, 0);
    auto tr = integrate(jc(s, 0.3), LindbladParams{}, DensityMatrix::pure(coherent(s, 1.0, 0.0, 1)), 20.0, 2.0);
    for (double t : tr.trace) CHECK(t == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("input validation") {
    auto s3 = build_space(3, 2, 2);
    ModelSpec m;
    m.tag = "Lambda3";
    m.params = {{"g1", 0.1}, {"g2", 0.1}};
    m.interaction_picture = true;
    CHECK_THROWS_AS(Liouvillian(build_model(m, s3), LindbladParams{}), ValidationError);
    LindbladParams bad;
    bad.gamma = -1;
    CHECK_THROWS_AS(Liouvillian(jc(build_space(2, 2, 0), 0.1), bad), ValidationError);
}
