#include "bimode/states.hpp"

#include <cmath>
#include <numbers>

namespace bimode {

namespace {

// Place two-mode amplitudes amps(n1, n2), given on a range possibly larger than
// the cutoffs, into the space with the chosen atom level.
StateVector place(const HilbertSpace& s, int atom, const Mat& amps, const char* what) {
    if (atom < 0 || atom >= s.atom_dim) throw ValidationError(std::string(what) + ": atom level out of range");
    const double total = amps.squaredNorm();
    StateVector psi{s, Vec::Zero(s.total_dim()), 0.0};
    double inside = 0.0;
    for (int n1 = 0; n1 < amps.rows() && n1 <= s.cutoff1; ++n1)
        for (int n2 = 0; n2 < amps.cols() && n2 <= s.cutoff2; ++n2) {
            psi.amp[s.index(atom, n1, n2)] = amps(n1, n2);
            inside += std::norm(amps(n1, n2));
        }
    if (total <= 0 || inside <= 0) throw ValidationError(std::string(what) + ": state has no support inside the cutoffs");
    psi.tail_norm = std::max(0.0, 1.0 - inside / total);
    if (psi.tail_norm > kTailTol)
        throw ValidationError(std::string(what) + ": cutoff too small, discarded tail norm " + std::to_string(psi.tail_norm));
    psi.normalize();
    return psi;
}

// Coherent amplitudes e^{-|a|^2/2} a^n / sqrt(n!) for n = 0..m.
Vec coherent_amps(cd alpha, int m) {
    Vec v(m + 1);
    const double r = std::abs(alpha), th = std::arg(alpha);
    for (int n = 0; n <= m; ++n) {
        double logmag = -r * r / 2 - 0.5 * std::lgamma(n + 1.0) + (n ? n * std::log(r > 0 ? r : 1.0) : 0.0);
        v[n] = (r == 0 && n > 0) ? cd(0) : std::polar(std::exp(logmag), n * th);
    }
    return v;
}

int aux_size(double mean, int cutoff) {
    return std::max(cutoff, static_cast<int>(mean + 12 * std::sqrt(mean) + 40));
}

Mat single_mode(const Vec& v, int mode) {
    Mat m = Mat::Zero(mode == 1 ? v.size() : 1, mode == 1 ? 1 : v.size());
    for (int n = 0; n < v.size(); ++n) (mode == 1 ? m(n, 0) : m(0, n)) = v[n];
    return m;
}

// Amplitudes on |k, N-k>, k = 0..N, as a two-mode table.
Mat sector_table(const Vec& c, int N) {
    Mat m = Mat::Zero(N + 1, N + 1);
    for (int k = 0; k <= N; ++k) m(k, N - k) = c[k];
    return m;
}

// J+ = a_x^dag a_y on the fixed-N block, basis |k, N-k>.
Mat jplus_block(int N) {
    Mat j = Mat::Zero(N + 1, N + 1);
    for (int k = 0; k < N; ++k) j(k + 1, k) = std::sqrt(double(k + 1) * (N - k));
    return j;
}

// exp(G) for anti-Hermitian G.
Mat expm_antihermitian(const Mat& g) {
    Mat h = cd(0, 1) * g;
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    Vec ph(h.rows());
    for (int i = 0; i < h.rows(); ++i) ph[i] = std::exp(cd(0, -es.eigenvalues()[i]));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

Vec pair_amps(cd xi, int q, int lmax) {
    Vec c(lmax + 1);
    const double r = std::abs(xi), th = std::arg(xi);
    for (int l = 0; l <= lmax; ++l) {
        double logmag = (l ? l * std::log(r > 0 ? r : 1.0) : 0.0) - 0.5 * (std::lgamma(l + 1.0) + std::lgamma(l + q + 1.0));
        c[l] = (r == 0 && l > 0) ? cd(0) : std::polar(std::exp(logmag), l * th);
    }
    return c;
}

double pair_norm(cd xi, int q) {
    const double r = std::abs(xi);
    if (r == 0) return std::sqrt(std::tgamma(q + 1.0));
    return std::pow(std::pow(r, -q) * std::cyl_bessel_i(double(q), 2 * r), -0.5);
}

Mat pair_table(const Vec& c, int q) {
    const int lmax = static_cast<int>(c.size()) - 1;
    Mat m = Mat::Zero(lmax + q + 1, lmax + 1);
    for (int l = 0; l <= lmax; ++l) m(l + q, l) = c[l];
    return m;
}

}  // namespace

void StateVector::normalize() {
    double n = amp.norm();
    if (n == 0) throw ValidationError("cannot normalize the zero vector");
    amp /= n;
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) { return {psi.space, psi.amp * psi.amp.adjoint()}; }

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

StateVector fock(const HilbertSpace& s, int atom, int n1, int n2) {
    StateVector psi{s, Vec::Zero(s.total_dim()), 0.0};
    psi.amp[s.index(atom, n1, n2)] = 1.0;
    return psi;
}

StateVector coherent(const HilbertSpace& s, cd alpha1, cd alpha2, int atom) {
    Vec v1 = coherent_amps(alpha1, aux_size(std::norm(alpha1), s.cutoff1));
    Vec v2 = coherent_amps(alpha2, aux_size(std::norm(alpha2), s.cutoff2));
    return place(s, atom, v1 * v2.transpose(), "coherent");
}

StateVector su2_coherent(const HilbertSpace& s, cd tau, int two_j, int atom) {
    if (two_j < 0) throw ValidationError("su2_coherent: 2j must be >= 0");
    const int N = two_j;
    const double theta = 2 * std::atan(std::abs(tau));
    const double gamma = -std::arg(tau);
    const cd beta = std::polar(theta / 2, -gamma);
    Mat jp = jplus_block(N);
    Mat u = expm_antihermitian(beta * jp - std::conj(beta) * Mat(jp.adjoint()));
    Vec c = u.col(0);
    return place(s, atom, sector_table(c, N), "su2_coherent");
}

StateVector pair_coherent(const HilbertSpace& s, cd xi, int q, int atom) {
    if (q < 0) throw ValidationError("pair_coherent: q must be >= 0");
    const int lmax = aux_size(std::abs(xi), std::max(s.cutoff1, s.cutoff2));
    Vec c = pair_norm(xi, q) * pair_amps(xi, q, lmax);
    return place(s, atom, pair_table(c, q), "pair_coherent");
}

StateVector pair_cat(const HilbertSpace& s, cd xi, int q, double phi, int atom) {
    if (q < 0) throw ValidationError("pair_cat: q must be >= 0");
    const int lmax = aux_size(std::abs(xi), std::max(s.cutoff1, s.cutoff2));
    Vec c = pair_amps(xi, q, lmax);
    const cd e = std::exp(cd(0, phi));
    for (int l = 0; l <= lmax; ++l) c[l] *= 1.0 + e * (l % 2 ? -1.0 : 1.0);
    if (c.norm() == 0) throw ValidationError("pair_cat: components cancel");
    c /= c.norm();
    return place(s, atom, pair_table(c, q), "pair_cat");
}

StateVector squeezed(const HilbertSpace& s, cd alpha, cd xi, int mode, int atom) {
    const int c = mode == 1 ? s.cutoff1 : s.cutoff2;
    const int m = std::max(2 * c, c + 80) + static_cast<int>(4 * std::norm(alpha));
    Mat a = Mat::Zero(m + 1, m + 1);
    for (int n = 1; n <= m; ++n) a(n - 1, n) = std::sqrt(double(n));
    Mat ad = a.adjoint();
    Mat S = expm_antihermitian(xi * ad * ad - std::conj(xi) * a * a);
    Mat D = expm_antihermitian(alpha * ad - std::conj(alpha) * a);
    Vec v = D * S.col(0);
    return place(s, atom, single_mode(v, mode), "squeezed");
}

StateVector cat(const HilbertSpace& s, cd alpha, double phi, int mode, int atom) {
    const int c = mode == 1 ? s.cutoff1 : s.cutoff2;
    Vec v = coherent_amps(alpha, aux_size(std::norm(alpha), c));
    const cd e = std::exp(cd(0, phi));
    for (int n = 0; n < v.size(); ++n) v[n] *= 1.0 + e * (n % 2 ? -1.0 : 1.0);
    if (v.norm() == 0) throw ValidationError("cat: components cancel");
    v /= v.norm();
    return place(s, atom, single_mode(v, mode), "cat");
}

StateVector rotated_fock(const HilbertSpace& s, int N, double theta, int atom) {
    if (N < 0) throw ValidationError("rotated_fock: N must be >= 0");
    Mat jp = jplus_block(N);
    // exp(-2 i theta J2) = exp(-theta (J+ - J-))
    Mat u = expm_antihermitian(-theta * (jp - Mat(jp.adjoint())));
    return place(s, atom, sector_table(u.col(N), N), "rotated_fock");
}

StateVector circular_fock(const HilbertSpace& s, int n_r, int n_l, int atom) {
    if (n_r < 0 || n_l < 0) throw ValidationError("circular_fock: occupations must be >= 0");
    const int N = n_r + n_l;
    // Coefficients of (a_x^dag)^k (a_y^dag)^{N-k} in (a_x^dag + i a_y^dag)^{n_r} (a_x^dag - i a_y^dag)^{n_l}.
    Vec poly = Vec::Zero(N + 1);
    poly[0] = 1.0;  // index = power of a_y^dag
    int deg = 0;
    auto mul = [&](cd cy) {
        Vec next = Vec::Zero(N + 1);
        for (int j = 0; j <= deg; ++j) {
            next[j] += poly[j];
            next[j + 1] += cy * poly[j];
        }
        poly = next;
        ++deg;
    };
    for (int i = 0; i < n_r; ++i) mul(cd(0, 1));
    for (int i = 0; i < n_l; ++i) mul(cd(0, -1));
    Vec c(N + 1);
    for (int k = 0; k <= N; ++k) {
        int y = N - k;
        double scale = std::exp(0.5 * (std::lgamma(k + 1.0) + std::lgamma(y + 1.0) - std::lgamma(n_r + 1.0) - std::lgamma(n_l + 1.0)) -
                                0.5 * N * std::log(2.0));
        c[k] = poly[y] * scale;
    }
    return place(s, atom, sector_table(c, N), "circular_fock");
}

StateVector epr_pair(const HilbertSpace& s, double phi, int atom) {
    Mat m = Mat::Zero(2, 2);
    m(1, 0) = 1.0 / std::sqrt(2.0);
    m(0, 1) = std::exp(cd(0, phi)) / std::sqrt(2.0);
    return place(s, atom, m, "epr_pair");
}

StateVector superpose(const std::vector<std::pair<cd, StateVector>>& terms) {
    if (terms.empty()) throw ValidationError("superpose: no terms");
    StateVector out{terms[0].second.space, Vec::Zero(terms[0].second.space.total_dim()), 0.0};
    for (auto& [c, psi] : terms) {
        if (!(psi.space == out.space)) throw ValidationError("superpose: space mismatch");
        out.amp += c * psi.amp;
        out.tail_norm = std::max(out.tail_norm, psi.tail_norm);
    }
    out.normalize();
    return out;
}

namespace {
void same_space(const HilbertSpace& a, const HilbertSpace& b) {
    if (!(a == b)) throw ValidationError("space mismatch");
}
}  // namespace

cd expectation(const StateVector& psi, const Operator& op) {
    same_space(psi.space, op.space);
    return psi.amp.dot(matvec(op, psi.amp));
}

double variance(const StateVector& psi, const Operator& op) {
    same_space(psi.space, op.space);
    Vec o = matvec(op, psi.amp);
    cd m1 = psi.amp.dot(o);
    cd m2 = psi.amp.dot(matvec(op, o));
    return (m2 - m1 * m1).real();
}

cd expectation(const DensityMatrix& rho, const Operator& op) {
    same_space(rho.space, op.space);
    cd acc = 0;
    for (int r = 0; r < op.m.outerSize(); ++r)
        for (SpMat::InnerIterator it(op.m, r); it; ++it) acc += it.value() * rho.rho(it.col(), r);
    return acc;
}

double fidelity(const StateVector& a, const StateVector& b) {
    same_space(a.space, b.space);
    return std::norm(a.amp.dot(b.amp));
}

double fidelity(const DensityMatrix& rho, const StateVector& psi) {
    same_space(rho.space, psi.space);
    return psi.amp.dot(rho.rho * psi.amp).real();
}

std::vector<double> electronic_populations(const StateVector& psi) {
    const int block = (psi.space.cutoff1 + 1) * (psi.space.cutoff2 + 1);
    std::vector<double> p(psi.space.atom_dim);
    for (int a = 0; a < psi.space.atom_dim; ++a) p[a] = psi.amp.segment(a * block, block).squaredNorm();
    return p;
}

std::vector<double> electronic_populations(const DensityMatrix& rho) {
    const int block = (rho.space.cutoff1 + 1) * (rho.space.cutoff2 + 1);
    std::vector<double> p(rho.space.atom_dim);
    for (int a = 0; a < rho.space.atom_dim; ++a) p[a] = rho.rho.diagonal().segment(a * block, block).real().sum();
    return p;
}

Mat motional_density(const DensityMatrix& rho) {
    const int block = (rho.space.cutoff1 + 1) * (rho.space.cutoff2 + 1);
    Mat m = Mat::Zero(block, block);
    for (int a = 0; a < rho.space.atom_dim; ++a) m += rho.rho.block(a * block, a * block, block, block);
    return m;
}

Vec motional_component(const StateVector& psi, int atom) {
    const int block = (psi.space.cutoff1 + 1) * (psi.space.cutoff2 + 1);
    return psi.amp.segment(atom * block, block);
}

std::vector<double> hermite_functions(int nmax, double x) {
    std::vector<double> h(nmax + 1);
    h[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-x * x / 2);
    if (nmax >= 1) h[1] = std::sqrt(2.0) * x * h[0];
    for (int n = 1; n < nmax; ++n) h[n + 1] = x * std::sqrt(2.0 / (n + 1)) * h[n] - std::sqrt(double(n) / (n + 1)) * h[n - 1];
    return h;
}

std::vector<GridPoint> square_grid(double half_width, int points) {
    std::vector<GridPoint> g;
    g.reserve(static_cast<size_t>(points) * points);
    const double step = 2 * half_width / (points - 1);
    for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j) g.push_back({-half_width + i * step, -half_width + j * step});
    return g;
}

namespace {
double density_at(const StateVector& psi, const GridPoint& p) {
    const auto& s = psi.space;
    auto hx = hermite_functions(s.cutoff1, p.x);
    auto hy = hermite_functions(s.cutoff2, p.y);
    double d = 0.0;
    for (int a = 0; a < s.atom_dim; ++a) {
        cd v = 0;
        for (int n1 = 0; n1 <= s.cutoff1; ++n1) {
            cd row = 0;
            for (int n2 = 0; n2 <= s.cutoff2; ++n2) row += psi.amp[s.index(a, n1, n2)] * hy[n2];
            v += row * hx[n1];
        }
        d += std::norm(v);
    }
    return d;
}
}  // namespace

std::vector<double> spatial_density_serial(const StateVector& psi, const std::vector<GridPoint>& grid) {
    std::vector<double> out(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) out[i] = density_at(psi, grid[i]);
    return out;
}

std::vector<double> spatial_density(const StateVector& psi, const std::vector<GridPoint>& grid) {
    std::vector<double> out(grid.size());
    const long n = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (long i = 0; i < n; ++i) out[i] = density_at(psi, grid[i]);
    return out;
}

double angular_variance(const StateVector& psi, double r, int n_angles) {
    std::vector<GridPoint> ring(n_angles);
    for (int k = 0; k < n_angles; ++k) {
        double a = 2 * std::numbers::pi * k / n_angles;
        ring[k] = {r * std::cos(a), r * std::sin(a)};
    }
    auto d = spatial_density(psi, ring);
    double mean = 0, sq = 0;
    for (double v : d) mean += v;
    mean /= n_angles;
    for (double v : d) sq += (v - mean) * (v - mean);
    return sq / n_angles;
}

SqueezingResult squeezing_check(const StateVector& psi, double phase1, double phase2) {
    auto [d1, d2] = quadrature_ops(psi.space, phase1, phase2);
    SqueezingResult r{variance(psi, d1), variance(psi, d2), false, false};
    r.squeezed1 = r.variance1 < 0.25 - 1e-12;
    r.squeezed2 = r.variance2 < 0.25 - 1e-12;
    return r;
}

}  // namespace bimode
