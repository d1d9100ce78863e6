#include "bimode/operators.hpp"

#include <cmath>

namespace bimode {

namespace {

void require_same(const Operator& a, const Operator& b) {
    if (!(a.space == b.space)) throw ValidationError("operator space mismatch");
}

void require_modes(const HilbertSpace& s, int mode) {
    if (mode != 1 && mode != 2) throw ValidationError("mode must be 1 or 2");
    (void)s;
}

// Lift a single-mode matrix (size cutoff+1) to the full space.
Operator embed_mode(const HilbertSpace& s, int mode, const Mat& small, double drop = 0.0) {
    std::vector<Triplet> t;
    const int c = mode == 1 ? s.cutoff1 : s.cutoff2;
    for (int a = 0; a < s.atom_dim; ++a)
        for (int other = 0; other <= (mode == 1 ? s.cutoff2 : s.cutoff1); ++other)
            for (int p = 0; p <= c; ++p)
                for (int n = 0; n <= c; ++n) {
                    cd v = small(p, n);
                    if (std::abs(v) <= drop || v == cd(0)) continue;
                    int r = mode == 1 ? s.index(a, p, other) : s.index(a, other, p);
                    int col = mode == 1 ? s.index(a, n, other) : s.index(a, other, n);
                    t.push_back({r, col, v});
                }
    return from_triplets(s, t);
}

}  // namespace

double Operator::max_abs() const {
    double mx = 0.0;
    for (int r = 0; r < m.outerSize(); ++r)
        for (SpMat::InnerIterator it(m, r); it; ++it) mx = std::max(mx, std::abs(it.value()));
    return mx;
}

Operator operator+(const Operator& a, const Operator& b) {
    require_same(a, b);
    return {a.space, SpMat(a.m + b.m)};
}
Operator operator-(const Operator& a, const Operator& b) {
    require_same(a, b);
    return {a.space, SpMat(a.m - b.m)};
}
Operator operator*(const Operator& a, const Operator& b) {
    require_same(a, b);
    SpMat p = (a.m * b.m).pruned();
    return {a.space, p};
}
Operator operator*(cd s, const Operator& a) { return {a.space, SpMat(s * a.m)}; }

Operator from_triplets(const HilbertSpace& s, const std::vector<Triplet>& entries) {
    const int n = s.total_dim();
    std::vector<Eigen::Triplet<cd>> t;
    t.reserve(entries.size());
    for (auto& e : entries) {
        if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n) throw std::out_of_range("operator entry outside space");
        t.emplace_back(e.row, e.col, e.value);
    }
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return {s, m};
}

Operator identity_op(const HilbertSpace& s) {
    return diagonal_op(s, [](int, int, int) { return cd(1.0); });
}

Operator zero_op(const HilbertSpace& s) {
    SpMat m(s.total_dim(), s.total_dim());
    return {s, m};
}

Operator diagonal_op(const HilbertSpace& s, const std::function<cd(int, int, int)>& f) {
    std::vector<Triplet> t;
    for (int i = 0; i < s.total_dim(); ++i) {
        auto b = s.unindex(i);
        cd v = f(b.atom, b.n1, b.n2);
        if (v != cd(0)) t.push_back({i, i, v});
    }
    return from_triplets(s, t);
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

bool is_hermitian(const Operator& a, double tol) { return (a - a.adjoint()).max_abs() <= tol; }

Operator mode_op(const HilbertSpace& s, int mode, Ladder kind) {
    require_modes(s, mode);
    std::vector<Triplet> t;
    for (int i = 0; i < s.total_dim(); ++i) {
        auto b = s.unindex(i);
        int n = mode == 1 ? b.n1 : b.n2;
        int c = mode == 1 ? s.cutoff1 : s.cutoff2;
        switch (kind) {
            case Ladder::number:
                if (n) t.push_back({i, i, cd(n)});
                break;
            case Ladder::annihilate:
                if (n > 0) t.push_back({mode == 1 ? s.index(b.atom, n - 1, b.n2) : s.index(b.atom, b.n1, n - 1), i, std::sqrt(double(n))});
                break;
            case Ladder::create:
                if (n < c) t.push_back({mode == 1 ? s.index(b.atom, n + 1, b.n2) : s.index(b.atom, b.n1, n + 1), i, std::sqrt(double(n + 1))});
                break;
        }
    }
    return from_triplets(s, t);
}

Operator spin_op(const HilbertSpace& s, Spin kind) {
    if (s.atom_dim != 2) throw ValidationError("spin_op requires atom_dim = 2");
    switch (kind) {
        case Spin::Sz:
            return diagonal_op(s, [](int a, int, int) { return cd(a == 1 ? 0.5 : -0.5); });
        case Spin::Splus:
            return projector_op(s, 1, 0);
        case Spin::Sminus:
            return projector_op(s, 0, 1);
    }
    return zero_op(s);
}

Operator projector_op(const HilbertSpace& s, int bra, int ket) {
    if (bra < 0 || bra >= s.atom_dim || ket < 0 || ket >= s.atom_dim)
        throw std::out_of_range("projector level outside atom levels");
    std::vector<Triplet> t;
    for (int n1 = 0; n1 <= s.cutoff1; ++n1)
        for (int n2 = 0; n2 <= s.cutoff2; ++n2) t.push_back({s.index(bra, n1, n2), s.index(ket, n1, n2), cd(1.0)});
    return from_triplets(s, t);
}

Operator schwinger(const HilbertSpace& s, int component) {
    auto ax = mode_op(s, 1, Ladder::annihilate), ay = mode_op(s, 2, Ladder::annihilate);
    auto axd = ax.adjoint(), ayd = ay.adjoint();
    switch (component) {
        case 1:
            return 0.5 * (axd * ay + ayd * ax);
        case 2:
            return cd(0, -0.5) * (axd * ay - ayd * ax);
        case 3:
            return 0.5 * (mode_op(s, 1, Ladder::number) - mode_op(s, 2, Ladder::number));
        default:
            throw ValidationError("schwinger component must be 1, 2 or 3");
    }
}

Operator lz_op(const HilbertSpace& s) { return 2.0 * schwinger(s, 2); }

Operator circular_op(const HilbertSpace& s, char which, Ladder kind) {
    const double r = 1.0 / std::sqrt(2.0);
    auto ax = mode_op(s, 1, Ladder::annihilate), ay = mode_op(s, 2, Ladder::annihilate);
    cd sign = which == 'r' ? cd(0, -1) : which == 'l' ? cd(0, 1) : throw ValidationError("circular mode must be 'r' or 'l'");
    Operator a = r * ax + (r * sign) * ay;
    if (kind == Ladder::annihilate) return a;
    if (kind == Ladder::create) return a.adjoint();
    return a.adjoint() * a;
}

double assoc_laguerre_rec(int n, int k, double x) {
    if (n == 0) return 1.0;
    double lm1 = 1.0, l = 1.0 + k - x;
    for (int j = 1; j < n; ++j) {
        double next = ((2.0 * j + 1 + k - x) * l - (j + k) * lm1) / (j + 1);
        lm1 = l;
        l = next;
    }
    return l;
}

namespace {
// n!/(n+k)!
double falling_ratio(int n, int k) {
    double r = 1.0;
    for (int j = 1; j <= k; ++j) r /= double(n + j);
    return r;
}
}  // namespace

Operator f_k_operator(const HilbertSpace& s, int mode, int k, double eta) {
    require_modes(s, mode);
    if (k < 0) throw ValidationError("f_k requires k >= 0");
    const double pre = std::exp(-eta * eta / 2);
    const int c = mode == 1 ? s.cutoff1 : s.cutoff2;
    std::vector<double> d(c + 1);
    for (int n = 0; n <= c; ++n) d[n] = pre * falling_ratio(n, k) * assoc_laguerre_rec(n, k, eta * eta);
    return diagonal_op(s, [&](int, int n1, int n2) { return cd(d[mode == 1 ? n1 : n2]); });
}

cd vibronic_rabi(int n, int k, double eta, double omega) {
    if (n < 0 || k < 0) throw ValidationError("vibronic_rabi requires n, k >= 0");
    cd ik = std::pow(cd(0, eta), k);
    return ik * omega * std::exp(-eta * eta / 2) * std::sqrt(falling_ratio(n, k)) * assoc_laguerre_rec(n, k, eta * eta);
}

Operator kick_operator(const HilbertSpace& s, int mode, double eta) {
    require_modes(s, mode);
    const int c = mode == 1 ? s.cutoff1 : s.cutoff2;
    Mat small = Mat::Zero(c + 1, c + 1);
    const double pre = std::exp(-eta * eta / 2);
    static const cd ipow[4] = {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};
    // <p| a^dag^m a^l |n> with p = n - l + m; terms are finite on the truncated space.
    for (int n = 0; n <= c; ++n)
        for (int p = 0; p <= c; ++p) {
            cd sum = 0;
            for (int l = 0; l <= n; ++l) {
                int m = p - n + l;
                if (m < 0) continue;
                if (eta == 0.0 && m + l > 0) continue;
                double logmag = (m + l) * std::log(std::abs(eta) > 0 ? std::abs(eta) : 1.0) + 0.5 * (std::lgamma(n + 1.0) + std::lgamma(p + 1.0)) -
                                std::lgamma(m + 1.0) - std::lgamma(l + 1.0) - std::lgamma(n - l + 1.0);
                double sgn = (eta < 0 && ((m + l) & 1)) ? -1.0 : 1.0;
                sum += ipow[(m + l) & 3] * sgn * std::exp(logmag);
            }
            small(p, n) = pre * sum;
        }
    return embed_mode(s, mode, small, 1e-300);
}

Operator kick_unitary(const HilbertSpace& s, int mode, double eta) {
    require_modes(s, mode);
    const int c = mode == 1 ? s.cutoff1 : s.cutoff2;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(c + 1, c + 1);
    for (int n = 0; n < c; ++n) x(n, n + 1) = x(n + 1, n) = std::sqrt(n + 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
    Vec ph(c + 1);
    for (int j = 0; j <= c; ++j) ph[j] = std::exp(cd(0, eta * es.eigenvalues()[j]));
    Mat v = es.eigenvectors().cast<cd>();
    Mat u = v * ph.asDiagonal() * v.adjoint();
    return embed_mode(s, mode, u, 1e-300);
}

Operator mode_rotation(const HilbertSpace& s, double theta) {
    // exp(-2 i theta J2) block by block in fixed n1+n2.
    Operator j2 = schwinger(s, 2);
    std::vector<Triplet> t;
    for (int a = 0; a < s.atom_dim; ++a)
        for (int N = 0; N <= s.cutoff1 + s.cutoff2; ++N) {
            std::vector<int> idx;
            for (int n1 = 0; n1 <= std::min(N, s.cutoff1); ++n1)
                if (N - n1 <= s.cutoff2) idx.push_back(s.index(a, n1, N - n1));
            const int m = static_cast<int>(idx.size());
            Mat blk(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) blk(i, j) = j2.coeff(idx[i], idx[j]);
            Eigen::SelfAdjointEigenSolver<Mat> es(blk);
            Vec ph(m);
            for (int j = 0; j < m; ++j) ph[j] = std::exp(cd(0, -2.0 * theta * es.eigenvalues()[j]));
            Mat u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    if (std::abs(u(i, j)) > 1e-300) t.push_back({idx[i], idx[j], u(i, j)});
        }
    return from_triplets(s, t);
}

std::pair<Operator, Operator> quadrature_ops(const HilbertSpace& s, double phase1, double phase2) {
    const double c = std::pow(2.0, -1.5);
    Operator A = std::exp(cd(0, phase1)) * mode_op(s, 1, Ladder::annihilate) + std::exp(cd(0, phase2)) * mode_op(s, 2, Ladder::annihilate);
    Operator Ad = A.adjoint();
    return {c * (A + Ad), cd(0, c) * (Ad - A)};
}

Operator power(const Operator& a, int p) {
    if (p < 0) throw ValidationError("negative operator power");
    Operator r = identity_op(a.space);
    for (int i = 0; i < p; ++i) r = r * a;
    return r;
}

Vec matvec_serial(const Operator& a, const Vec& x) {
    const SpMat& m = a.m;
    Vec y(m.rows());
    const cd* val = m.valuePtr();
    const int* col = m.innerIndexPtr();
    const int* ptr = m.outerIndexPtr();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        cd acc = 0;
        for (int k = ptr[r]; k < ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
        y[r] = acc;
    }
    return y;
}

Vec matvec(const Operator& a, const Vec& x) {
    const SpMat& m = a.m;
    const Eigen::Index rows = m.rows();
    Vec y(rows);
    const cd* val = m.valuePtr();
    const int* col = m.innerIndexPtr();
    const int* ptr = m.outerIndexPtr();
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < rows; ++r) {
        cd acc = 0;
        for (int k = ptr[r]; k < ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
        y[r] = acc;
    }
    return y;
}

}  // namespace bimode
