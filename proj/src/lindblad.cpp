#include "bimode/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bimode {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) j(k - 1, k) = j(k, k - 1) = k / std::sqrt(4.0 * k * k - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    x.resize(n);
    w.resize(n);
    for (int k = 0; k < n; ++k) {
        x[k] = es.eigenvalues()[k];
        w[k] = 2 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    }
}

std::function<double(double, double)> weight_fn(const LindbladParams& p) {
    if (p.recoil == Recoil::uniform) return [](double, double) { return 1.0; };
    if (!p.W) throw ValidationError("custom recoil requires a W(u, v) table");
    return p.W;
}

// Index order swap between (i1, i2) with i2 fast and (i2, i1) with i1 fast.
Mat swap_modes(const Mat& x, int n1, int n2) {
    const int n = n1 * n2;
    std::vector<int> perm(n);
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2) perm[i1 * n2 + i2] = i2 * n1 + i1;
    Mat y(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) y(perm[i], perm[j]) = x(i, j);
    return y;
}

// (I (x) k) x (I (x) k)^dag with k acting on the fast index of size nb.
void conjugate_fast(const Mat& x, const Mat& k, int nb, double weight, Mat& acc, bool parallel) {
    const int nblk = static_cast<int>(x.rows()) / nb;
    const Mat kd = k.adjoint();
#pragma omp parallel for schedule(static) if (parallel)
    for (int jb = 0; jb < nblk; ++jb)
        for (int ib = 0; ib < nblk; ++ib)
            acc.block(ib * nb, jb * nb, nb, nb).noalias() += weight * (k * x.block(ib * nb, jb * nb, nb, nb) * kd);
}

}  // namespace

RecoilKernel::RecoilKernel(const HilbertSpace& s, const LindbladParams& p) {
    if (p.recoil == Recoil::none) return;
    auto W = weight_fn(p);
    std::vector<double> x, wq;
    gauss_legendre(p.quadrature_order, x, wq);
    n1 = s.cutoff1 + 1;
    n2 = s.cutoff2 + 1;
    const int q = p.quadrature_order;
    w.resize(q, q);
    double norm = 0.0;
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
            w(a, b) = 0.25 * wq[a] * wq[b] * W(x[a], x[b]);
            norm += w(a, b);
        }
    if (std::abs(norm - 1.0) > 1e-6) throw ValidationError("recoil weight W is not normalized: (1/4) int W = " + std::to_string(norm));
    for (int a = 0; a < q; ++a) {
        k1.push_back(kick_unitary(HilbertSpace{1, s.cutoff1, 0}, 1, p.k_eta * x[a]).dense());
        k2.push_back(kick_unitary(HilbertSpace{1, s.cutoff2, 0}, 1, p.k_eta * x[a]).dense());
    }
}

Mat RecoilKernel::apply(const Mat& x, bool parallel) const {
    Mat acc = Mat::Zero(x.rows(), x.cols());
    const Mat xs = swap_modes(x, n1, n2);
    for (size_t a = 0; a < k1.size(); ++a) {
        Mat xa_s = Mat::Zero(x.rows(), x.cols());
        conjugate_fast(xs, k1[a], n1, 1.0, xa_s, parallel);
        const Mat xa = swap_modes(xa_s, n2, n1);
        for (size_t b = 0; b < k2.size(); ++b)
            if (w(a, b) != 0.0) conjugate_fast(xa, k2[b], n2, w(a, b), acc, parallel);
    }
    return acc;
}

DensityMatrix recoil_map(const DensityMatrix& rho, const LindbladParams& p) {
    if (p.recoil == Recoil::none) return rho;
    RecoilKernel kernel(rho.space, p);
    const int blk = (rho.space.cutoff1 + 1) * (rho.space.cutoff2 + 1);
    DensityMatrix out{rho.space, Mat::Zero(rho.rho.rows(), rho.rho.cols())};
    for (int a = 0; a < rho.space.atom_dim; ++a)
        for (int b = 0; b < rho.space.atom_dim; ++b)
            out.rho.block(a * blk, b * blk, blk, blk) = kernel.apply(rho.rho.block(a * blk, b * blk, blk, blk));
    return out;
}

Liouvillian::Liouvillian(const BuiltModel& model, const LindbladParams& p)
    : space_(model.hamiltonian.space), h_(model.hamiltonian.m), gamma_(p.gamma), block_((space_.cutoff1 + 1) * (space_.cutoff2 + 1)) {
    if (space_.atom_dim != 2) throw ValidationError("master equation requires a two-level atom");
    if (p.gamma < 0) throw ValidationError("gamma must be >= 0");
    recoil_ = RecoilKernel(space_, p);
}

namespace {

std::vector<int> full_indices(const std::vector<int>& motional, int blk) {
    std::vector<int> idx(motional);
    for (int m : motional) idx.push_back(blk + m);
    return idx;
}

Mat restrict_to(const Mat& rho, const std::vector<int>& idx) {
    const int n = static_cast<int>(idx.size());
    Mat out(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) out(i, j) = rho(idx[i], idx[j]);
    return out;
}

Mat embed_from(const Mat& red, const std::vector<int>& idx, int dim) {
    Mat out = Mat::Zero(dim, dim);
    const int n = static_cast<int>(idx.size());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) out(idx[i], idx[j]) = red(i, j);
    return out;
}

}  // namespace

Liouvillian::Liouvillian(const BuiltModel& model, const LindbladParams& p, const std::vector<int>& motional)
    : Liouvillian(model, p) {
    if (static_cast<int>(motional.size()) == block_) return;
    if (!recoil_.empty()) throw ValidationError("recoil couples every motional state; no restriction possible");
    auto idx = full_indices(motional, block_);
    std::vector<int> pos(space_.total_dim(), -1);
    for (size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = static_cast<int>(i);
    std::vector<Eigen::Triplet<cd>> trip;
    for (size_t i = 0; i < idx.size(); ++i)
        for (SpMat::InnerIterator it(h_, idx[i]); it; ++it)
            if (pos[it.col()] >= 0) trip.emplace_back(static_cast<int>(i), pos[it.col()], it.value());
    SpMat r(idx.size(), idx.size());
    r.setFromTriplets(trip.begin(), trip.end());
    h_ = std::move(r);
    block_ = static_cast<int>(motional.size());
}

std::vector<int> motional_support(const BuiltModel& model, const LindbladParams& p, const DensityMatrix& rho) {
    const auto& s = rho.space;
    const int blk = (s.cutoff1 + 1) * (s.cutoff2 + 1);
    std::vector<int> all(blk);
    for (int m = 0; m < blk; ++m) all[m] = m;
    if (p.recoil != Recoil::none || s.atom_dim != 2) return all;
    std::vector<char> seen(blk, 0);
    std::vector<int> stack;
    for (int i = 0; i < s.total_dim(); ++i)
        if (rho.rho.row(i).cwiseAbs().maxCoeff() > 0 && !seen[i % blk]) {
            seen[i % blk] = 1;
            stack.push_back(i % blk);
        }
    const SpMat& h = model.hamiltonian.m;
    while (!stack.empty()) {
        int m = stack.back();
        stack.pop_back();
        for (int a = 0; a < 2; ++a)
            for (SpMat::InnerIterator it(h, a * blk + m); it; ++it) {
                int mm = static_cast<int>(it.col()) % blk;
                if (!seen[mm]) {
                    seen[mm] = 1;
                    stack.push_back(mm);
                }
            }
    }
    std::vector<int> out;
    for (int m = 0; m < blk; ++m)
        if (seen[m]) out.push_back(m);
    return out;
}

Mat Liouvillian::jump(const Mat& rho, bool parallel) const {
    Mat pp = rho.block(block_, block_, block_, block_);
    if (recoil_.empty()) return pp;
    return recoil_.apply(pp, parallel);
}

void Liouvillian::commutator_part(const Mat& rho, Mat& out, bool parallel) const {
    const long n = static_cast<long>(rho.cols());
    Mat x(n, n);
    const cd* val = h_.valuePtr();
    const int* col = h_.innerIndexPtr();
    const int* ptr = h_.outerIndexPtr();
    // X = H rho, column by column.
#pragma omp parallel for schedule(static) if (parallel)
    for (long j = 0; j < n; ++j)
        for (long r = 0; r < n; ++r) {
            cd acc = 0;
            for (int k = ptr[r]; k < ptr[r + 1]; ++k) acc += val[k] * rho(col[k], j);
            x(r, j) = acc;
        }
    // -i[H, rho] = -i(X - X^dag) since rho H = (H rho)^dag.
#pragma omp parallel for schedule(static) if (parallel)
    for (long j = 0; j < n; ++j)
        for (long r = 0; r < n; ++r) out(r, j) = cd(0, -1) * (x(r, j) - std::conj(x(j, r)));
}

namespace {
void add_dissipator(Mat& out, const Mat& rho, const Mat& jumped, double gamma, int blk) {
    if (gamma == 0) return;
    const int n = static_cast<int>(rho.rows());
    // -(gamma/2)(P+ rho + rho P+), P+ projecting on the upper atom block.
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < n; ++r) {
            int cnt = (r >= blk) + (j >= blk);
            if (cnt) out(r, j) -= 0.5 * gamma * cnt * rho(r, j);
        }
    out.block(0, 0, blk, blk) += gamma * jumped;
}
}  // namespace

Mat Liouvillian::rhs(const Mat& rho) const {
    Mat out(rho.rows(), rho.cols());
    commutator_part(rho, out, true);
    add_dissipator(out, rho, gamma_ > 0 ? jump(rho, true) : Mat(), gamma_, block_);
    return out;
}

Mat Liouvillian::rhs_serial(const Mat& rho) const {
    Mat out(rho.rows(), rho.cols());
    commutator_part(rho, out, false);
    add_dissipator(out, rho, gamma_ > 0 ? jump(rho, false) : Mat(), gamma_, block_);
    return out;
}

namespace {

struct Stepper {
    const Liouvillian& L;
    double atol, rtol;
    double h = 1e-3;
    long steps = 0;
    Mat k1;
    bool have_k1 = false;

    Stepper(const Liouvillian& l, double a, double r) : L(l), atol(a), rtol(r) {}

    // Advance y from t to t_target.
    void advance(Mat& y, double& t, double t_target) {
        static const double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
        static const double a21 = 1. / 5, a31 = 3. / 40, a32 = 9. / 40, a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9,
                            a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561, a54 = -212. / 729, a61 = 9017. / 3168,
                            a62 = -355. / 33, a63 = 46732. / 5247, a64 = 49. / 176, a65 = -5103. / 18656, b1 = 35. / 384, b3 = 500. / 1113,
                            b4 = 125. / 192, b5 = -2187. / 6784, b6 = 11. / 84, e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920,
                            e5 = -17253. / 339200, e6 = 22. / 525, e7 = -1. / 40;
        (void)c2, (void)c3, (void)c4, (void)c5;
        if (!have_k1) {
            k1 = L.rhs(y);
            have_k1 = true;
        }
        while (t < t_target) {
            double hs = std::min(h, t_target - t);
            if (hs < 1e-14 * std::max(1.0, std::abs(t))) throw GuardError("step size underflow at t = " + std::to_string(t));
            Mat k2 = L.rhs(y + hs * (a21 * k1));
            Mat k3 = L.rhs(y + hs * (a31 * k1 + a32 * k2));
            Mat k4 = L.rhs(y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            Mat k5 = L.rhs(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            Mat k6 = L.rhs(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            Mat ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            Mat k7 = L.rhs(ynew);
            Mat err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double en = 0.0;
            for (Eigen::Index i = 0; i < err.size(); ++i) {
                double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
                en = std::max(en, std::abs(err(i)) / sc);
            }
            ++steps;
            double fac = en == 0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            if (en <= 1.0) {
                t += hs;
                y = std::move(ynew);
                k1 = std::move(k7);
                if (hs == h || fac < 1.0) h = hs * fac;
            } else {
                h = hs * std::min(fac, 1.0);
            }
        }
    }
};

double excited_population(const Mat& rho, int blk) {
    return rho.diagonal().segment(blk, blk).real().sum();
}

}  // namespace

Trajectory integrate(const BuiltModel& model, const LindbladParams& p, const DensityMatrix& rho0, double t_end, double dt,
                     const StateVector* target) {
    if (!(rho0.space == model.hamiltonian.space)) throw ValidationError("integrate: space mismatch");
    if (dt <= 0 || t_end < 0) throw ValidationError("integrate: need dt > 0 and t_end >= 0");
    if (std::abs(rho0.trace() - 1.0) > 1e-10) throw ValidationError("integrate: initial state must have unit trace");
    const int blk = (rho0.space.cutoff1 + 1) * (rho0.space.cutoff2 + 1);
    const auto idx = full_indices(motional_support(model, p, rho0), blk);
    Liouvillian L(model, p, motional_support(model, p, rho0));
    Stepper st{L, p.atol, p.rtol};
    Trajectory tr;
    Mat y = restrict_to(rho0.rho, idx);
    const int rblk = L.dim() / 2;
    double t = 0.0;
    auto record = [&]() {
        DensityMatrix d{rho0.space, embed_from(y, idx, rho0.space.total_dim())};
        tr.times.push_back(t);
        tr.trace.push_back(d.trace().real());
        tr.fluorescence.push_back(p.gamma * excited_population(y, rblk));
        // states outside the support contribute exact zero eigenvalues
        double me = DensityMatrix{rho0.space, y}.min_eigenvalue();
        if (y.rows() < d.rho.rows()) me = std::min(me, 0.0);
        tr.min_eigenvalue.push_back(me);
        if (target) tr.fidelity.push_back(fidelity(d, *target));
        tr.states.push_back(std::move(d));
        if (std::abs(tr.trace.back() - 1.0) > 1e-8) throw GuardError("trace drift beyond 1e-8 at t = " + std::to_string(t));
        if (me < -1e-8) throw GuardError("density matrix lost positivity at t = " + std::to_string(t));
    };
    record();
    const long n_out = static_cast<long>(std::ceil(t_end / dt - 1e-9));
    for (long k = 1; k <= n_out; ++k) {
        double tt = std::min(t_end, k * dt);
        st.advance(y, t, tt);
        t = tt;
        y = 0.5 * (y + Mat(y.adjoint()));
        record();
    }
    tr.steps = st.steps;
    return tr;
}

SteadyState steady_state(const BuiltModel& model, const LindbladParams& p, const DensityMatrix& rho0, double t_cap, double tol) {
    if (!(rho0.space == model.hamiltonian.space)) throw ValidationError("steady_state: space mismatch");
    const int blk = (rho0.space.cutoff1 + 1) * (rho0.space.cutoff2 + 1);
    const auto motional = motional_support(model, p, rho0);
    const auto idx = full_indices(motional, blk);
    Liouvillian L(model, p, motional);
    // The residual floor of the integrator is about rtol times the norm of L.
    Stepper st{L, std::min(p.atol, 1e-3 * tol), std::min(p.rtol, 1e-2 * tol)};
    Mat y = restrict_to(rho0.rho, idx);
    double t = 0.0;
    const double chunk = p.gamma > 0 ? 1.0 / p.gamma : 1.0;
    SteadyState out;
    while (true) {
        out.residual = L.rhs(y).cwiseAbs().maxCoeff();
        if (out.residual < tol) {
            out.converged = true;
            break;
        }
        if (t >= t_cap) break;
        st.advance(y, t, std::min(t_cap, t + chunk));
        y = 0.5 * (y + Mat(y.adjoint()));
    }
    out.rho = {rho0.space, embed_from(y, idx, rho0.space.total_dim())};
    out.t_reached = t;
    out.fluorescence = p.gamma * excited_population(out.rho.rho, blk);
    Mat hr = model.hamiltonian.m * out.rho.rho;
    out.commutator_norm = (hr - Mat(hr.adjoint())).cwiseAbs().maxCoeff();
    if (out.commutator_norm > 1e-8) out.converged = false;
    return out;
}

StateVector dominant_motional_state(const DensityMatrix& rho) {
    Mat m = motional_density(rho);
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    Vec v = es.eigenvectors().col(m.rows() - 1);
    StateVector psi{rho.space, Vec::Zero(rho.space.total_dim()), 0.0};
    psi.amp.head(v.size()) = v;
    psi.normalize();
    return psi;
}

std::string trajectory_csv(const Trajectory& tr, const std::string& config_hash) {
    std::string out = "# config " + config_hash + "\n";
    out += tr.fidelity.empty() ? "t,trace,fluorescence\n" : "t,trace,fluorescence,fidelity\n";
    for (size_t i = 0; i < tr.times.size(); ++i) {
        out += format_double(tr.times[i]) + "," + format_double(tr.trace[i]) + "," + format_double(tr.fluorescence[i]);
        if (!tr.fidelity.empty()) out += "," + format_double(tr.fidelity[i]);
        out += "\n";
    }
    return out;
}

}  // namespace bimode
