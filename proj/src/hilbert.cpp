#include "bimode/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace bimode {

HilbertSpace build_space(int atom_dim, int cutoff1, int cutoff2) {
    if (atom_dim < 1 || atom_dim > 3)
        throw ValidationError("unsupported atom_dim " + std::to_string(atom_dim) + " (expected 1, 2 or 3)");
    if (cutoff1 < 0 || cutoff2 < 0)
        throw ValidationError("cutoffs must be non-negative");
    return HilbertSpace{atom_dim, cutoff1, cutoff2};
}

int HilbertSpace::index(int atom, int n1, int n2) const {
    if (atom < 0 || atom >= atom_dim)
        throw std::out_of_range("atom level " + std::to_string(atom) + " outside [0," + std::to_string(atom_dim) + ")");
    if (n1 < 0 || n1 > cutoff1)
        throw std::out_of_range("n1 = " + std::to_string(n1) + " outside [0," + std::to_string(cutoff1) + "]");
    if (n2 < 0 || n2 > cutoff2)
        throw std::out_of_range("n2 = " + std::to_string(n2) + " outside [0," + std::to_string(cutoff2) + "]");
    return (atom * (cutoff1 + 1) + n1) * (cutoff2 + 1) + n2;
}

BasisLabel HilbertSpace::unindex(int i) const {
    if (i < 0 || i >= total_dim()) throw std::out_of_range("basis index " + std::to_string(i));
    int n2 = i % (cutoff2 + 1);
    int rest = i / (cutoff2 + 1);
    return {rest / (cutoff1 + 1), rest % (cutoff1 + 1), n2};
}

bool is_diagonal(const SpMat& m, double tol) {
    for (int r = 0; r < m.outerSize(); ++r)
        for (SpMat::InnerIterator it(m, r); it; ++it)
            if (it.col() != r && std::abs(it.value()) > tol) return false;
    return true;
}

static void require_hermitian(const SpMat& m) {
    SpMat d = m - SpMat(m.adjoint());
    for (int r = 0; r < d.outerSize(); ++r)
        for (SpMat::InnerIterator it(d, r); it; ++it)
            if (std::abs(it.value()) > 1e-12) throw ValidationError("sector_split: conserved operator is not Hermitian");
}

// Group sorted (value, index) pairs into clusters separated by more than tol.
template <class F>
static void cluster(std::vector<std::pair<double, int>>& vals, F&& emit) {
    std::sort(vals.begin(), vals.end());
    size_t start = 0;
    for (size_t i = 1; i <= vals.size(); ++i) {
        if (i == vals.size() || vals[i].first - vals[start].first > kSectorTol) {
            emit(start, i);
            start = i;
        }
    }
}

std::vector<Sector> sector_split(const HilbertSpace& space, const SpMat& conserved) {
    const int n = space.total_dim();
    if (conserved.rows() != n || conserved.cols() != n) throw ValidationError("sector_split: dimension mismatch");
    require_hermitian(conserved);
    std::vector<Sector> out;

    if (is_diagonal(conserved)) {
        std::vector<std::pair<double, int>> vals(n);
        for (int i = 0; i < n; ++i) vals[i] = {conserved.coeff(i, i).real(), i};
        cluster(vals, [&](size_t b, size_t e) {
            Sector s;
            s.eigenvalue = vals[b].first;
            for (size_t k = b; k < e; ++k) s.member_indices.push_back(vals[k].second);
            std::sort(s.member_indices.begin(), s.member_indices.end());
            out.push_back(std::move(s));
        });
        return out;
    }

    // Connected components of the sparsity graph, then eigen-solve each block.
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> stack{s};
        comp[s] = ncomp;
        while (!stack.empty()) {
            int r = stack.back();
            stack.pop_back();
            for (SpMat::InnerIterator it(conserved, r); it; ++it) {
                int c = static_cast<int>(it.col());
                if (comp[c] < 0 && std::abs(it.value()) > 0) {
                    comp[c] = ncomp;
                    stack.push_back(c);
                }
            }
        }
        ++ncomp;
    }
    std::vector<std::vector<int>> blocks(ncomp);
    for (int i = 0; i < n; ++i) blocks[comp[i]].push_back(i);

    // eigenvalue -> (columns in full space)
    std::vector<std::pair<double, Vec>> eig;
    for (auto& blk : blocks) {
        const int m = static_cast<int>(blk.size());
        Mat sub(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) sub(a, b) = conserved.coeff(blk[a], blk[b]);
        Eigen::SelfAdjointEigenSolver<Mat> es(sub);
        for (int k = 0; k < m; ++k) {
            Vec v = Vec::Zero(n);
            for (int a = 0; a < m; ++a) v[blk[a]] = es.eigenvectors()(a, k);
            eig.emplace_back(es.eigenvalues()[k], std::move(v));
        }
    }
    std::vector<std::pair<double, int>> vals(eig.size());
    for (size_t i = 0; i < eig.size(); ++i) vals[i] = {eig[i].first, static_cast<int>(i)};
    cluster(vals, [&](size_t b, size_t e) {
        Sector s;
        s.eigenvalue = vals[b].first;
        s.basis.resize(n, static_cast<Eigen::Index>(e - b));
        std::vector<char> support(n, 0);
        for (size_t k = b; k < e; ++k) {
            const Vec& v = eig[vals[k].second].second;
            s.basis.col(static_cast<Eigen::Index>(k - b)) = v;
            for (int i = 0; i < n; ++i)
                if (std::abs(v[i]) > 1e-14) support[i] = 1;
        }
        for (int i = 0; i < n; ++i)
            if (support[i]) s.member_indices.push_back(i);
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<std::vector<int>> joint_partition(const HilbertSpace& space, const std::vector<SpMat>& ops) {
    const int n = space.total_dim();
    std::map<std::vector<long long>, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) {
        std::vector<long long> key;
        for (auto& op : ops) key.push_back(std::llround(op.coeff(i, i).real() * 1e8));
        groups[key].push_back(i);
    }
    std::vector<std::vector<int>> out;
    for (auto& [k, v] : groups) out.push_back(std::move(v));
    return out;
}

}  // namespace bimode
