#pragma once
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bimode {

using cd = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cd, Eigen::RowMajor>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// Thrown for bad user input (maps to CLI exit code 2).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a numerical guard trips (maps to CLI exit code 3).
struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BasisLabel {
    int atom;
    int n1;
    int n2;
};

// atom (x) mode1 (x) mode2, row-major with the atom slowest.
struct HilbertSpace {
    int atom_dim = 2;
    int cutoff1 = 0;
    int cutoff2 = 0;

    int total_dim() const { return atom_dim * (cutoff1 + 1) * (cutoff2 + 1); }
    int index(int atom, int n1, int n2) const;
    BasisLabel unindex(int i) const;
    bool operator==(const HilbertSpace&) const = default;
};

HilbertSpace build_space(int atom_dim, int cutoff1, int cutoff2);
inline int basis_index(const HilbertSpace& s, int a, int n1, int n2) { return s.index(a, n1, n2); }

constexpr double kSectorTol = 1e-10;

struct Sector {
    double eigenvalue = 0.0;
    std::vector<int> member_indices;
    // Orthonormal eigenvectors spanning the sector; empty when the conserved
    // operator was already diagonal, in which case members are basis states.
    Mat basis;
};

// Split the space into eigenspaces of a Hermitian conserved operator.
std::vector<Sector> sector_split(const HilbertSpace& space, const SpMat& conserved);

// Joint partition of basis indices by several diagonal operators.
std::vector<std::vector<int>> joint_partition(const HilbertSpace& space, const std::vector<SpMat>& diagonal_ops);

bool is_diagonal(const SpMat& m, double tol = 0.0);

}  // namespace bimode
