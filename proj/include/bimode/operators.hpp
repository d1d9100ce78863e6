#pragma once
#include <functional>
#include <utility>

#include "bimode/hilbert.hpp"

namespace bimode {

// Sparse operator over a composite space. Duplicate entries are summed.
struct Operator {
    HilbertSpace space;
    SpMat m;

    Operator() = default;
    Operator(const HilbertSpace& s, SpMat mat) : space(s), m(std::move(mat)) {}

    int dim() const { return space.total_dim(); }
    cd coeff(int r, int c) const { return m.coeff(r, c); }
    Operator adjoint() const { return {space, SpMat(m.adjoint())}; }
    Mat dense() const { return Mat(m); }
    double max_abs() const;
};

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(cd s, const Operator& a);
inline Operator operator*(double s, const Operator& a) { return cd(s) * a; }
inline Operator operator-(const Operator& a) { return cd(-1.0) * a; }

struct Triplet {
    int row;
    int col;
    cd value;
};
Operator from_triplets(const HilbertSpace& s, const std::vector<Triplet>& entries);

Operator identity_op(const HilbertSpace& s);
Operator zero_op(const HilbertSpace& s);
// Diagonal operator with value f(atom, n1, n2) on each basis state.
Operator diagonal_op(const HilbertSpace& s, const std::function<cd(int, int, int)>& f);
Operator commutator(const Operator& a, const Operator& b);
bool is_hermitian(const Operator& a, double tol = 1e-12);

enum class Ladder { annihilate, create, number };
enum class Spin { Sz, Splus, Sminus };

Operator mode_op(const HilbertSpace& s, int mode, Ladder kind);
Operator spin_op(const HilbertSpace& s, Spin kind);
Operator projector_op(const HilbertSpace& s, int bra_level, int ket_level);
Operator schwinger(const HilbertSpace& s, int component);
Operator lz_op(const HilbertSpace& s);
// a_r = (a_x - i a_y)/sqrt2, a_l = (a_x + i a_y)/sqrt2.
Operator circular_op(const HilbertSpace& s, char which, Ladder kind);

// Laguerre L_n^(k)(x) by the three-term recurrence.
double assoc_laguerre_rec(int n, int k, double x);

Operator f_k_operator(const HilbertSpace& s, int mode, int k, double eta);
cd vibronic_rabi(int n, int k, double eta, double omega);
// exp(i eta (a + a^dag)) from the normal-ordered double series.
Operator kick_operator(const HilbertSpace& s, int mode, double eta);
// exp(i eta X_T) with X_T the truncated position quadrature; unitary on the truncated space.
Operator kick_unitary(const HilbertSpace& s, int mode, double eta);
Operator mode_rotation(const HilbertSpace& s, double theta);
std::pair<Operator, Operator> quadrature_ops(const HilbertSpace& s, double phase1, double phase2);

// Power of an operator (non-negative integer exponent).
Operator power(const Operator& a, int p);

// y = A x. The parallel version splits rows over OpenMP threads.
Vec matvec(const Operator& a, const Vec& x);
Vec matvec_serial(const Operator& a, const Vec& x);

}  // namespace bimode
