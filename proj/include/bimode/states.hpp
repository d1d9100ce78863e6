#pragma once
#include <string>
#include <utility>

#include "json.hpp"

#include "bimode/operators.hpp"

namespace bimode {

constexpr double kTailTol = 1e-8;

struct StateVector {
    HilbertSpace space;
    Vec amp;
    // Norm discarded by the cutoff when the state was built.
    double tail_norm = 0.0;

    double norm() const { return amp.norm(); }
    void normalize();
};

struct DensityMatrix {
    HilbertSpace space;
    Mat rho;

    static DensityMatrix pure(const StateVector& psi);
    cd trace() const { return rho.trace(); }
    double min_eigenvalue() const;
};

// Factories. `atom` is the electronic level attached to motional states (0 = |->).
StateVector fock(const HilbertSpace& s, int atom, int n1, int n2);
StateVector coherent(const HilbertSpace& s, cd alpha1, cd alpha2, int atom = 0);
// |tau, j> with N = 2j quanta, exp(beta J+ - beta* J-)|0, N>, tau = tan(theta/2) e^{-i gamma}.
StateVector su2_coherent(const HilbertSpace& s, cd tau, int two_j, int atom = 0);
StateVector pair_coherent(const HilbertSpace& s, cd xi, int q, int atom = 0);
// D(alpha) S(xi)|0> on one mode, the other mode in vacuum.
StateVector squeezed(const HilbertSpace& s, cd alpha, cd xi, int mode = 1, int atom = 0);
// |alpha> + e^{i phi}|-alpha> on one mode, the other in vacuum.
StateVector cat(const HilbertSpace& s, cd alpha, double phi, int mode = 1, int atom = 0);
StateVector pair_cat(const HilbertSpace& s, cd xi, int q, double phi, int atom = 0);
// U(theta)|N, 0>: N quanta along the axis rotated by theta.
StateVector rotated_fock(const HilbertSpace& s, int N, double theta, int atom = 0);
StateVector circular_fock(const HilbertSpace& s, int n_r, int n_l, int atom = 0);
// (|1,0> + e^{i phi}|0,1>)/sqrt2
StateVector epr_pair(const HilbertSpace& s, double phi, int atom = 0);

// Generic dispatch used by the CLI: {"kind": "fock", ...}.
StateVector make_state(const HilbertSpace& s, const nlohmann::json& spec);

// Linear combination, normalized.
StateVector superpose(const std::vector<std::pair<cd, StateVector>>& terms);

cd expectation(const StateVector& psi, const Operator& op);
double variance(const StateVector& psi, const Operator& op);
cd expectation(const DensityMatrix& rho, const Operator& op);
double fidelity(const StateVector& a, const StateVector& b);
double fidelity(const DensityMatrix& rho, const StateVector& psi);

std::vector<double> electronic_populations(const StateVector& psi);
std::vector<double> electronic_populations(const DensityMatrix& rho);
// Reduced density matrix of the two modes (atom traced out), size (c1+1)(c2+1).
Mat motional_density(const DensityMatrix& rho);
// Motional amplitudes of the component with the given atom level (unnormalized).
Vec motional_component(const StateVector& psi, int atom);

// Normalized harmonic-oscillator eigenfunctions h_0..h_nmax at x.
std::vector<double> hermite_functions(int nmax, double x);

struct GridPoint {
    double x;
    double y;
};
std::vector<GridPoint> square_grid(double half_width, int points_per_axis);
// |Psi(x', y')|^2 summed over atom levels; coordinates in units of 1/beta.
std::vector<double> spatial_density(const StateVector& psi, const std::vector<GridPoint>& grid);
std::vector<double> spatial_density_serial(const StateVector& psi, const std::vector<GridPoint>& grid);
// Variance over polar angle of the density on a ring of radius r.
double angular_variance(const StateVector& psi, double r, int n_angles = 360);

struct SqueezingResult {
    double variance1;
    double variance2;
    bool squeezed1;
    bool squeezed2;
};
SqueezingResult squeezing_check(const StateVector& psi, double phase1, double phase2);

nlohmann::json state_to_json(const StateVector& psi);
StateVector state_from_json(const nlohmann::json& j);

}  // namespace bimode
