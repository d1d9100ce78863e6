#pragma once
#include <map>
#include <string>
#include <vector>

#include "bimode/evolve.hpp"

namespace bimode {

// Orthonormal basis of the atomic levels; vectors[k][a] is the amplitude on level a.
struct AtomBasis {
    std::string name;
    std::vector<Vec> vectors;
};

AtomBasis standard_basis(int atom_dim);
// {cos t |-> + e^{i phi} sin t |+>, -e^{-i phi} sin t |-> + cos t |+>}
AtomBasis rotated_basis(double theta, double phi = 0.0);

struct MeasurementRecord {
    AtomBasis basis;
    int outcome = 0;
    double probability = 0.0;
    StateVector post_state;
};

MeasurementRecord measure_atom(const StateVector& psi, const AtomBasis& basis, int outcome);

// Motional part of a state whose atom sits in `atom_state`, re-attached to level `level`.
StateVector reset_atom(const StateVector& psi, const Vec& atom_state, int level);

struct ProtocolStep {
    // Level the atom is prepared in before the evolution, -1 to keep it.
    int prepare_atom = -1;
    double time = 0.0;
    std::string model;
    MeasurementRecord record;
};

struct ProtocolTrace {
    std::string protocol;
    std::vector<ProtocolStep> steps;
    double success_probability = 1.0;
    StateVector final_state;
    std::map<std::string, double> metrics;
    std::map<std::string, std::string> notes;
};

nlohmann::json trace_to_json(const ProtocolTrace& tr, bool include_state = true);

// Re-runs the evolutions and projections of a trace from its initial state.
StateVector replay(const ProtocolTrace& tr, const StateVector& initial, const Evolver& ev);

struct LadderTiming {
    bool exact_pi_pulse = true;
    double t = 0.0;
    static LadderTiming pi_pulse() { return {}; }
    static LadderTiming fixed(double t) { return {false, t}; }
};

// Atoms in |+> cross the two-mode cavity one by one; a ground-state detection adds one photon pair.
ProtocolTrace pair_fock_ladder(const HilbertSpace& space, int n_target, LadderTiming timing, double lambda = 1.0);

struct QndParams {
    double omega_lx = 1.5;
    double omega_ly = 0.5;
    double chi = 0.0049;
};

enum class QndSchedule { constant, linear };

// Null-fluorescence detections at Omega(m) t_1 = pi/2, then Omega(m) t_k = l_k pi with l_k = 1 or k.
ProtocolTrace qnd_projection(const HilbertSpace& space, cd alpha, cd beta, int q_target, int n_measurements, const QndParams& params,
                             QndSchedule schedule = QndSchedule::constant);

// Target of the parity protocol on |k, N-k>: tau = +-1 components for even N, tau = +-i for odd N.
StateVector parity_cat_target(const HilbertSpace& space, int N);
// 1 - max over SU(2) coherent states of |<tau|psi>|^2 on the N-quanta shell; 0 for a single coherent state.
double su2_coherent_distance(const StateVector& psi, int N);

ProtocolTrace parity_cat(int N, double omega_prime, double window = 0.05);

// Columns t, phi, P_minus_sim, P_minus_formula, abs_diff.
TimeSeries bimodal_cat_readout(const HilbertSpace& space, double alpha, double beta, double chi, const std::vector<double>& times);
double bimodal_cat_formula(double alpha, double beta, double phi);

// Degenerate two-photon parity preset from |alpha>|0>|->; branches from even and odd photon numbers of the input.
struct CatBranches {
    StateVector phi;  // even branch
    StateVector chi;  // odd branch
    double weight_phi = 0.0;
    double weight_chi = 0.0;
};
ProtocolTrace coherent_parity_cat(const HilbertSpace& space, cd alpha, double lambda = 1.0, CatBranches* branches = nullptr);

struct CatFit {
    cd beta1, beta2;
    cd c1, c2;
    double residual = 0.0;
};
// Least-squares fit of a mode-1 state by c1|beta1> + c2|beta2> with |beta1| = |beta2| = r.
CatFit fit_two_coherent(const Vec& mode_amp, double r);

struct CatVerification {
    double fidelity = 0.0;
    std::string convention;
    bool degenerate_tau = false;
    CatFit fit;
    ProtocolTrace trace;
};
CatVerification single_mode_cat_verify(const HilbertSpace& space, cd alpha, double lambda, double tau);

}  // namespace bimode
