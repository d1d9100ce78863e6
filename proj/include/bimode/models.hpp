#pragma once
#include <map>
#include <optional>
#include <string>

#include "bimode/operators.hpp"

namespace bimode {

// Tags: JC, Lambda3, DegenerateOnePhoton, Raman, RamanStark, NondegTwoPhoton,
// IntensityDependent, DegenerateTwoPhoton, IonSideband1D, Ion2D, QndCoupler,
// BimodalCatCoupler, DarkState.
struct ModelSpec {
    std::string tag;
    std::map<std::string, cd> params;
    // String-valued options: regime (full|lamb_dicke), preset (parity), F (identity|sqrt_product).
    std::map<std::string, std::string> options;
    // Unset means: true for ion models, false for cavity models.
    std::optional<bool> interaction_picture;
    // Number-diagonal functions for IntensityDependent; override the G0/G1/G2 and F options.
    std::function<double(int, int)> G;
    std::function<double(int, int)> F;

    double real(const std::string& name) const;
    cd value(const std::string& name) const;
    double real_or(const std::string& name, double dflt) const;
    cd value_or(const std::string& name, cd dflt) const;
};

const std::vector<std::string>& model_tags();

struct BuiltModel {
    std::string tag;
    Operator hamiltonian;
    std::vector<std::pair<std::string, Operator>> conserved;
    // Largest change of either mode's occupation produced by H.
    int max_photon_change = 0;
    // Basis states that H would couple above the cutoff on a larger space.
    std::vector<char> boundary;
};

BuiltModel build_model(const ModelSpec& spec, const HilbertSpace& space);

enum class Regime { full, lamb_dicke };
BuiltModel ion_effective(int m_x, int m_y, double eta_x, double eta_y, double omega, double phase, int epsilon, Regime regime,
                         const HilbertSpace& space);
// Omega'(a_x a_y sigma+ + h.c.) with a positive prefactor.
BuiltModel parity_ion_model(double omega_prime, const HilbertSpace& space);

BuiltModel qnd_model(double omega_lx, double omega_ly, double chi, const HilbertSpace& space);

enum class DarkVariant { sigma_plus, sigma_minus };
BuiltModel dark_hamiltonian(const Operator& a_vib, cd eigenvalue, double omega, const HilbertSpace& space,
                            DarkVariant variant = DarkVariant::sigma_plus);

struct TrapCheck {
    bool ok = false;
    bool commensurate = false;
    std::string diagnostics;
};
TrapCheck validate_trap(double nu_x, double nu_y, double nu_z);

// Largest per-mode occupation change over the nonzero entries of an operator.
int photon_change(const Operator& op);
// max |[H,K]| restricted to states with every occupation <= cutoff - d.
double conservation_residual(const BuiltModel& model, const Operator& k);

}  // namespace bimode
