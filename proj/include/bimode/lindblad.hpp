#pragma once
#include <functional>
#include <optional>

#include "bimode/evolve.hpp"

namespace bimode {

enum class Recoil { none, uniform, custom };

struct LindbladParams {
    double gamma = 1.0;
    Recoil recoil = Recoil::none;
    // Recoil Lamb-Dicke scale per mode.
    double k_eta = 0.0;
    // Angular weight W(u, v) on [-1,1]^2, required for Recoil::custom.
    std::function<double(double, double)> W;
    int quadrature_order = 8;
    double atol = 1e-11;
    double rtol = 1e-10;
};

// Quadrature of the recoil integral. Each kick factorizes over the two modes, so it is applied
// one mode at a time on the motional block.
struct RecoilKernel {
    int n1 = 0, n2 = 0;
    std::vector<Mat> k1, k2;
    Eigen::MatrixXd w;
    RecoilKernel() = default;
    RecoilKernel(const HilbertSpace& s, const LindbladParams& p);
    bool empty() const { return k1.empty(); }
    Mat apply(const Mat& x, bool parallel = true) const;
};

// (1/4) sum_{u,v} w_u w_v W(u,v) K(u,v) rho K(u,v)^dag.
DensityMatrix recoil_map(const DensityMatrix& rho, const LindbladParams& p);

// Right-hand side of the master equation; the serial one is the reference kernel.
class Liouvillian {
public:
    Liouvillian(const BuiltModel& model, const LindbladParams& p);
    // Restricted to the motional basis states listed (atom slow index kept), for a state supported there.
    Liouvillian(const BuiltModel& model, const LindbladParams& p, const std::vector<int>& motional);
    Mat rhs(const Mat& rho) const;
    Mat rhs_serial(const Mat& rho) const;
    const HilbertSpace& space() const { return space_; }
    int dim() const { return static_cast<int>(h_.rows()); }

private:
    Mat jump(const Mat& rho, bool parallel) const;
    void commutator_part(const Mat& rho, Mat& out, bool parallel) const;
    HilbertSpace space_;
    SpMat h_;
    double gamma_;
    int block_;
    RecoilKernel recoil_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    std::vector<double> trace;
    std::vector<double> fluorescence;
    std::vector<double> min_eigenvalue;
    std::vector<double> fidelity;
    long steps = 0;
};

// Motional states reachable from the support of rho through H (all of them when recoil is on).
std::vector<int> motional_support(const BuiltModel& model, const LindbladParams& p, const DensityMatrix& rho);

// Adaptive Dormand-Prince 5(4) integration; states recorded every dt.
Trajectory integrate(const BuiltModel& model, const LindbladParams& p, const DensityMatrix& rho0, double t_end, double dt,
                     const StateVector* target = nullptr);

struct SteadyState {
    DensityMatrix rho;
    double fluorescence = 0.0;
    bool converged = false;
    double residual = 0.0;
    double commutator_norm = 0.0;
    double t_reached = 0.0;
};

SteadyState steady_state(const BuiltModel& model, const LindbladParams& p, const DensityMatrix& rho0, double t_cap = 2000.0,
                         double tol = 1e-10);

// Dominant eigenvector of the reduced motional state, placed with the atom in level 0.
StateVector dominant_motional_state(const DensityMatrix& rho);

std::string trajectory_csv(const Trajectory& tr, const std::string& config_hash);

}  // namespace bimode
