#pragma once
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bimode/lindblad.hpp"
#include "bimode/protocols.hpp"

namespace bimode {

struct RunContext {
    std::string config_hash;
    double guard = kDefaultGuard;
    long seed = 0;
};

struct ScenarioOutput {
    nlohmann::json summary;
    // file name -> contents
    std::vector<std::pair<std::string, std::string>> files;
};

const std::vector<std::string>& scenario_names();
// Top-level tables a scenario reads besides `parameters`.
const std::vector<std::string>& scenario_tables(const std::string& name);
// Parameter table with every accepted key and its default.
const nlohmann::json& scenario_parameter_defaults(const std::string& name);
// `cfg` has already passed schema validation; parameters are merged with the defaults.
ScenarioOutput run_scenario(const std::string& name, const nlohmann::json& cfg, const RunContext& ctx);

// Config pieces shared with the generic runner.
ModelSpec model_from_json(const nlohmann::json& j);
HilbertSpace space_from_json(const nlohmann::json& j, const ModelSpec& model);
std::vector<double> times_from_json(const nlohmann::json& j);
cd complex_from_json(const nlohmann::json& v);
// n1, n2, n_total, Q, Sz, P0..P2, J1, J2, J3, Lz, n_r, n_l or a registered constant of the model.
Operator named_observable(const std::string& name, const BuiltModel& model);
std::vector<std::string> default_observables(const HilbertSpace& s);

// Peak-to-peak of x over sliding windows of the given width, centred on each sample with a full window.
struct Envelope {
    std::vector<double> centers, values;
    double initial = 0, minimum = 0, t_minimum = 0, revival = 0, t_revival = 0;
};
// Minimum searched over the first half of the centres, revival is the largest value after it.
Envelope windowed_envelope(const std::vector<double>& t, const std::vector<double>& x, double width);

struct ParityClassification {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    bool halving = false, lethargy = false, excursion = false;
    double t_halving = nan, t_extremum = nan, n1_extremum = nan;
    std::string outcome = "unclassified";
};
// Halving: |n1 - n/2| <= 0.1 n. Lethargy: stays within 0.2 n for 0.3 t_n. Then the extremum of the first
// excursion beyond 0.25 n: transfer below 0.3 n, reabsorption above 0.7 n.
ParityClassification classify_parity_run(const std::vector<double>& t, const std::vector<double>& n1, int n, double t_n);

TimeSeries fig5_series(int n, double lambda, double t_end, int points, double guard);

struct IonParityRun {
    int N = 0;
    double omega_prime = 1, t_N = 0;
    TimeSeries series;  // J1, J1_envelope, var_J2, P_minus
    double max_deviation = 0;   // max |J1 - envelope| / (N/2)
    double j1_end = 0;          // J1(t_N) / (N/2)
    double var_j2_half = 0;     // at t_N / 2
    double ground_half = 0;     // P_minus at t_N / 2
    // P_minus sampled within +-pi/(N omega') of t_N / 2
    std::vector<double> window_t, window_ground;
};
IonParityRun ion_parity_run(int N, double omega_prime, int points, double guard = kDefaultGuard);

}  // namespace bimode
