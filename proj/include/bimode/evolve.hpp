#pragma once
#include <string>

#include "bimode/models.hpp"
#include "bimode/states.hpp"

namespace bimode {

constexpr double kDefaultGuard = 1e-8;

// Spectral decomposition of H as independent blocks of basis indices.
class Evolver {
public:
    enum class Mode { sectors, dense };
    explicit Evolver(const BuiltModel& model, Mode mode = Mode::sectors);

    const HilbertSpace& space() const { return space_; }
    size_t block_count() const { return blocks_.size(); }
    size_t largest_block() const;

    // e^{-iHt} psi
    Vec evolve(const Vec& psi, double t) const;
    StateVector evolve(const StateVector& psi, double t) const;
    Operator propagator(double t) const;
    const std::vector<char>& boundary() const { return boundary_; }

private:
    struct Block {
        std::vector<int> idx;
        Mat vecs;
        Eigen::VectorXd vals;
    };
    HilbertSpace space_;
    std::vector<Block> blocks_;
    std::vector<char> boundary_;
};

Operator propagator(const BuiltModel& model, double t);

struct Observable {
    std::string name;
    Operator op;
};

struct TimeSeries {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<cd>> values;
    std::vector<double> leaked_norm;

    const std::vector<cd>& column(const std::string& name) const;
    std::vector<double> real_column(const std::string& name) const;
    void add_column(const std::string& name, std::vector<cd> v);
};

TimeSeries evolve_series(const BuiltModel& model, const StateVector& psi0, const std::vector<double>& times,
                         const std::vector<Observable>& observables, double guard = kDefaultGuard);
TimeSeries evolve_series(const Evolver& ev, const StateVector& psi0, const std::vector<double>& times,
                         const std::vector<Observable>& observables, double guard = kDefaultGuard);
// Same result, one time after the other on a single thread.
TimeSeries evolve_series_serial(const Evolver& ev, const StateVector& psi0, const std::vector<double>& times,
                                const std::vector<Observable>& observables, double guard = kDefaultGuard);
TimeSeries variance_series(const BuiltModel& model, const StateVector& psi0, const std::vector<double>& times, const Observable& op,
                           double guard = kDefaultGuard);

std::vector<double> linspace(double a, double b, int n);

// Population of the basis states flagged as boundary.
double boundary_population(const std::vector<char>& boundary, const Vec& psi);

// CSV with a "# config <hash>" comment, header row, 17 significant digits.
std::string series_csv(const TimeSeries& ts, const std::string& config_hash);
void write_text(const std::string& path, const std::string& text);
std::string format_double(double v);

}  // namespace bimode
