#include "bimode/evolve.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace bimode {

namespace {

// Split each group into connected components of the coupling graph of h.
std::vector<std::vector<int>> refine_by_coupling(const SpMat& h, const std::vector<std::vector<int>>& groups) {
    const int n = static_cast<int>(h.rows());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int r = 0; r < n; ++r)
        for (SpMat::InnerIterator it(h, r); it; ++it)
            if (it.value() != cd(0)) parent[find(r)] = find(static_cast<int>(it.col()));
    // H must not couple two sectors of the registered constants.
    std::vector<int> group_of(n, -1);
    for (size_t g = 0; g < groups.size(); ++g)
        for (int i : groups[g]) group_of[i] = static_cast<int>(g);
    for (int r = 0; r < n; ++r)
        for (SpMat::InnerIterator it(h, r); it; ++it)
            if (it.value() != cd(0) && group_of[r] != group_of[it.col()])
                throw ValidationError("Hamiltonian couples two sectors of a registered constant of motion");
    std::vector<std::vector<int>> comps;
    std::vector<int> slot(n, -1);
    for (int i = 0; i < n; ++i) {
        int root = find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<int>(comps.size());
            comps.emplace_back();
        }
        comps[slot[root]].push_back(i);
    }
    return comps;
}

}  // namespace

Evolver::Evolver(const BuiltModel& model, Mode mode) : space_(model.hamiltonian.space), boundary_(model.boundary) {
    const SpMat& h = model.hamiltonian.m;
    const int n = space_.total_dim();
    if (boundary_.empty()) boundary_.assign(n, 0);
    std::vector<std::vector<int>> parts;
    if (mode == Mode::dense) {
        parts.emplace_back(n);
        std::iota(parts[0].begin(), parts[0].end(), 0);
    } else {
        std::vector<SpMat> diag;
        for (auto& [name, k] : model.conserved)
            if (is_diagonal(k.m)) diag.push_back(k.m);
        parts = refine_by_coupling(h, joint_partition(space_, diag));
    }
    blocks_.resize(parts.size());
    const long nb = static_cast<long>(parts.size());
#pragma omp parallel for schedule(dynamic)
    for (long b = 0; b < nb; ++b) {
        Block& blk = blocks_[b];
        blk.idx = parts[b];
        const int m = static_cast<int>(blk.idx.size());
        Mat sub(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) sub(i, j) = h.coeff(blk.idx[i], blk.idx[j]);
        Eigen::SelfAdjointEigenSolver<Mat> es(sub);
        blk.vecs = es.eigenvectors();
        blk.vals = es.eigenvalues();
    }
}

size_t Evolver::largest_block() const {
    size_t m = 0;
    for (auto& b : blocks_) m = std::max(m, b.idx.size());
    return m;
}

Vec Evolver::evolve(const Vec& psi, double t) const {
    Vec out = Vec::Zero(psi.size());
    for (auto& b : blocks_) {
        const int m = static_cast<int>(b.idx.size());
        Vec x(m);
        bool any = false;
        for (int i = 0; i < m; ++i) {
            x[i] = psi[b.idx[i]];
            any = any || x[i] != cd(0);
        }
        if (!any) continue;
        Vec c = b.vecs.adjoint() * x;
        for (int k = 0; k < m; ++k) c[k] *= std::exp(cd(0, -b.vals[k] * t));
        Vec y = b.vecs * c;
        for (int i = 0; i < m; ++i) out[b.idx[i]] = y[i];
    }
    return out;
}

StateVector Evolver::evolve(const StateVector& psi, double t) const {
    if (!(psi.space == space_)) throw ValidationError("evolve: space mismatch");
    return {space_, evolve(psi.amp, t), psi.tail_norm};
}

Operator Evolver::propagator(double t) const {
    std::vector<Triplet> trip;
    for (auto& b : blocks_) {
        const int m = static_cast<int>(b.idx.size());
        Vec ph(m);
        for (int k = 0; k < m; ++k) ph[k] = std::exp(cd(0, -b.vals[k] * t));
        Mat u = b.vecs * ph.asDiagonal() * b.vecs.adjoint();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (u(i, j) != cd(0)) trip.push_back({b.idx[i], b.idx[j], u(i, j)});
    }
    return from_triplets(space_, trip);
}

Operator propagator(const BuiltModel& model, double t) { return Evolver(model).propagator(t); }

const std::vector<cd>& TimeSeries::column(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw ValidationError("time series has no column '" + name + "'");
}

std::vector<double> TimeSeries::real_column(const std::string& name) const {
    const auto& c = column(name);
    std::vector<double> r(c.size());
    for (size_t i = 0; i < c.size(); ++i) r[i] = c[i].real();
    return r;
}

void TimeSeries::add_column(const std::string& name, std::vector<cd> v) {
    names.push_back(name);
    values.push_back(std::move(v));
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return t;
}

double boundary_population(const std::vector<char>& boundary, const Vec& psi) {
    double p = 0.0;
    for (int i = 0; i < psi.size(); ++i)
        if (boundary[i]) p += std::norm(psi[i]);
    return p;
}

namespace {

void check_times(const std::vector<double>& times) {
    for (size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw ValidationError("time grid must be strictly increasing");
}

void finish_guard(TimeSeries& ts, double guard) {
    double run = 0.0;
    for (size_t i = 0; i < ts.leaked_norm.size(); ++i) {
        run = std::max(run, ts.leaked_norm[i]);
        ts.leaked_norm[i] = run;
        if (run > guard) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "truncation guard exceeded at t = %.6g (leaked norm %.3e > %.1e)", ts.times[i], run, guard);
            throw GuardError(buf);
        }
    }
}

TimeSeries setup(const Evolver& ev, const StateVector& psi0, const std::vector<double>& times, const std::vector<Observable>& obs,
                 double guard) {
    if (!(psi0.space == ev.space())) throw ValidationError("evolve_series: space mismatch");
    if (psi0.tail_norm > guard) throw GuardError("initial state tail norm exceeds the guard");
    check_times(times);
    TimeSeries ts;
    ts.times = times;
    for (auto& o : obs) {
        if (!(o.op.space == ev.space())) throw ValidationError("observable '" + o.name + "' lives on another space");
        ts.add_column(o.name, std::vector<cd>(times.size()));
    }
    ts.leaked_norm.assign(times.size(), 0.0);
    return ts;
}

void sample(const Evolver& ev, const StateVector& psi0, const std::vector<Observable>& obs, TimeSeries& ts, size_t i) {
    Vec psi = ev.evolve(psi0.amp, ts.times[i]);
    for (size_t k = 0; k < obs.size(); ++k) ts.values[k][i] = psi.dot(matvec_serial(obs[k].op, psi));
    ts.leaked_norm[i] = boundary_population(ev.boundary(), psi);
}

}  // namespace

TimeSeries evolve_series(const Evolver& ev, const StateVector& psi0, const std::vector<double>& times, const std::vector<Observable>& obs,
                         double guard) {
    TimeSeries ts = setup(ev, psi0, times, obs, guard);
    const long n = static_cast<long>(times.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (long i = 0; i < n; ++i) sample(ev, psi0, obs, ts, static_cast<size_t>(i));
    finish_guard(ts, guard);
    return ts;
}

TimeSeries evolve_series_serial(const Evolver& ev, const StateVector& psi0, const std::vector<double>& times,
                                const std::vector<Observable>& obs, double guard) {
    TimeSeries ts = setup(ev, psi0, times, obs, guard);
    for (size_t i = 0; i < times.size(); ++i) sample(ev, psi0, obs, ts, i);
    finish_guard(ts, guard);
    return ts;
}

TimeSeries evolve_series(const BuiltModel& model, const StateVector& psi0, const std::vector<double>& times,
                         const std::vector<Observable>& obs, double guard) {
    return evolve_series(Evolver(model), psi0, times, obs, guard);
}

TimeSeries variance_series(const BuiltModel& model, const StateVector& psi0, const std::vector<double>& times, const Observable& op,
                           double guard) {
    Observable sq{op.name + "^2", op.op * op.op};
    TimeSeries ts = evolve_series(model, psi0, times, {op, sq}, guard);
    std::vector<cd> var(times.size());
    for (size_t i = 0; i < times.size(); ++i) {
        cd m = ts.values[0][i];
        var[i] = (ts.values[1][i] - m * m).real();
    }
    ts.add_column("var_" + op.name, std::move(var));
    return ts;
}

std::string format_double(double v) {
    if (v == 0) v = 0;  // drop negative zero
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string series_csv(const TimeSeries& ts, const std::string& config_hash) {
    std::string out = "# config " + config_hash + "\n";
    std::vector<bool> complex_col(ts.names.size(), false);
    out += "t";
    for (size_t k = 0; k < ts.names.size(); ++k) {
        for (auto& v : ts.values[k])
            if (std::abs(v.imag()) > 1e-12) complex_col[k] = true;
        out += complex_col[k] ? "," + ts.names[k] + "_re," + ts.names[k] + "_im" : "," + ts.names[k];
    }
    out += ",leaked_norm\n";
    for (size_t i = 0; i < ts.times.size(); ++i) {
        out += format_double(ts.times[i]);
        for (size_t k = 0; k < ts.names.size(); ++k) {
            out += "," + format_double(ts.values[k][i].real());
            if (complex_col[k]) out += "," + format_double(ts.values[k][i].imag());
        }
        out += "," + format_double(ts.leaked_norm.empty() ? 0.0 : ts.leaked_norm[i]) + "\n";
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path);
    f << text;
}

}  // namespace bimode
