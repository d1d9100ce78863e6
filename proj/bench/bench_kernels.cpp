// Serial reference kernels against their OpenMP versions. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <random>

#include "bimode/lindblad.hpp"

using namespace bimode;

namespace {

BuiltModel parity_model(int cutoff) {
    ModelSpec m;
    m.tag = "DegenerateTwoPhoton";
    m.params = {{"lambda", 1.0}};
    m.options = {{"preset", "parity"}};
    m.interaction_picture = true;
    return build_model(m, build_space(2, cutoff, cutoff));
}

Mat random_rho(int n) {
    std::mt19937_64 g(5);
    std::normal_distribution<double> d;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cd(d(g), d(g));
    Mat r = a * a.adjoint();
    return r / r.trace();
}

void BM_matvec(benchmark::State& st) {
    auto model = parity_model(60);
    Vec x = Vec::Random(model.hamiltonian.dim());
    for (auto _ : st) benchmark::DoNotOptimize(st.range(0) ? matvec(model.hamiltonian, x) : matvec_serial(model.hamiltonian, x));
}
BENCHMARK(BM_matvec)->Arg(0)->Arg(1);

void BM_lindblad_rhs(benchmark::State& st) {
    auto s = build_space(2, 8, 8);
    auto A = mode_op(s, 1, Ladder::annihilate) * mode_op(s, 2, Ladder::annihilate);
    LindbladParams p;
    p.recoil = Recoil::uniform;
    p.k_eta = 0.3;
    Liouvillian lv(dark_hamiltonian(A, 1.0, 1.0, s), p);
    Mat r = random_rho(s.total_dim());
    for (auto _ : st) benchmark::DoNotOptimize(st.range(0) ? lv.rhs(r) : lv.rhs_serial(r));
}
BENCHMARK(BM_lindblad_rhs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_spatial_density(benchmark::State& st) {
    auto s = build_space(2, 21, 21);
    auto psi = superpose({{1.0, circular_fock(s, 21, 0, 0)}, {1.0, circular_fock(s, 0, 21, 0)}});
    auto grid = square_grid(8.0, 121);
    for (auto _ : st) benchmark::DoNotOptimize(st.range(0) ? spatial_density(psi, grid) : spatial_density_serial(psi, grid));
}
BENCHMARK(BM_spatial_density)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_series(benchmark::State& st) {
    auto s = build_space(2, 21, 21);
    Evolver ev(parity_ion_model(1.0, s));
    auto psi = rotated_fock(s, 21, 0.785, 0);
    std::vector<Observable> obs = {{"J1", schwinger(s, 1)}};
    auto times = linspace(0, 60, 400);
    for (auto _ : st) benchmark::DoNotOptimize(st.range(0) ? evolve_series(ev, psi, times, obs) : evolve_series_serial(ev, psi, times, obs));
}
BENCHMARK(BM_series)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
