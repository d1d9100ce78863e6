#include "bimode/models.hpp"

#include <cmath>
#include <numbers>

namespace bimode {

double ModelSpec::real(const std::string& name) const {
    cd v = value(name);
    if (std::abs(v.imag()) > 1e-15) throw ValidationError("parameter '" + name + "' of " + tag + " must be real");
    return v.real();
}

cd ModelSpec::value(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw ValidationError("model " + tag + ": missing parameter '" + name + "'");
    return it->second;
}

double ModelSpec::real_or(const std::string& name, double dflt) const { return params.count(name) ? real(name) : dflt; }
cd ModelSpec::value_or(const std::string& name, cd dflt) const { return params.count(name) ? value(name) : dflt; }

const std::vector<std::string>& model_tags() {
    static const std::vector<std::string> tags = {"JC",      "Lambda3",          "DegenerateOnePhoton", "Raman",      "RamanStark",
                                                  "NondegTwoPhoton", "IntensityDependent", "DegenerateTwoPhoton", "IonSideband1D",
                                                  "Ion2D",   "QndCoupler",       "BimodalCatCoupler",   "DarkState"};
    return tags;
}

int photon_change(const Operator& op) {
    int d = 0;
    for (int r = 0; r < op.m.outerSize(); ++r)
        for (SpMat::InnerIterator it(op.m, r); it; ++it) {
            if (it.value() == cd(0)) continue;
            auto a = op.space.unindex(r), b = op.space.unindex(static_cast<int>(it.col()));
            d = std::max({d, std::abs(a.n1 - b.n1), std::abs(a.n2 - b.n2)});
        }
    return d;
}

double conservation_residual(const BuiltModel& model, const Operator& k) {
    const auto& s = model.hamiltonian.space;
    const int d = std::max(model.max_photon_change, photon_change(k));
    Operator c = commutator(model.hamiltonian, k);
    double mx = 0.0;
    for (int r = 0; r < c.m.outerSize(); ++r) {
        auto a = s.unindex(r);
        if (a.n1 > s.cutoff1 - d || a.n2 > s.cutoff2 - d) continue;
        for (SpMat::InnerIterator it(c.m, r); it; ++it) {
            auto b = s.unindex(static_cast<int>(it.col()));
            if (b.n1 > s.cutoff1 - d || b.n2 > s.cutoff2 - d) continue;
            mx = std::max(mx, std::abs(it.value()));
        }
    }
    return mx;
}

namespace {

struct Ops {
    HilbertSpace s;
    Operator a1, a2, n1, n2, I;
    explicit Ops(const HilbertSpace& sp)
        : s(sp),
          a1(mode_op(sp, 1, Ladder::annihilate)),
          a2(mode_op(sp, 2, Ladder::annihilate)),
          n1(mode_op(sp, 1, Ladder::number)),
          n2(mode_op(sp, 2, Ladder::number)),
          I(identity_op(sp)) {}
    Operator sz() const { return spin_op(s, Spin::Sz); }
    Operator sp() const { return spin_op(s, Spin::Splus); }
    Operator sm() const { return spin_op(s, Spin::Sminus); }
    Operator pplus() const { return projector_op(s, 1, 1); }
};

Operator hc(const Operator& x) { return x + x.adjoint(); }

void require_atoms(const ModelSpec& spec, const HilbertSpace& s, int want) {
    if (s.atom_dim != want)
        throw ValidationError("model " + spec.tag + " requires atom_dim = " + std::to_string(want) + ", got " + std::to_string(s.atom_dim));
}

bool interaction(const ModelSpec& spec, bool dflt) { return spec.interaction_picture.value_or(dflt); }

// g_k of the two-dimensional ion Hamiltonian on one mode.
Operator ion_factor(const HilbertSpace& s, int mode, int m, double eta, Regime regime) {
    Operator a = mode_op(s, mode, Ladder::annihilate);
    if (regime == Regime::lamb_dicke) return m >= 0 ? power(a.adjoint(), m) : power(a, -m);
    const int k = std::abs(m);
    Operator f = f_k_operator(s, mode, k, eta);
    cd ik = std::pow(cd(0, eta), k);
    if (m >= 0) return ik * (power(a.adjoint(), m) * f);
    return ik * (f * power(a, k));
}

BuiltModel ion_raw(int m_x, int m_y, double eta_x, double eta_y, double omega, double phase, int eps, Regime regime, const HilbertSpace& s) {
    if (s.atom_dim != 2) throw ValidationError("ion models require atom_dim = 2");
    if (eps != 0 && eps != 1) throw ValidationError("epsilon must be 0 or 1");
    if (std::abs(m_x) > s.cutoff1 || std::abs(m_y) > s.cutoff2) throw ValidationError("|m_x|, |m_y| must not exceed the cutoffs");
    cd pre = omega * std::exp(cd(0, phase));
    if (regime == Regime::lamb_dicke) pre *= std::pow(cd(0, eta_x), std::abs(m_x)) * std::pow(cd(0, eta_y), std::abs(m_y));
    Operator term = ion_factor(s, 1, m_x, eta_x, regime) * ion_factor(s, 2, m_y, eta_y, regime);
    if (eps == 1) term = term * spin_op(s, Spin::Splus);
    BuiltModel b;
    b.tag = "Ion2D";
    b.hamiltonian = hc(pre * term);
    Ops o(s);
    if (eps == 1) {
        b.conserved.push_back({"Kx", o.n1 - double(m_x) * o.pplus()});
        b.conserved.push_back({"Ky", o.n2 - double(m_y) * o.pplus()});
    } else {
        b.conserved.push_back({"Sz", o.sz()});
        if (m_x == 0 && m_y == 0) {
            b.conserved.push_back({"n1", o.n1});
            b.conserved.push_back({"n2", o.n2});
        } else {
            b.conserved.push_back({"Qmix", double(m_y) * o.n1 - double(m_x) * o.n2});
        }
    }
    return b;
}

BuiltModel build_raw(const ModelSpec& spec, const HilbertSpace& s) {
    const std::string& t = spec.tag;
    BuiltModel b;
    b.tag = t;
    if (t == "Lambda3") {
        require_atoms(spec, s, 3);
        Ops o(s);
        cd g1 = spec.value("g1"), g2 = spec.value("g2");
        b.hamiltonian = hc(g1 * (o.a1.adjoint() * projector_op(s, 0, 1))) + hc(g2 * (o.a2.adjoint() * projector_op(s, 2, 1)));
        if (!interaction(spec, false)) {
            b.hamiltonian = b.hamiltonian + spec.real("omega1") * o.n1 + spec.real("omega2") * o.n2 + spec.real("E0") * projector_op(s, 0, 0) +
                            spec.real("E1") * projector_op(s, 1, 1) + spec.real("E2") * projector_op(s, 2, 2);
        }
        b.conserved.push_back({"N", o.n1 + o.n2 + projector_op(s, 1, 1)});
        b.conserved.push_back({"K1", o.n1 - projector_op(s, 0, 0)});
        b.conserved.push_back({"K2", o.n2 - projector_op(s, 2, 2)});
        return b;
    }
    require_atoms(spec, s, 2);
    Ops o(s);
    const bool ip = interaction(spec, false);
    if (t == "JC") {
        cd lam = spec.value("lambda");
        b.hamiltonian = hc(lam * (o.a1.adjoint() * o.sm()));
        if (!ip) b.hamiltonian = b.hamiltonian + spec.real("omega0") * o.sz() + spec.real("omega") * o.n1;
        b.conserved.push_back({"N", o.n1 + o.sz() + 0.5 * o.I});
    } else if (t == "DegenerateOnePhoton") {
        double g1 = spec.real("g1"), g2 = spec.real("g2");
        double p1 = spec.real_or("phi1", 0.0), p2 = spec.real_or("phi2", 0.0);
        b.hamiltonian = hc(g1 * std::exp(cd(0, -p1)) * (o.a1.adjoint() * o.sm())) + hc(g2 * std::exp(cd(0, -p2)) * (o.a2.adjoint() * o.sm()));
        if (!ip) b.hamiltonian = b.hamiltonian + spec.real("omega") * (o.n1 + o.n2) + spec.real("omega0") * o.sz();
        b.conserved.push_back({"N", o.n1 + o.n2 + o.sz() + 0.5 * o.I});
        if (g1 * g1 + g2 * g2 > 0) {
            Operator mix = hc(std::exp(cd(0, p2 - p1)) * (o.a1.adjoint() * o.a2));
            b.conserved.push_back({"C", (1.0 / (g1 * g1 + g2 * g2)) * (g2 * g2 * o.n1 + g1 * g1 * o.n2 - g1 * g2 * mix)});
        }
    } else if (t == "Raman" || t == "RamanStark") {
        cd gr = spec.value("gR");
        b.hamiltonian = hc(gr * (o.a1 * o.a2.adjoint() * o.sp()));
        if (!ip) b.hamiltonian = b.hamiltonian + spec.real("omega1") * o.n1 + spec.real("omega2") * o.n2;
        if (t == "Raman") {
            if (!ip) b.hamiltonian = b.hamiltonian + spec.real("omega0") * o.sz();
        } else {
            // Upper level |+> carries the mode-2 Stark shift, lower level |-> the mode-1 shift.
            double g1 = spec.real("g1"), g2 = spec.real("g2"), delta = spec.real("delta");
            if (delta == 0) throw ValidationError("RamanStark: delta must be nonzero");
            Operator pp = o.pplus(), pm = projector_op(s, 0, 0);
            Operator stark = (g2 * g2 / delta) * (o.n2 * pp) + (g1 * g1 / delta) * (o.n1 * pm);
            if (!ip) stark = stark + spec.real("omega0") * o.sz();
            b.hamiltonian = b.hamiltonian + stark;
        }
        b.conserved.push_back({"N", o.n1 + o.n2});
        b.conserved.push_back({"M", o.n1 + o.sz()});
    } else if (t == "NondegTwoPhoton" || t == "IntensityDependent") {
        cd lam = spec.value("lambda");
        Operator level, coupling;
        if (t == "NondegTwoPhoton") {
            double b1 = spec.real_or("beta1", 0.0), b2 = spec.real_or("beta2", 0.0);
            double w0 = ip ? 0.0 : spec.real("omega0");
            level = diagonal_op(s, [&](int a, int n1, int n2) { return cd((w0 + b2 * n2 - b1 * n1) * (a == 1 ? 0.5 : -0.5)); });
            coupling = o.a1 * o.a2 * o.sp();
        } else {
            double w0 = spec.real("omega0");
            std::function<double(int, int)> G = spec.G, F = spec.F;
            if (!G) {
                double c0 = spec.real_or("G0", 1.0), c1 = spec.real_or("G1", 0.0), c2 = spec.real_or("G2", 0.0);
                G = [=](int n1, int n2) { return c0 + c1 * n1 + c2 * n2; };
            }
            if (!F) {
                auto it = spec.options.find("F");
                std::string kind = it == spec.options.end() ? "identity" : it->second;
                if (kind == "identity") F = [](int, int) { return 1.0; };
                else if (kind == "sqrt_product") F = [](int n1, int n2) { return std::sqrt(double(n1) * n2); };
                else throw ValidationError("IntensityDependent: unknown F '" + kind + "'");
            }
            level = diagonal_op(s, [&](int a, int n1, int n2) { return cd(w0 * G(n1, n2) * (a == 1 ? 0.5 : -0.5)); });
            coupling = o.a1 * o.a2 * diagonal_op(s, [&](int, int n1, int n2) { return cd(F(n1, n2)); }) * o.sp();
        }
        b.hamiltonian = level + hc(lam * coupling);
        if (!ip) b.hamiltonian = b.hamiltonian + spec.real("omega1") * o.n1 + spec.real("omega2") * o.n2;
        b.conserved.push_back({"N", o.n1 + o.n2 + 2.0 * o.sz() + o.I});
        b.conserved.push_back({"D", o.n1 - o.n2});
    } else if (t == "DegenerateTwoPhoton") {
        auto it = spec.options.find("preset");
        const bool parity = it != spec.options.end() && it->second == "parity";
        if (it != spec.options.end() && !parity) throw ValidationError("DegenerateTwoPhoton: unknown preset '" + it->second + "'");
        cd l1, l2, g;
        if (parity) {
            l1 = spec.value("lambda");
            l2 = -l1;
            g = 0;
        } else {
            l1 = spec.value("lambda1");
            l2 = spec.value("lambda2");
            g = spec.value("g");
        }
        cd r1 = spec.value_or("r1", 0.0), r2 = spec.value_or("r2", 0.0);
        double sc = spec.real_or("s", 0.0);
        Operator exch = o.a1 * o.a2.adjoint();
        Operator pump = l1 * (o.a1 * o.a1) + l2 * (o.a2 * o.a2) + g * (o.a1 * o.a2);
        b.hamiltonian = hc(r1 * exch) + hc(r2 * (exch * o.sz())) + sc * (o.sz() * (o.n1 + o.n2)) + hc(pump * o.sp());
        if (!ip) b.hamiltonian = b.hamiltonian + spec.real("omega0") * o.sz() + spec.real("omega") * (o.n1 + o.n2);
        b.conserved.push_back({"N", o.n1 + o.n2 + 2.0 * o.sz() + o.I});
        if (std::abs(g) < 1e-15 && std::abs(l1 + l2) < 1e-15 && std::abs(r1.imag()) < 1e-15 && std::abs(r2.imag()) < 1e-15)
            b.conserved.push_back({"C", hc(o.a1.adjoint() * o.a2)});
    } else if (t == "IonSideband1D" || t == "Ion2D") {
        auto it = spec.options.find("regime");
        Regime regime = Regime::full;
        if (it != spec.options.end()) {
            if (it->second == "lamb_dicke") regime = Regime::lamb_dicke;
            else if (it->second != "full") throw ValidationError("unknown regime '" + it->second + "'");
        }
        int eps = static_cast<int>(std::lround(spec.real_or("epsilon", 1.0)));
        double omega = spec.real("Omega"), phase = spec.real_or("Phi", 0.0);
        if (t == "IonSideband1D") {
            // k > 0: red sideband, sigma+ f_k (i eta a)^k + h.c.; k < 0: blue.
            int k = static_cast<int>(std::lround(spec.real("k")));
            b = ion_raw(-k, 0, spec.real("eta"), 0.0, omega, phase, eps, regime, s);
            b.conserved.clear();
            if (eps == 1) b.conserved.push_back({"K", o.n1 + double(k) * o.pplus()});
            else b.conserved.push_back({"Sz", o.sz()});
        } else {
            int mx = static_cast<int>(std::lround(spec.real("m_x"))), my = static_cast<int>(std::lround(spec.real("m_y")));
            b = ion_raw(mx, my, spec.real("eta_x"), spec.real("eta_y"), omega, phase, eps, regime, s);
        }
        b.tag = t;
    } else if (t == "QndCoupler") {
        double lx = spec.real("Omega_Lx"), ly = spec.real("Omega_Ly"), chi = spec.real("chi");
        if (lx == ly) throw ValidationError("QndCoupler: Omega_Lx = Omega_Ly is a degenerate drive");
        Operator absq = diagonal_op(s, [&](int, int n1, int n2) { return cd(std::abs(lx - ly - chi * (n1 - n2))); });
        b.hamiltonian = hc(absq * o.sp());
        b.conserved.push_back({"Q", o.n1 - o.n2});
        b.conserved.push_back({"Ntot", o.n1 + o.n2});
    } else if (t == "BimodalCatCoupler") {
        double chi = spec.real("chi");
        b.hamiltonian = (-chi) * ((o.n1 - o.n2) * (o.sp() + o.sm()));
        b.conserved.push_back({"Q", o.n1 - o.n2});
        b.conserved.push_back({"Ntot", o.n1 + o.n2});
    } else if (t == "DarkState") {
        // Vibrational operator from options: pair (a_x a_y) or pair_squared ((a_x a_y)^2).
        auto it = spec.options.find("A");
        std::string kind = it == spec.options.end() ? "pair" : it->second;
        Operator A;
        if (kind == "pair") A = o.a1 * o.a2;
        else if (kind == "pair_squared") A = power(o.a1 * o.a2, 2);
        else throw ValidationError("DarkState: unknown A '" + kind + "'");
        auto v = spec.options.count("variant") && spec.options.at("variant") == "sigma_minus" ? DarkVariant::sigma_minus : DarkVariant::sigma_plus;
        return dark_hamiltonian(A, spec.value("epsilon"), spec.real("Omega"), s, v);
    } else {
        throw ValidationError("unknown model tag '" + t + "'");
    }
    return b;
}

std::vector<char> boundary_by_change(const HilbertSpace& s, int d) {
    std::vector<char> out(s.total_dim(), 0);
    if (d == 0) return out;
    for (int i = 0; i < s.total_dim(); ++i) {
        auto l = s.unindex(i);
        out[i] = (l.n1 > s.cutoff1 - d || l.n2 > s.cutoff2 - d) ? 1 : 0;
    }
    return out;
}

// Mark small-space states that the same Hamiltonian on a larger space couples beyond the cutoff.
template <class Builder>
std::vector<char> boundary_from_enlarged(const HilbertSpace& s, int d, Builder&& build) {
    std::vector<char> out(s.total_dim(), 0);
    if (d == 0) return out;
    const int pad = 2 * d + 1;
    HilbertSpace big{s.atom_dim, s.cutoff1 + pad, s.cutoff2 + pad};
    Operator h = build(big);
    for (int r = 0; r < h.m.outerSize(); ++r) {
        auto lr = big.unindex(r);
        const bool r_in = lr.n1 <= s.cutoff1 && lr.n2 <= s.cutoff2;
        if (r_in) continue;
        for (SpMat::InnerIterator it(h.m, r); it; ++it) {
            if (it.value() == cd(0)) continue;
            auto lc = big.unindex(static_cast<int>(it.col()));
            if (lc.n1 <= s.cutoff1 && lc.n2 <= s.cutoff2) out[s.index(lc.atom, lc.n1, lc.n2)] = 1;
        }
    }
    return out;
}

void finish(BuiltModel& b) {
    if (!is_hermitian(b.hamiltonian, 1e-12)) throw ValidationError("model " + b.tag + " produced a non-Hermitian Hamiltonian");
    b.max_photon_change = photon_change(b.hamiltonian);
}

}  // namespace

BuiltModel build_model(const ModelSpec& spec, const HilbertSpace& space) {
    if (spec.tag == "IonSideband1D" || spec.tag == "Ion2D") {
        if (spec.interaction_picture && !*spec.interaction_picture) throw ValidationError("ion models are defined in the interaction picture only");
    }
    BuiltModel b = build_raw(spec, space);
    finish(b);
    if (spec.tag == "DarkState") return b;
    b.boundary = boundary_from_enlarged(space, b.max_photon_change, [&](const HilbertSpace& big) { return build_raw(spec, big).hamiltonian; });
    return b;
}

BuiltModel ion_effective(int m_x, int m_y, double eta_x, double eta_y, double omega, double phase, int epsilon, Regime regime,
                         const HilbertSpace& space) {
    BuiltModel b = ion_raw(m_x, m_y, eta_x, eta_y, omega, phase, epsilon, regime, space);
    finish(b);
    b.boundary = boundary_from_enlarged(space, b.max_photon_change, [&](const HilbertSpace& big) {
        return ion_raw(m_x, m_y, eta_x, eta_y, omega, phase, epsilon, regime, big).hamiltonian;
    });
    return b;
}

BuiltModel parity_ion_model(double omega_prime, const HilbertSpace& space) {
    return ion_effective(-1, -1, 1.0, 1.0, omega_prime, std::numbers::pi, 1, Regime::lamb_dicke, space);
}

BuiltModel qnd_model(double omega_lx, double omega_ly, double chi, const HilbertSpace& space) {
    ModelSpec spec{"QndCoupler", {{"Omega_Lx", omega_lx}, {"Omega_Ly", omega_ly}, {"chi", chi}}, {}, {}, {}, {}};
    return build_model(spec, space);
}

BuiltModel dark_hamiltonian(const Operator& a_vib, cd eigenvalue, double omega, const HilbertSpace& space, DarkVariant variant) {
    if (space.atom_dim != 2) throw ValidationError("dark_hamiltonian requires atom_dim = 2");
    if (!(a_vib.space == space)) throw ValidationError("dark_hamiltonian: A_vib space mismatch");
    // A_vib must not touch the atom: no entries between different atom levels.
    for (int r = 0; r < a_vib.m.outerSize(); ++r)
        for (SpMat::InnerIterator it(a_vib.m, r); it; ++it)
            if (space.unindex(r).atom != space.unindex(static_cast<int>(it.col())).atom && it.value() != cd(0))
                throw ValidationError("dark_hamiltonian: A_vib acts on the atom");
    Operator shifted = a_vib - eigenvalue * identity_op(space);
    Operator s = spin_op(space, variant == DarkVariant::sigma_plus ? Spin::Splus : Spin::Sminus);
    Operator term = omega * (shifted * s);
    BuiltModel b;
    b.tag = "DarkState";
    b.hamiltonian = term + term.adjoint();
    finish(b);
    Operator q = mode_op(space, 1, Ladder::number) - mode_op(space, 2, Ladder::number);
    if (commutator(a_vib, q).max_abs() < 1e-12) b.conserved.push_back({"Q", q});
    b.boundary = boundary_by_change(space, b.max_photon_change);
    return b;
}

TrapCheck validate_trap(double nu_x, double nu_y, double nu_z) {
    TrapCheck c;
    if (nu_x <= 0 || nu_y <= 0 || nu_z <= 0) {
        c.diagnostics = "trap frequencies must be positive";
        return c;
    }
    c.ok = std::abs(nu_x + nu_y - nu_z) <= 1e-9 * nu_z;
    if (!c.ok) c.diagnostics = "nu_x + nu_y != nu_z (mismatch " + std::to_string(nu_x + nu_y - nu_z) + ")";
    const double r = nu_x / nu_y;
    for (int q = 1; q <= 10 && !c.commensurate; ++q) {
        double p = std::round(r * q);
        if (p >= 1 && std::abs(r * q - p) <= 1e-9 * q) c.commensurate = true;
    }
    if (c.commensurate) {
        if (!c.diagnostics.empty()) c.diagnostics += "; ";
        c.diagnostics += std::abs(r - 1.0) < 1e-12 ? "isotropic trap: resonant terms may appear" : "commensurate nu_x/nu_y: resonant terms may appear";
    }
    return c;
}

}  // namespace bimode
