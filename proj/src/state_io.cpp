#include <algorithm>
#include <cmath>
#include <map>

#include "bimode/states.hpp"

namespace bimode {

namespace {

cd parse_complex(const nlohmann::json& v, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) return {v[0].get<double>(), v[1].get<double>()};
    if (v.is_object() && v.contains("abs")) return std::polar(v.at("abs").get<double>(), v.value("arg", 0.0));
    throw ValidationError("'" + key + "' must be a number, [re, im] or {abs, arg}");
}

template <class T>
T field(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ValidationError("initial_state: missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("initial_state: field '" + key + "' has the wrong type");
    }
}

cd cfield(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ValidationError("initial_state: missing field '" + key + "'");
    return parse_complex(j.at(key), key);
}

int atom_field(const nlohmann::json& j) {
    if (!j.contains("atom")) return 0;
    const auto& a = j.at("atom");
    if (a.is_string()) {
        std::string v = a.get<std::string>();
        if (v == "-" || v == "ground") return 0;
        if (v == "+" || v == "excited") return 1;
        throw ValidationError("initial_state: atom must be '-', '+' or a level index");
    }
    return a.get<int>();
}

}  // namespace

StateVector make_state(const HilbertSpace& s, const nlohmann::json& j) {
    static const std::map<std::string, std::vector<std::string>> allowed = {
        {"fock", {"n1", "n2"}},
        {"coherent", {"alpha1", "alpha2"}},
        {"su2_coherent", {"tau", "two_j"}},
        {"pair_coherent", {"xi", "q"}},
        {"squeezed", {"alpha", "xi", "mode"}},
        {"cat", {"alpha", "phi", "mode"}},
        {"pair_cat", {"xi", "q", "phi"}},
        {"rotated_fock", {"N", "theta"}},
        {"circular_fock", {"n_r", "n_l"}},
        {"epr_pair", {"phi"}},
    };
    const std::string kind = field<std::string>(j, "kind");
    auto it = allowed.find(kind);
    if (it == allowed.end()) throw ValidationError("initial_state: unknown kind '" + kind + "'");
    for (auto& [k, v] : j.items()) {
        if (k == "kind" || k == "atom") continue;
        if (std::find(it->second.begin(), it->second.end(), k) == it->second.end())
            throw ValidationError("initial_state: unknown key '" + k + "' for kind " + kind);
    }
    const int atom = atom_field(j);
    if (kind == "fock") return fock(s, atom, field<int>(j, "n1"), field<int>(j, "n2"));
    if (kind == "coherent") return coherent(s, cfield(j, "alpha1"), j.contains("alpha2") ? cfield(j, "alpha2") : cd(0), atom);
    if (kind == "su2_coherent") return su2_coherent(s, cfield(j, "tau"), field<int>(j, "two_j"), atom);
    if (kind == "pair_coherent") return pair_coherent(s, cfield(j, "xi"), field<int>(j, "q"), atom);
    if (kind == "squeezed") return squeezed(s, cfield(j, "alpha"), cfield(j, "xi"), j.value("mode", 1), atom);
    if (kind == "cat") return cat(s, cfield(j, "alpha"), j.value("phi", 0.0), j.value("mode", 1), atom);
    if (kind == "pair_cat") return pair_cat(s, cfield(j, "xi"), field<int>(j, "q"), j.value("phi", 0.0), atom);
    if (kind == "rotated_fock") return rotated_fock(s, field<int>(j, "N"), field<double>(j, "theta"), atom);
    if (kind == "circular_fock") return circular_fock(s, field<int>(j, "n_r"), field<int>(j, "n_l"), atom);
    return epr_pair(s, j.value("phi", 0.0), atom);
}

nlohmann::json state_to_json(const StateVector& psi) {
    nlohmann::json j;
    j["atom_dim"] = psi.space.atom_dim;
    j["cutoff1"] = psi.space.cutoff1;
    j["cutoff2"] = psi.space.cutoff2;
    j["tail_norm"] = psi.tail_norm;
    auto& a = j["amplitudes"] = nlohmann::json::array();
    for (int i = 0; i < psi.amp.size(); ++i) a.push_back({psi.amp[i].real(), psi.amp[i].imag()});
    return j;
}

StateVector state_from_json(const nlohmann::json& j) {
    HilbertSpace s = build_space(j.at("atom_dim").get<int>(), j.at("cutoff1").get<int>(), j.at("cutoff2").get<int>());
    const auto& a = j.at("amplitudes");
    if (static_cast<int>(a.size()) != s.total_dim()) throw ValidationError("state JSON: amplitude count does not match the header");
    StateVector psi{s, Vec(s.total_dim()), j.value("tail_norm", 0.0)};
    for (int i = 0; i < s.total_dim(); ++i) psi.amp[i] = {a[i][0].get<double>(), a[i][1].get<double>()};
    return psi;
}

}  // namespace bimode
