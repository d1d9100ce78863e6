#include "bimode/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "bimode/scenarios.hpp"

namespace bimode {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json scalar_to_json(const YAML::Node& n) {
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted
    if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
    if (s == "true" || s == "True" || s == "TRUE") return true;
    if (s == "false" || s == "False" || s == "FALSE") return false;
    long long i = 0;
    const char* end = s.data() + s.size();
    const char* first = s.data() + (s[0] == '+' ? 1 : 0);
    if (auto [p, ec] = std::from_chars(first, end, i); ec == std::errc() && p == end) return i;
    double d = 0;
    if (auto [p, ec] = std::from_chars(first, end, d); ec == std::errc() && p == end) return d;
    if (s == ".inf" || s == "+.inf") return HUGE_VAL;
    if (s == "-.inf") return -HUGE_VAL;
    return s;
}

json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar:
            return scalar_to_json(n);
        case YAML::NodeType::Sequence: {
            json a = json::array();
            for (const auto& x : n) a.push_back(yaml_to_json(x));
            return a;
        }
        case YAML::NodeType::Map: {
            json o = json::object();
            for (const auto& kv : n) {
                auto key = kv.first.as<std::string>();
                if (o.contains(key)) throw ValidationError("duplicate key '" + key + "'");
                o[key] = yaml_to_json(kv.second);
            }
            return o;
        }
    }
    return nullptr;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool same_kind(const json& dflt, const json& v) {
    if (dflt.is_number()) {
        if (dflt.is_number_integer()) return v.is_number_integer();
        return v.is_number();
    }
    if (dflt.is_array()) return v.is_number_integer() || (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const json& x) {
                                                               return x.is_number_integer();
                                                           }));
    if (dflt.is_string()) return v.is_string();
    if (dflt.is_boolean()) return v.is_boolean();
    return true;
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ValidationError(what + " must be a number");
    return j.get<double>();
}

void cutoff_warning(std::vector<std::string>& w, const std::string& what, double abs_alpha, int cutoff) {
    const int need = recommended_cutoff(abs_alpha);
    if (abs_alpha > 0 && cutoff < need)
        w.push_back(what + ": cutoff " + std::to_string(cutoff) + " is below the recommended " + std::to_string(need) + " for |alpha| = " +
                    format_double(abs_alpha));
}

void state_cutoff_warnings(const json& st, const HilbertSpace& s, std::vector<std::string>& w) {
    const std::string kind = st.value("kind", "");
    auto amp = [&](const char* key) { return st.contains(key) ? std::abs(complex_from_json(st.at(key))) : 0.0; };
    if (kind == "coherent") {
        cutoff_warning(w, "initial_state.alpha1", amp("alpha1"), s.cutoff1);
        cutoff_warning(w, "initial_state.alpha2", amp("alpha2"), s.cutoff2);
    } else if (kind == "cat" || kind == "squeezed") {
        int mode = st.value("mode", 1);
        cutoff_warning(w, "initial_state.alpha", amp("alpha"), mode == 1 ? s.cutoff1 : s.cutoff2);
    }
}

void check_generic(json& cfg, Validated& v) {
    for (const char* t : {"model", "space", "initial_state", "times"})
        if (!cfg.contains(t)) throw ValidationError(std::string("missing table '") + t + "'");
    ModelSpec spec = model_from_json(cfg.at("model"));
    HilbertSpace space = space_from_json(cfg.at("space"), spec);
    BuiltModel model = build_model(spec, space);
    times_from_json(cfg.at("times"));
    if (!cfg.at("initial_state").is_object()) throw ValidationError("initial_state must be a table");
    state_cutoff_warnings(cfg.at("initial_state"), space, v.warnings);
    try {
        make_state(space, cfg.at("initial_state"));
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        for (const auto& w : v.warnings) msg += "; " + w;
        throw ValidationError(msg);
    }
    if (!cfg.contains("observables") || cfg.at("observables").is_null() || cfg.at("observables").empty()) {
        json d = default_observables(space);
        v.notices.push_back("no observables given; using " + d.dump());
        cfg["observables"] = d;
    }
    if (!cfg.at("observables").is_array()) throw ValidationError("observables must be a list");
    for (const auto& o : cfg.at("observables")) {
        if (!o.is_string()) throw ValidationError("observables must be strings");
        std::string n = o.get<std::string>();
        named_observable(n.rfind("var:", 0) == 0 ? n.substr(4) : n, model);
    }
}

struct Job {
    std::string source;
    json config;
    std::string out_dir;
    // filled by the worker
    int code = 0;
    std::string log, err;
};

int exit_code_for(const std::exception_ptr& e, std::string& msg) {
    try {
        std::rethrow_exception(e);
    } catch (const ValidationError& x) {
        msg = std::string("validation error: ") + x.what();
        return 2;
    } catch (const GuardError& x) {
        msg = std::string("guard tripped: ") + x.what();
        return 3;
    } catch (const std::exception& x) {
        msg = std::string("error: ") + x.what();
        return 1;
    }
}

void run_job(Job& job) {
    try {
        Validated v = validate_config(job.config);
        for (const auto& w : v.warnings) job.err += "warning: " + w + "\n";
        for (const auto& n : v.notices) job.err += "notice: " + n + "\n";
        const std::string name = v.config.at("scenario").get<std::string>();
        RunContext ctx{config_hash(v.config), v.config.at("guard").get<double>(), v.config.at("seed").get<long>()};
        ScenarioOutput out = run_scenario(name, v.config, ctx);
        fs::create_directories(job.out_dir);
        for (const auto& [file, text] : out.files) write_text((fs::path(job.out_dir) / file).string(), text);
        json summary = {{"scenario", name}, {"config_hash", ctx.config_hash}, {"config", v.config}, {"results", out.summary}};
        summary["config"].erase("output_dir");
        summary["warnings"] = v.warnings;
        write_text((fs::path(job.out_dir) / "summary.json").string(), summary.dump(2) + "\n");
        job.log += name + " [" + ctx.config_hash + "] -> " + job.out_dir + " (" + std::to_string(out.files.size() + 1) + " files)\n";
    } catch (...) {
        std::string msg;
        job.code = exit_code_for(std::current_exception(), msg);
        job.err += job.source + ": " + msg + "\n";
    }
}

std::string preset_path(const std::string& scenario) { return (fs::path(BIMODE_CONFIG_DIR) / (scenario + ".yaml")).string(); }

// Loads every config and applies --set, --guard and --seed.
std::vector<Job> collect_jobs(const std::vector<std::string>& files, const std::vector<std::string>& scenarios, const std::vector<std::string>& sets,
                              const std::optional<double>& guard, const std::optional<long>& seed) {
    std::vector<Job> jobs;
    auto add = [&](const std::string& source, json cfg) {
        if (!cfg.is_object()) throw ValidationError(source + ": config must be a mapping");
        for (const auto& s : sets) apply_set(cfg, s);
        if (guard) cfg["guard"] = *guard;
        if (seed) cfg["seed"] = *seed;
        jobs.push_back({source, std::move(cfg), "", 0, "", ""});
    };
    for (const auto& f : files) add(f, load_config_file(f));
    for (const auto& s : scenarios) {
        const std::string p = preset_path(s);
        if (!fs::exists(p)) throw ValidationError("no preset for scenario '" + s + "'");
        add(p, load_config_file(p));
    }
    return jobs;
}

void assign_output_dirs(std::vector<Job>& jobs, const std::string& flag_dir) {
    const char* env = std::getenv("BIMODE_OUTPUT_DIR");
    const std::string base = !flag_dir.empty() ? flag_dir : (env && *env ? env : "");
    std::map<std::string, int> seen;
    for (auto& j : jobs) {
        std::string name = j.config.value("scenario", std::string("unknown"));
        if (!j.config.at("scenario").is_string()) name = "unknown";
        int k = seen[name]++;
        std::string leaf = k == 0 ? name : name + "_" + std::to_string(k);
        if (!base.empty())
            j.out_dir = jobs.size() == 1 ? base : (fs::path(base) / leaf).string();
        else if (j.config.contains("output_dir") && j.config.at("output_dir").is_string())
            j.out_dir = j.config.at("output_dir").get<std::string>();
        else
            j.out_dir = (fs::path("out") / leaf).string();
    }
}

}  // namespace

json load_config_text(const std::string& text) {
    try {
        return yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("cannot parse config: ") + e.what());
    }
}

json load_config_file(const std::string& path) { return load_config_text(read_file(path)); }

void apply_set(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    json* node = &cfg;
    size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ValidationError("--set: empty key in '" + path + "'");
        if (!node->is_object()) {
            if (!node->is_null()) throw ValidationError("--set: '" + path + "' descends into a non-table value");
            *node = json::object();
        }
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = load_config_text(assignment.substr(eq + 1));
}

std::string config_hash(const json& cfg) {
    json c = cfg;
    if (c.is_object()) c.erase("output_dir");
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : c.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int recommended_cutoff(double abs_alpha) { return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 5 * abs_alpha + 10)); }

Validated validate_config(const json& input) {
    if (!input.is_object()) throw ValidationError("config must be a mapping");
    Validated v;
    json cfg = input;
    if (!cfg.contains("scenario") || !cfg.at("scenario").is_string()) throw ValidationError("missing 'scenario'");
    const std::string name = cfg.at("scenario").get<std::string>();
    scenario_tables(name);  // throws for an unknown name

    std::set<std::string> allowed = {"scenario", "output_dir", "guard", "seed", "trap", "parameters"};
    for (const auto& t : scenario_tables(name)) allowed.insert(t);
    for (auto it = cfg.begin(); it != cfg.end(); ++it)
        if (!allowed.count(it.key())) throw ValidationError("unknown key '" + it.key() + "' for scenario " + name);

    if (cfg.contains("output_dir") && !cfg.at("output_dir").is_string()) throw ValidationError("output_dir must be a string");
    const double guard = cfg.contains("guard") ? number(cfg.at("guard"), "guard") : kDefaultGuard;
    if (!(guard > 0)) throw ValidationError("guard must be positive");
    cfg["guard"] = guard;
    if (cfg.contains("seed") && !cfg.at("seed").is_number_integer()) throw ValidationError("seed must be an integer");
    cfg["seed"] = cfg.value("seed", 0L);

    if (cfg.contains("trap")) {
        const json& t = cfg.at("trap");
        if (!t.is_object()) throw ValidationError("trap must be a table");
        for (auto it = t.begin(); it != t.end(); ++it)
            if (it.key() != "nu_x" && it.key() != "nu_y" && it.key() != "nu_z") throw ValidationError("trap: unknown key '" + it.key() + "'");
        for (const char* k : {"nu_x", "nu_y", "nu_z"})
            if (!t.contains(k)) throw ValidationError(std::string("trap: missing ") + k);
        TrapCheck c = validate_trap(number(t.at("nu_x"), "trap.nu_x"), number(t.at("nu_y"), "trap.nu_y"), number(t.at("nu_z"), "trap.nu_z"));
        if (!c.ok) throw ValidationError("trap: " + c.diagnostics);
        if (c.commensurate) v.warnings.push_back("trap: " + c.diagnostics);
    }

    const json& defaults = scenario_parameter_defaults(name);
    json params = defaults;
    if (cfg.contains("parameters") && !cfg.at("parameters").is_null()) {
        const json& p = cfg.at("parameters");
        if (!p.is_object()) throw ValidationError("parameters must be a table");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!defaults.contains(it.key())) throw ValidationError("parameters: unknown key '" + it.key() + "' for scenario " + name);
            const json& d = defaults.at(it.key());
            // complex-valued parameters accept the complex forms
            if (it.key() == "xi") complex_from_json(it.value());
            else if (!same_kind(d, it.value())) throw ValidationError("parameters." + it.key() + ": expected a value like " + d.dump());
            params[it.key()] = it.value();
        }
    }
    for (const char* k : {"points", "cutoff", "n_measurements"})
        if (params.contains(k) && params.at(k).get<long>() < 1) throw ValidationError(std::string("parameters.") + k + " must be positive");
    cfg["parameters"] = params;

    if (!scenario_tables(name).empty()) check_generic(cfg, v);
    if (params.contains("alpha2") && params.contains("cutoff")) {
        const int c = params.at("cutoff").get<int>();
        cutoff_warning(v.warnings, "parameters.alpha2", std::sqrt(params.at("alpha2").get<double>()), c);
        cutoff_warning(v.warnings, "parameters.beta2", std::sqrt(params.at("beta2").get<double>()), c);
        try {
            coherent(build_space(2, c, c), std::sqrt(params.at("alpha2").get<double>()), std::sqrt(params.at("beta2").get<double>()));
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            for (const auto& w : v.warnings) msg += "; " + w;
            throw ValidationError(msg);
        }
    }
    v.config = std::move(cfg);
    return v;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Two-mode cavity and trapped-ion simulator"};
    app.require_subcommand(1);

    std::vector<std::string> files, scenarios, sets;
    std::string out_dir;
    std::optional<double> guard;
    std::optional<long> seed;
    int jobs_n = 1;
    bool list = false;

    auto* run = app.add_subcommand("run", "Run scenarios from config files or presets");
    run->add_option("configs", files, "YAML or JSON config files");
    run->add_option("-s,--scenario", scenarios, "Run the preset config of a scenario")->allow_extra_args(false);
    run->add_option("--set", sets, "Override a config value: key.path=value")->allow_extra_args(false);
    run->add_option("-o,--output-dir", out_dir, "Output directory");
    run->add_option("--guard", guard, "Leaked-norm guard");
    run->add_option("--seed", seed, "Random seed");
    run->add_option("-j,--jobs", jobs_n, "Concurrent scenarios")->check(CLI::PositiveNumber);
    run->add_flag("--list", list, "List scenarios and exit");

    auto* val = app.add_subcommand("validate", "Check config files without running them");
    val->add_option("configs", files, "YAML or JSON config files");
    val->add_option("-s,--scenario", scenarios, "Check the preset config of a scenario")->allow_extra_args(false);
    val->add_option("--set", sets, "Override a config value: key.path=value")->allow_extra_args(false);

    auto* lst = app.add_subcommand("list", "List scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (lst->parsed() || list) {
        for (const auto& n : scenario_names())
            std::cout << n << "\n";
        return 0;
    }

    std::vector<Job> jobs;
    try {
        if (files.empty() && scenarios.empty()) throw ValidationError("no config file or --scenario given");
        jobs = collect_jobs(files, scenarios, sets, guard, seed);
    } catch (...) {
        std::string msg;
        int code = exit_code_for(std::current_exception(), msg);
        std::cerr << msg << "\n";
        return code;
    }

    if (val->parsed()) {
        int code = 0;
        for (auto& j : jobs) {
            try {
                Validated v = validate_config(j.config);
                for (const auto& w : v.warnings) std::cerr << j.source << ": warning: " << w << "\n";
                for (const auto& n : v.notices) std::cerr << j.source << ": notice: " << n << "\n";
                std::cout << "ok " << j.source << " " << v.config.at("scenario").get<std::string>() << " " << config_hash(v.config) << "\n";
            } catch (...) {
                std::string msg;
                int c = exit_code_for(std::current_exception(), msg);
                std::cerr << j.source << ": " << msg << "\n";
                if (code == 0) code = c;
            }
        }
        return code;
    }

    assign_output_dirs(jobs, out_dir);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next++) < jobs.size();) run_job(jobs[i]);
    };
    std::vector<std::thread> pool;
    const int nt = std::min<int>(jobs_n, static_cast<int>(jobs.size()));
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int code = 0;
    for (const auto& j : jobs) {
        std::cerr << j.err;
        std::cout << j.log;
        if (j.code != 0 && code == 0) code = j.code;
    }
    return code;
}

}  // namespace bimode
