#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alloclab/alloc_1d.hpp"
#include "alloclab/alloc_grid.hpp"
#include "alloclab/analytic_bounds.hpp"
#include "alloclab/experiments.hpp"
#include "alloclab/parallel.hpp"

#ifndef ALLOCLAB_VERSION
#define ALLOCLAB_VERSION "0.0.0"
#endif

namespace alloclab::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Raised for problems with the configuration itself (exit status 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when artifacts cannot be written (exit status 3).
class OutputError : public std::runtime_error {
public:
    explicit OutputError(const std::string& what) : std::runtime_error(what) {}
};

enum class KeyType { Number, Integer, Boolean, Text, NumberList };

/// One parameter of a command. A null fallback marks the key as required unless `automatic` is
/// set, in which case the command fills it in from the other parameters.
struct Key {
    std::string name;
    KeyType type = KeyType::Number;
    json fallback;
    std::string help;
    bool automatic = false;
};

struct Command {
    std::string name;
    std::string description;
    std::vector<Key> keys;
};

inline const std::vector<Command>& commands() {
    using K = KeyType;
    static const std::vector<Command> table = {
        {"solve",
         "solve one configuration (exact intervals in d = 1, grid otherwise)",
         {{"d", K::Integer, 1, "dimension"},
          {"L", K::Number, 200.0, "torus side"},
          {"eps", K::Number, 0.05, "grid cell side"},
          {"alpha", K::Number, nullptr, "appetite"},
          {"lambda", K::Number, 1.0, "centre intensity"},
          {"palm", K::Boolean, false, "add a centre at the origin"},
          {"solver", K::Text, "auto", "auto, exact or grid"}}},
        {"tails",
         "Monte Carlo tail of X or R*",
         {{"statistic", K::Text, "R*", "X or R*"},
          {"d", K::Integer, 1, "dimension"},
          {"L", K::Number, nullptr, "torus side (default 2000 in d = 1, 20 otherwise)", true},
          {"eps", K::Number, 0.05, "grid cell side (d >= 2)"},
          {"alpha", K::Number, nullptr, "appetite"},
          {"lambda", K::Number, 1.0, "centre intensity"},
          {"replicates", K::Integer, 1000, "independent replicates"},
          {"renewal", K::Text, "", "increment law for Palm renewal centres (d = 1, R*)"},
          {"radii", K::NumberList, json::array(), "survival radii (default: 50 up to the sample maximum)"},
          {"tail_quantile", K::Number, 0.9, "tail models are fitted above this sample quantile"}}},
        {"rigidity",
         "frequency of an unsated Palm centre as alpha decreases to 1",
         {{"d", K::Integer, 1, "dimension"},
          {"L", K::Number, 2000.0, "torus side"},
          {"eps", K::Number, 0.05, "grid cell side (d >= 2)"},
          {"alphas", K::NumberList, json::array({1.4, 1.2, 1.1, 1.05}), "appetites, all above 1"},
          {"replicates", K::Integer, 2000, "replicates per appetite"},
          {"coupled", K::Boolean, true, "one coupled family for all appetites"}}},
        {"continuity",
         "changed mass near the origin after resampling outside [-L, L)^d",
         {{"d", K::Integer, 2, "dimension"},
          {"window", K::Number, 20.0, "torus side"},
          {"eps", K::Number, 0.1, "grid cell side"},
          {"alpha", K::Number, nullptr, "appetite"},
          {"lambda", K::Number, 1.0, "centre intensity"},
          {"L_list", K::NumberList, json::array({2.0, 5.0, 8.0, 9.5}), "increasing half-sides"},
          {"resamples", K::Integer, 20, "resamples per base and L"},
          {"bases", K::Integer, 30, "independent base configurations"},
          {"probe_half_side", K::Number, 1.0, "changed mass is measured in [-h, h)^d"},
          {"threshold", K::Number, 0.01, "target changed fraction at the largest L"}}},
        {"boxprobe",
         "replete or decisive failure frequencies of boxes [-M, M)^d",
         {{"kind", K::Text, "replete", "replete or decisive"},
          {"d", K::Integer, 1, "dimension"},
          {"window", K::Number, 200.0, "torus side"},
          {"eps", K::Number, 0.05, "grid cell side"},
          {"alpha", K::Number, nullptr, "appetite"},
          {"lambda", K::Number, 1.0, "centre intensity"},
          {"M_list", K::NumberList, json::array({2.0, 4.0, 8.0}), "increasing box half-sides"},
          {"resamples", K::Integer, 50, "resamples per box"},
          {"boundary_layer", K::Number, 1.0, "width of the boundary stratum"}}},
        {"walk",
         "persistence events of a centred random walk",
         {{"law", K::Text, "exponential", "increment law before centring"},
          {"m_max", K::Integer, 4, "largest level m"},
          {"replicates", K::Integer, 100000, "independent walks"}}},
        {"render",
         "PPM image of the territories of a d = 2 grid allocation",
         {{"L", K::Number, 20.0, "torus side"},
          {"eps", K::Number, 0.05, "grid cell side"},
          {"alpha", K::Number, nullptr, "appetite"},
          {"lambda", K::Number, 1.0, "centre intensity"},
          {"palm", K::Boolean, false, "add a centre at the origin"},
          {"annuli", K::Boolean, true, "darken alternate annuli"},
          {"ring_width", K::Number, 0.25, "annulus width"}}},
        {"bounds",
         "evaluate an explicit bound on a radius grid",
         {{"kind", K::Text, nullptr, "poisson-upper, poisson-lower, extreme-alpha-X, extreme-alpha-R, oned-X, "
                                     "oned-R, critical-shape or walk-theta"},
          {"d", K::Integer, 1, "dimension"},
          {"alpha", K::Number, 1.0, "appetite"},
          {"lambda", K::Number, 1.0, "Poisson mean for the Poisson kinds"},
          {"form", K::Text, "proof", "proof or theorem (extreme-alpha kinds)"},
          {"radii", K::NumberList, json::array({1.0, 2.0, 4.0, 8.0, 16.0}), "evaluation radii"}}},
    };
    return table;
}

inline const Command* find_command(const std::string& name) {
    for (const auto& c : commands())
        if (c.name == name) return &c;
    return nullptr;
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    return v;
}

/// Converts a flag string to the key's JSON type.
inline json from_flag(const Key& k, const std::string& s) {
    switch (k.type) {
        case KeyType::Number: return parse_double(k.name, s);
        case KeyType::Integer: {
            const double v = parse_double(k.name, s);
            if (v != std::floor(v) || v < 0.0) throw ConfigError("key '" + k.name + "' must be a nonnegative integer");
            return static_cast<std::uint64_t>(v);
        }
        case KeyType::Boolean:
            if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
            if (s == "false" || s == "0" || s == "no" || s == "off") return false;
            throw ConfigError("key '" + k.name + "' must be true or false");
        case KeyType::Text: return s;
        case KeyType::NumberList: {
            json arr = json::array();
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) arr.push_back(parse_double(k.name, item));
            return arr;
        }
    }
    return nullptr;
}

/// Checks (and normalises) a value taken from a configuration file.
inline json from_file(const Key& k, const json& v) {
    auto bad = [&](const char* what) { return ConfigError("key '" + k.name + "' must be " + what); };
    switch (k.type) {
        case KeyType::Number:
            if (!v.is_number()) throw bad("a number");
            return v.get<double>();
        case KeyType::Integer: {
            if (!v.is_number()) throw bad("a nonnegative integer");
            const double x = v.get<double>();
            if (x != std::floor(x) || x < 0.0) throw bad("a nonnegative integer");
            return static_cast<std::uint64_t>(x);
        }
        case KeyType::Boolean:
            if (!v.is_boolean()) throw bad("true or false");
            return v;
        case KeyType::Text:
            if (!v.is_string()) throw bad("a string");
            return v;
        case KeyType::NumberList: {
            if (!v.is_array()) throw bad("a list of numbers");
            json arr = json::array();
            for (const auto& e : v) {
                if (!e.is_number()) throw bad("a list of numbers");
                arr.push_back(e.get<double>());
            }
            return arr;
        }
    }
    return nullptr;
}

inline std::uint64_t parse_seed(const std::string& where, const std::string& s) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        if (!s.empty() && s[0] != '-') v = std::stoull(s, &used, 0);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError(where + ": '" + s + "' is not a valid seed");
    return v;
}

}  // namespace detail

/// Fully resolved invocation; `to_json` of this is the manifest.
struct RunConfig {
    std::string command;
    json parameters = json::object();
    std::uint64_t seed = 1;
    std::string output = "alloclab-out";
    unsigned workers = 1;
    bool quiet = false;
};

inline json to_json(const RunConfig& c) {
    return {{"tool", "alloclab"}, {"version", ALLOCLAB_VERSION}, {"command", c.command},
            {"seed", c.seed},     {"output", c.output},          {"workers", c.workers},
            {"parameters", c.parameters}};
}

/// Raw material for resolution: the optional configuration document and the flags given.
struct Invocation {
    std::string command;
    std::optional<std::string> config_path;
    std::map<std::string, std::string> flags;  ///< parameter key -> flag text
    std::optional<std::string> seed, output, workers;
    bool quiet = false;
};

/// flag > configuration file > ALLOCLAB_SEED (seed only) > default.
inline RunConfig resolve(const Invocation& inv) {
    json file = json::object();
    if (inv.config_path) {
        std::ifstream in(*inv.config_path);
        if (!in) throw ConfigError("cannot read configuration file '" + *inv.config_path + "'");
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("configuration file '" + *inv.config_path + "': " + e.what());
        }
        if (!file.is_object()) throw ConfigError("configuration file must hold an object");
        for (const auto& [k, _] : file.items())
            if (k != "command" && k != "parameters" && k != "seed" && k != "output" && k != "workers" &&
                k != "version" && k != "tool")
                throw ConfigError("unknown top-level key '" + k + "'");
    }

    RunConfig rc;
    rc.quiet = inv.quiet;
    rc.command = inv.command;
    if (rc.command.empty() && file.contains("command")) {
        if (!file["command"].is_string()) throw ConfigError("key 'command' must be a string");
        rc.command = file["command"].get<std::string>();
    }
    if (rc.command.empty()) throw ConfigError("no command given");
    const Command* cmd = find_command(rc.command);
    if (!cmd) throw ConfigError("unknown command '" + rc.command + "'");
    if (!inv.command.empty() && file.contains("command") && file["command"] != inv.command)
        throw ConfigError("configuration file is for command '" + file["command"].dump() + "'");

    json params = file.value("parameters", json::object());
    if (!params.is_object()) throw ConfigError("key 'parameters' must be an object");
    for (const auto& [k, _] : params.items()) {
        bool known = false;
        for (const auto& key : cmd->keys) known |= key.name == k;
        if (!known) throw ConfigError("unknown parameter '" + k + "' for command '" + cmd->name + "'");
    }
    for (const auto& key : cmd->keys) {
        json v;
        if (auto it = inv.flags.find(key.name); it != inv.flags.end()) {
            v = detail::from_flag(key, it->second);
        } else if (params.contains(key.name) && !params[key.name].is_null()) {
            v = detail::from_file(key, params[key.name]);
        } else if (!key.fallback.is_null() || key.automatic) {
            v = key.fallback;
        } else {
            throw ConfigError("missing required key '" + key.name + "'");
        }
        rc.parameters[key.name] = v;
    }

    if (inv.seed) {
        rc.seed = detail::parse_seed("--seed", *inv.seed);
    } else if (file.contains("seed")) {
        if (!file["seed"].is_number_unsigned() && !(file["seed"].is_number_integer() && file["seed"].get<long long>() >= 0))
            throw ConfigError("key 'seed' must be a nonnegative integer");
        rc.seed = file["seed"].get<std::uint64_t>();
    } else if (const char* env = std::getenv("ALLOCLAB_SEED"); env && *env) {
        rc.seed = detail::parse_seed("ALLOCLAB_SEED", env);
    }

    if (inv.output) {
        rc.output = *inv.output;
    } else if (file.contains("output")) {
        if (!file["output"].is_string()) throw ConfigError("key 'output' must be a string");
        rc.output = file["output"].get<std::string>();
    }

    rc.workers = default_workers();
    if (inv.workers) {
        const double w = detail::parse_double("workers", *inv.workers);
        if (w < 1.0 || w != std::floor(w)) throw ConfigError("--workers must be a positive integer");
        rc.workers = static_cast<unsigned>(w);
    } else if (file.contains("workers")) {
        if (!file["workers"].is_number_unsigned() || file["workers"].get<unsigned>() == 0)
            throw ConfigError("key 'workers' must be a positive integer");
        rc.workers = file["workers"].get<unsigned>();
    }
    return rc;
}

/// Artifact sink rooted at the output directory.
class Output {
public:
    explicit Output(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw OutputError("cannot create output directory '" + dir_.string() + "'");
    }

    template <typename Fn>
    void write(const std::string& name, Fn&& fill, bool binary = false) {
        const auto path = dir_ / name;
        std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
        if (!os) throw OutputError("cannot write '" + path.string() + "'");
        fill(os);
        os.flush();
        if (!os) throw OutputError("write failed for '" + path.string() + "'");
    }

    void write_json(const std::string& name, const json& j) {
        write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

namespace detail {

inline std::vector<double> numbers(const json& j) { return j.get<std::vector<double>>(); }

inline ProgressFn progress_printer(const RunConfig& rc, std::ostream& err) {
    if (rc.quiet) return {};
    return [&err, name = rc.command, last = std::size_t{0}](std::size_t done, std::size_t total) mutable {
        const std::size_t step = std::max<std::size_t>(1, total / 10);
        if (done == total || done >= last + step) {
            last = done;
            err << "[" << name << "] " << done << "/" << total << '\n';
        }
    };
}

inline json run_solve(const RunConfig& rc, Output& out) {
    const auto& p = rc.parameters;
    const int d = p["d"].get<int>();
    const double L = p["L"].get<double>();
    const double alpha = p["alpha"].get<double>();
    const std::string solver = p["solver"].get<std::string>();
    if (solver != "auto" && solver != "exact" && solver != "grid")
        throw InvalidInput("solver must be auto, exact or grid");
    const bool exact = solver == "exact" || (solver == "auto" && d == 1);
    if (exact) alloclab::detail::require(d == 1, "the exact solver needs d = 1");
    const Domain dom = exact ? Domain::continuum(1, L) : Domain(d, L, p["eps"].get<double>());
    auto cs = sample_poisson(dom, p["lambda"].get<double>(), rc.seed);
    if (p["palm"].get<bool>()) cs = palm_augment(std::move(cs));
    out.write_json("centers.json", alloclab::to_json(cs));

    json summary{{"centers", cs.size()}};
    if (exact) {
        const auto a = solve_1d(cs, alpha);
        std::size_t unsated = 0;
        for (auto s : a.sated) unsated += s == 0;
        const OwnerIndex idx(a);
        const auto o = idx.owner(0.0);
        summary["claimed_fraction"] = a.claimed_length() / L;
        summary["unsated_centers"] = unsated;
        summary["X"] = o < 0 ? json(nullptr) : json(std::abs(a.centers[static_cast<std::size_t>(o)]));
        if (a.origin >= 0) summary["R_origin"] = a.radius(static_cast<std::size_t>(a.origin));
        out.write_json("allocation.json", alloclab::to_json(a));
    } else {
        const auto a = solve_grid(cs, alpha, dom);
        const auto st = phase_stats(a);
        const auto bad = check_stability(a, 2.0 * dom.eps() * std::sqrt(static_cast<double>(d)));
        const double x = measure_X(a);
        summary["claimed_fraction"] = st.claimed_fraction;
        summary["unsated_fraction"] = st.unsated_fraction;
        summary["unclaimed_volume"] = st.unclaimed_volume;
        summary["unstable_pairs"] = bad.size();
        summary["X"] = std::isfinite(x) ? json(x) : json(nullptr);
        if (cs.palm) summary["R_origin"] = measure_radius(a, 0).radius;
        out.write("allocation.bin", [&](std::ostream& os) { write_allocation(os, a); }, true);
    }
    out.write_json("summary.json", summary);
    return summary;
}

inline json run_tails(const RunConfig& rc, Output& out, std::ostream& err) {
    auto& p = const_cast<json&>(rc.parameters);
    TailConfig c;
    c.statistic = parse_statistic(p["statistic"].get<std::string>());
    c.d = p["d"].get<int>();
    if (p["L"].is_null()) p["L"] = c.d == 1 ? 2000.0 : 20.0;
    c.L = p["L"].get<double>();
    c.eps = p["eps"].get<double>();
    c.alpha = p["alpha"].get<double>();
    c.lambda = p["lambda"].get<double>();
    c.replicates = p["replicates"].get<std::uint64_t>();
    c.seed = rc.seed;
    c.workers = rc.workers;
    c.radii = numbers(p["radii"]);
    if (const auto law = p["renewal"].get<std::string>(); !law.empty()) c.renewal = IncrementLaw::parse(law);
    const auto est = tail_experiment(c, progress_printer(rc, err));
    out.write("tails.csv", [&](std::ostream& os) { write_tails_csv(os, est); });

    json fit{{"n", est.n()}, {"infinite", est.infinite}, {"excluded", est.excluded},
             {"infinite_fraction", est.infinite_fraction()}};
    try {
        fit["comparison"] = alloclab::to_json(fit_tail(est, p["tail_quantile"].get<double>()));
    } catch (const InvalidInput& e) {
        fit["comparison"] = nullptr;
        fit["comparison_error"] = e.what();
    }
    out.write_json("fit.json", fit);
    return fit;
}

inline json run_rigidity(const RunConfig& rc, Output& out, std::ostream& err) {
    const auto& p = rc.parameters;
    RigidityConfig c;
    c.d = p["d"].get<int>();
    c.L = p["L"].get<double>();
    c.eps = p["eps"].get<double>();
    c.replicates = p["replicates"].get<std::uint64_t>();
    c.coupled = p["coupled"].get<bool>();
    c.seed = rc.seed;
    c.workers = rc.workers;
    const auto pts = rigidity_experiment(numbers(p["alphas"]), c, progress_printer(rc, err));
    out.write("rigidity.csv", [&](std::ostream& os) {
        os << "alpha,unsated,n,frequency,ci_lo,ci_hi\n" << std::setprecision(10);
        for (const auto& q : pts)
            os << q.alpha << ',' << q.unsated << ',' << q.n << ',' << q.frequency << ',' << q.ci.lo << ',' << q.ci.hi
               << '\n';
    });
    const auto v = assess_rigidity(pts);
    json s{{"nonincreasing", v.nonincreasing}, {"halved", v.halved}, {"pass", v.pass()}};
    out.write_json("summary.json", s);
    return s;
}

inline json run_continuity(const RunConfig& rc, Output& out, std::ostream& err) {
    const auto& p = rc.parameters;
    ContinuityConfig c;
    c.d = p["d"].get<int>();
    c.window = p["window"].get<double>();
    c.eps = p["eps"].get<double>();
    c.alpha = p["alpha"].get<double>();
    c.lambda = p["lambda"].get<double>();
    c.resamples = p["resamples"].get<std::uint64_t>();
    c.bases = p["bases"].get<std::uint64_t>();
    c.probe_half_side = p["probe_half_side"].get<double>();
    c.seed = rc.seed;
    c.workers = rc.workers;
    const auto pts = continuity_experiment(numbers(p["L_list"]), c, progress_printer(rc, err));
    out.write("continuity.csv", [&](std::ostream& os) {
        os << "L,mean,sd,ci_lo,ci_hi,n,probe_volume\n" << std::setprecision(10);
        for (const auto& q : pts)
            os << q.L << ',' << q.mean << ',' << q.sd << ',' << q.ci_lo << ',' << q.ci_hi << ',' << q.n << ','
               << q.probe_volume << '\n';
    });
    const auto v = assess_continuity(pts, p["threshold"].get<double>());
    json s{{"decreasing", v.decreasing}, {"final_fraction", v.final_fraction}, {"threshold", v.threshold},
           {"pass", v.pass()}};
    out.write_json("summary.json", s);
    return s;
}

inline json run_boxprobe(const RunConfig& rc, Output& out, std::ostream& err) {
    const auto& p = rc.parameters;
    const auto kind_name = p["kind"].get<std::string>();
    ProbeKind kind;
    if (kind_name == "replete")
        kind = ProbeKind::Replete;
    else if (kind_name == "decisive")
        kind = ProbeKind::Decisive;
    else
        throw InvalidInput("kind must be replete or decisive");
    BoxProbeConfig c;
    c.d = p["d"].get<int>();
    c.window = p["window"].get<double>();
    c.eps = p["eps"].get<double>();
    c.alpha = p["alpha"].get<double>();
    c.lambda = p["lambda"].get<double>();
    c.resamples = p["resamples"].get<std::uint64_t>();
    c.boundary_layer = p["boundary_layer"].get<double>();
    c.seed = rc.seed;
    c.workers = rc.workers;
    const auto pts = box_probe(c, numbers(p["M_list"]), kind, progress_printer(rc, err));
    out.write("boxprobe.csv", [&](std::ostream& os) {
        os << "M,failure_rate,per_volume,frequency,ci_lo,ci_hi,failures,probes,boundary_frequency,"
              "boundary_probes,central_frequency,central_probes\n"
           << std::setprecision(10);
        for (const auto& q : pts)
            os << q.M << ',' << q.failure_rate << ',' << q.per_volume << ',' << q.frequency << ',' << q.ci.lo << ','
               << q.ci.hi << ',' << q.failures << ',' << q.probes << ',' << q.boundary_frequency << ','
               << q.boundary_probes << ',' << q.central_frequency << ',' << q.central_probes << '\n';
    });
    return {{"points", pts.size()}};
}

inline json run_walk(const RunConfig& rc, Output& out) {
    const auto& p = rc.parameters;
    const auto w = walk_event_sim(IncrementLaw::parse(p["law"].get<std::string>()), p["m_max"].get<int>(),
                                  p["replicates"].get<std::uint64_t>(), rc.seed, rc.workers);
    out.write("walk.csv", [&](std::ostream& os) {
        os << "m,p,ci_lo,ci_hi,count,replicates\n" << std::setprecision(10);
        for (std::size_t i = 0; i < w.m.size(); ++i)
            os << w.m[i] << ',' << w.p[i] << ',' << w.ci_lo[i] << ',' << w.ci_hi[i] << ',' << w.count[i] << ','
               << w.replicates << '\n';
    });
    json s{{"theta_hat", w.theta_hat}, {"theta_bound", walk_theta_bound()}};
    out.write_json("walk.json", s);
    return s;
}

inline json run_render(const RunConfig& rc, Output& out) {
    const auto& p = rc.parameters;
    const Domain dom(2, p["L"].get<double>(), p["eps"].get<double>());
    auto cs = sample_poisson(dom, p["lambda"].get<double>(), rc.seed);
    if (p["palm"].get<bool>()) cs = palm_augment(std::move(cs));
    const auto a = solve_grid(cs, p["alpha"].get<double>(), dom);
    RenderOptions opt;
    opt.annuli = p["annuli"].get<bool>();
    opt.ring_width = p["ring_width"].get<double>();
    out.write("territories.ppm", [&](std::ostream& os) { render_territories(os, a, opt); }, true);
    out.write_json("centers.json", alloclab::to_json(cs));
    return {{"pixels", dom.cell_count()}};
}

inline json run_bounds(const RunConfig& rc, Output& out) {
    const auto& p = rc.parameters;
    BoundCurve spec;
    spec.kind = parse_bound_kind(p["kind"].get<std::string>());
    spec.d = p["d"].get<int>();
    spec.alpha = p["alpha"].get<double>();
    spec.lambda = p["lambda"].get<double>();
    const auto form = p["form"].get<std::string>();
    if (form == "proof")
        spec.form = BoundForm::Proof;
    else if (form == "theorem")
        spec.form = BoundForm::Theorem;
    else
        throw InvalidInput("form must be proof or theorem");
    const auto curve = make_bound_curve(spec, numbers(p["radii"]));
    out.write("bounds.csv", [&](std::ostream& os) { write_bound_csv(os, curve); });
    return {{"points", curve.r.size()}};
}

}  // namespace detail

/// Executes a resolved configuration and writes manifest.json plus the command's artifacts.
inline json execute(const RunConfig& rc, std::ostream& err) {
    Output out(rc.output);
    json summary;
    if (rc.command == "solve")
        summary = detail::run_solve(rc, out);
    else if (rc.command == "tails")
        summary = detail::run_tails(rc, out, err);
    else if (rc.command == "rigidity")
        summary = detail::run_rigidity(rc, out, err);
    else if (rc.command == "continuity")
        summary = detail::run_continuity(rc, out, err);
    else if (rc.command == "boxprobe")
        summary = detail::run_boxprobe(rc, out, err);
    else if (rc.command == "walk")
        summary = detail::run_walk(rc, out);
    else if (rc.command == "render")
        summary = detail::run_render(rc, out);
    else if (rc.command == "bounds")
        summary = detail::run_bounds(rc, out);
    else
        throw ConfigError("unknown command '" + rc.command + "'");
    out.write_json("manifest.json", to_json(rc));
    return summary;
}

/// Command-line entry point; `args` excludes the program name. Returns the exit status.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"alloclab: stable allocation laboratory", "alloclab"};
    app.set_version_flag("--version", std::string(ALLOCLAB_VERSION));
    Invocation inv;
    std::string config, seed, output, workers;
    app.add_option("--config", config, "JSON configuration file (a manifest.json also works)");
    app.add_option("--seed", seed, "base seed (else the file, else ALLOCLAB_SEED, else 1)");
    app.add_option("--output", output, "output directory");
    app.add_option("--workers", workers, "worker threads (default: available parallelism)");
    app.add_flag("--quiet", inv.quiet, "no progress on standard error");
    app.require_subcommand(0, 1);

    std::map<std::string, std::map<std::string, std::string>> values;
    for (const auto& c : commands()) {
        auto* sub = app.add_subcommand(c.name, c.description);
        sub->fallthrough();
        auto& vals = values[c.name];
        for (const auto& k : c.keys) {
            std::string help = k.help;
            if (!k.fallback.is_null()) help += " [" + k.fallback.dump() + "]";
            else if (!k.automatic) help += " (required)";
            sub->add_option("--" + k.name, vals[k.name], help);
        }
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << ALLOCLAB_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    for (auto* sub : app.get_subcommands()) {
        inv.command = sub->get_name();
        for (const auto& k : find_command(inv.command)->keys)
            if (sub->count("--" + k.name) > 0) inv.flags[k.name] = values[inv.command][k.name];
    }
    if (app.count("--config")) inv.config_path = config;
    if (app.count("--seed")) inv.seed = seed;
    if (app.count("--output")) inv.output = output;
    if (app.count("--workers")) inv.workers = workers;

    RunConfig rc;
    try {
        if (inv.command.empty() && !inv.config_path) throw ConfigError("no command given");
        rc = resolve(inv);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    try {
        const json summary = execute(rc, err);
        out << summary.dump(2) << '\n';
    } catch (const OutputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidInput& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NotApplicable& e) {
        err << "error: not applicable: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace alloclab::cli
