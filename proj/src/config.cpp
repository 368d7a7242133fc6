#include "dualdo/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace dualdo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& file, int line, const std::string& msg) {
    throw ConfigError(file + ":" + std::to_string(line) + ": " + msg);
}

struct Setter {
    std::function<void(RunConfig&, const std::string&, const std::string&, int)> set;
};

template <typename T>
T parse_number(const std::string& value, const std::string& file, int line,
               const std::string& key) {
    std::istringstream ss(value);
    T out;
    ss >> out;
    if (ss.fail() || !(ss >> std::ws).eof())
        fail(file, line, "invalid value for '" + key + "': " + value);
    return out;
}

bool parse_bool(const std::string& value, const std::string& file, int line,
                const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail(file, line, "invalid boolean for '" + key + "': " + value);
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> m = [] {
        std::map<std::string, Setter> s;
        auto num = [&s](const std::string& key, auto selector) {
            s[key] = Setter{[key, selector](RunConfig& c, const std::string& v,
                                            const std::string& f, int l) {
                using T = std::remove_reference_t<decltype(*selector(c))>;
                *selector(c) = parse_number<T>(v, f, l, key);
            }};
        };
        auto str = [&s](const std::string& key, auto selector) {
            s[key] = Setter{[selector](RunConfig& c, const std::string& v,
                                       const std::string&, int) { *selector(c) = v; }};
        };
        num("problem.n", [](RunConfig& c) { return &c.problem.n; });
        num("problem.domain_a", [](RunConfig& c) { return &c.problem.domain_a; });
        num("problem.domain_b", [](RunConfig& c) { return &c.problem.domain_b; });
        num("problem.nu", [](RunConfig& c) { return &c.problem.nu; });
        str("problem.nonlinearity", [](RunConfig& c) { return &c.problem.nonlinearity; });
        num("problem.a0", [](RunConfig& c) { return &c.problem.a0; });
        num("problem.a1", [](RunConfig& c) { return &c.problem.a1; });
        num("problem.b0", [](RunConfig& c) { return &c.problem.b0; });
        num("problem.c_amp", [](RunConfig& c) { return &c.problem.c_amp; });
        num("problem.c_mode", [](RunConfig& c) { return &c.problem.c_mode; });
        num("problem.c1", [](RunConfig& c) { return &c.problem.c1; });
        str("problem.a_profile", [](RunConfig& c) { return &c.problem.a_profile; });
        num("problem.q", [](RunConfig& c) { return &c.problem.q; });
        str("problem.sampling", [](RunConfig& c) { return &c.problem.sampling; });
        num("problem.seed", [](RunConfig& c) { return &c.problem.seed; });
        str("problem.ic", [](RunConfig& c) { return &c.problem.ic; });
        num("problem.ic_rank", [](RunConfig& c) { return &c.problem.ic_rank; });
        num("problem.ic_decay", [](RunConfig& c) { return &c.problem.ic_decay; });
        num("problem.ic_amp", [](RunConfig& c) { return &c.problem.ic_amp; });
        num("problem.ic_mode1", [](RunConfig& c) { return &c.problem.ic_mode1; });
        num("problem.ic_mode2", [](RunConfig& c) { return &c.problem.ic_mode2; });
        str("run.mode", [](RunConfig& c) { return &c.run.mode; });
        num("run.rank", [](RunConfig& c) { return &c.run.rank; });
        num("run.dt", [](RunConfig& c) { return &c.run.dt; });
        num("run.t_end", [](RunConfig& c) { return &c.run.t_end; });
        str("run.scheme", [](RunConfig& c) { return &c.run.scheme; });
        str("run.reorth_policy", [](RunConfig& c) { return &c.run.reorth_policy; });
        num("run.drift_tol", [](RunConfig& c) { return &c.run.drift_tol; });
        num("run.sigma_floor", [](RunConfig& c) { return &c.run.sigma_floor; });
        num("run.slope_factor", [](RunConfig& c) { return &c.run.slope_factor; });
        num("run.slope_window", [](RunConfig& c) { return &c.run.slope_window; });
        num("run.threads", [](RunConfig& c) { return &c.run.threads; });
        str("run.out_dir", [](RunConfig& c) { return &c.run.out_dir; });
        num("run.conv_rank_max", [](RunConfig& c) { return &c.run.conv_rank_max; });
        num("run.conv_dt_levels", [](RunConfig& c) { return &c.run.conv_dt_levels; });
        num("run.verify_trials", [](RunConfig& c) { return &c.run.verify_trials; });
        s["run.negative_control"] = Setter{[](RunConfig& c, const std::string& v,
                                              const std::string& f, int l) {
            c.run.negative_control = parse_bool(v, f, l, "negative_control");
        }};
        return s;
    }();
    return m;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& filename) {
    RunConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(filename, lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "problem" && section != "run")
                fail(filename, lineno, "unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(filename, lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(filename, lineno, "key '" + key + "' outside a section");
        const std::string full = section + "." + key;
        const auto it = setters().find(full);
        if (it == setters().end()) fail(filename, lineno, "unknown key '" + full + "'");
        it->second.set(cfg, value, filename, lineno);
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse_config(in, path);
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError("config: " + msg);
    };
    require(problem.n >= 2, "n must be >= 2");
    require(problem.domain_b > problem.domain_a, "domain_b must exceed domain_a");
    require(problem.nu >= 0.0, "nu must be >= 0");
    require(problem.nonlinearity == "none" || problem.nonlinearity == "linear" ||
                problem.nonlinearity == "tanh" || problem.nonlinearity == "sin",
            "nonlinearity must be none|linear|tanh|sin");
    require(problem.a_profile == "const" || problem.a_profile == "sine",
            "a_profile must be const|sine");
    require(problem.q >= 1, "q must be >= 1");
    require(problem.sampling == "monte_carlo" || problem.sampling == "gauss_legendre",
            "sampling must be monte_carlo|gauss_legendre");
    require(problem.ic == "random_rank" || problem.ic == "collapsing_modes" ||
                problem.ic == "dyad_rank2",
            "ic must be random_rank|collapsing_modes|dyad_rank2");
    require(problem.ic_rank >= 1, "ic_rank must be >= 1");
    require(problem.ic_amp > 0.0, "ic_amp must be > 0");
    require(problem.ic_decay > 0.0, "ic_decay must be > 0");
    require(problem.ic_mode1 >= 1 && problem.ic_mode1 <= problem.n,
            "ic_mode1 must be in [1, n]");
    require(problem.ic_mode2 >= 1 && problem.ic_mode2 <= problem.n,
            "ic_mode2 must be in [1, n]");
    require(problem.c_mode >= 1 && problem.c_mode <= problem.n, "c_mode must be in [1, n]");

    require(run.mode == "simulate" || run.mode == "verify" || run.mode == "convergence" ||
                run.mode == "rank-adapt",
            "mode must be simulate|verify|convergence|rank-adapt");
    require(run.rank >= 1, "rank must be >= 1");
    require(run.dt > 0.0, "dt must be > 0");
    require(run.t_end >= 0.0, "t_end must be >= 0");
    require(run.scheme == "imex_euler" || run.scheme == "lie_splitting" ||
                run.scheme == "strang_splitting",
            "scheme must be imex_euler|lie_splitting|strang_splitting");
    require(run.reorth_policy == "never" || run.reorth_policy == "every_step" ||
                run.reorth_policy == "on_drift",
            "reorth_policy must be never|every_step|on_drift");
    require(run.drift_tol > 0.0, "drift_tol must be > 0");
    require(run.sigma_floor > 0.0, "sigma_floor must be > 0");
    require(run.slope_factor > 1.0, "slope_factor must be > 1");
    require(run.slope_window >= 1, "slope_window must be >= 1");
    require(run.threads >= 1, "threads must be >= 1");
    require(!run.out_dir.empty(), "out_dir must not be empty");
    require(run.conv_rank_max >= 1, "conv_rank_max must be >= 1");
    require(run.conv_dt_levels >= 1, "conv_dt_levels must be >= 1");
    require(run.verify_trials >= 0, "verify_trials must be >= 0");
}

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_config(std::ostream& os, const RunConfig& c) {
    os << "[problem]\n";
    os << "n = " << c.problem.n << "\n";
    os << "domain_a = " << g17(c.problem.domain_a) << "\n";
    os << "domain_b = " << g17(c.problem.domain_b) << "\n";
    os << "nu = " << g17(c.problem.nu) << "\n";
    os << "nonlinearity = " << c.problem.nonlinearity << "\n";
    os << "a0 = " << g17(c.problem.a0) << "\n";
    os << "a1 = " << g17(c.problem.a1) << "\n";
    os << "b0 = " << g17(c.problem.b0) << "\n";
    os << "c_amp = " << g17(c.problem.c_amp) << "\n";
    os << "c_mode = " << c.problem.c_mode << "\n";
    os << "c1 = " << g17(c.problem.c1) << "\n";
    os << "a_profile = " << c.problem.a_profile << "\n";
    os << "q = " << c.problem.q << "\n";
    os << "sampling = " << c.problem.sampling << "\n";
    os << "seed = " << c.problem.seed << "\n";
    os << "ic = " << c.problem.ic << "\n";
    os << "ic_rank = " << c.problem.ic_rank << "\n";
    os << "ic_decay = " << g17(c.problem.ic_decay) << "\n";
    os << "ic_amp = " << g17(c.problem.ic_amp) << "\n";
    os << "ic_mode1 = " << c.problem.ic_mode1 << "\n";
    os << "ic_mode2 = " << c.problem.ic_mode2 << "\n";
    os << "\n[run]\n";
    os << "mode = " << c.run.mode << "\n";
    os << "rank = " << c.run.rank << "\n";
    os << "dt = " << g17(c.run.dt) << "\n";
    os << "t_end = " << g17(c.run.t_end) << "\n";
    os << "scheme = " << c.run.scheme << "\n";
    os << "reorth_policy = " << c.run.reorth_policy << "\n";
    os << "drift_tol = " << g17(c.run.drift_tol) << "\n";
    os << "sigma_floor = " << g17(c.run.sigma_floor) << "\n";
    os << "slope_factor = " << g17(c.run.slope_factor) << "\n";
    os << "slope_window = " << c.run.slope_window << "\n";
    os << "threads = " << c.run.threads << "\n";
    os << "out_dir = " << c.run.out_dir << "\n";
    os << "conv_rank_max = " << c.run.conv_rank_max << "\n";
    os << "conv_dt_levels = " << c.run.conv_dt_levels << "\n";
    os << "verify_trials = " << c.run.verify_trials << "\n";
    os << "negative_control = " << (c.run.negative_control ? "true" : "false") << "\n";
}

}  // namespace dualdo
