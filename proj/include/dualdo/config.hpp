#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace dualdo {

/// Error in the run configuration; message carries file:line and names the
/// offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// [problem] section of a run configuration file.
struct ProblemConfig {
    int n = 64;
    double domain_a = 0.0;
    double domain_b = 1.0;
    double nu = 0.1;
    std::string nonlinearity = "linear";  ///< none | linear | tanh | sin
    double a0 = 1.0;
    double a1 = 0.0;
    double b0 = 1.0;
    double c_amp = 0.0;
    int c_mode = 1;
    double c1 = 0.0;
    std::string a_profile = "const";  ///< const | sine
    int q = 100;
    std::string sampling = "monte_carlo";  ///< monte_carlo | gauss_legendre
    std::uint64_t seed = 1;
    std::string ic = "random_rank";  ///< random_rank | collapsing_modes | dyad_rank2
    int ic_rank = 3;
    double ic_decay = 0.5;
    double ic_amp = 1.0;
    int ic_mode1 = 1;
    int ic_mode2 = 6;
};

/// [run] section of a run configuration file.
struct RunSettings {
    std::string mode = "simulate";  ///< simulate | verify | convergence | rank-adapt
    int rank = 2;
    double dt = 1e-3;
    double t_end = 1.0;
    std::string scheme = "imex_euler";  ///< imex_euler | lie_splitting | strang_splitting
    std::string reorth_policy = "every_step";  ///< never | every_step | on_drift
    double drift_tol = 1e-8;
    double sigma_floor = 1e-10;  ///< relative floor for sigma_min(Z_U)
    double slope_factor = 2.0;
    int slope_window = 5;
    int threads = 1;
    std::string out_dir = "out";
    int conv_rank_max = 3;
    int conv_dt_levels = 4;
    int verify_trials = 200;
    bool negative_control = false;
};

struct RunConfig {
    ProblemConfig problem;
    RunSettings run;

    void validate() const;  ///< throws ConfigError naming the field
};

/// Parse the flat "key = value" format with [section] headers; unknown keys
/// and malformed lines raise ConfigError anchored at file:line.
RunConfig parse_config(std::istream& in, const std::string& filename = "<config>");
RunConfig parse_config_file(const std::string& path);

/// Config echo in the same flat format (fixed key order, 17-digit floats).
void write_config(std::ostream& os, const RunConfig& cfg);

}  // namespace dualdo
