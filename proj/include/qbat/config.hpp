#pragma once

// Experiment configuration: flat dotted keys in a plain text file, the same
// keys overridable from the command line. Defaults reproduce the published
// device (transition frequencies, drive cap, decay rates).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qbat/decay_fit.hpp"
#include "qbat/io.hpp"

namespace qbat {

struct ExperimentConfig {
    BatteryLevels levels{two_pi * 6.266e9, two_pi * 6.011e9};
    double omega_max = two_pi * 1e7;

    // Relaxation from the device T1 pair; dephasing defaults from the
    // coherence times via 1/T_coh - 1/(2 T_relax).
    DecayRates rates{51.4e3, 79.7e3, 1.168e4, 6.101e4};

    ProtocolTag protocol_family = ProtocolTag::QabQuadratic;
    ChargeMode protocol_mode = ChargeMode::Stable;
    double protocol_tau = 190e-9;

    double sweep_tau_start = 4e-9;
    double sweep_tau_stop = 800e-9;
    double sweep_tau_step = 4e-9;

    double dt = 0.1e-9;
    std::size_t n_samples = default_n_samples;
    double threshold = 0.99;

    double discharge_t_max = 60e-6;
    double discharge_dt = 10e-9;
    std::size_t discharge_stride = 100;

    std::uint64_t tomography_shots = 100000;
    std::optional<std::uint64_t> seed;

    std::string output_dir = "out";

    std::vector<double> tau_sweep() const {
        std::vector<double> out;
        for (double t = sweep_tau_start; t <= sweep_tau_stop * (1.0 + 1e-12);
             t += sweep_tau_step)
            out.push_back(t);
        return out;
    }

    void validate() const {
        levels.validate();
        rates.validate();
        if (!(omega_max > 0.0)) throw config_error("drive.omega_max_rad_s must be positive");
        if (!(protocol_tau > 0.0)) throw config_error("protocol.tau_s must be positive");
        if (!(dt > 0.0)) throw config_error("run.dt_s must be positive");
        if (!(threshold > 0.0) || !(threshold <= 1.0))
            throw config_error("run.threshold must be in (0, 1]");
        if (n_samples < 2) throw config_error("run.samples must be at least 2");
        if (!(sweep_tau_step > 0.0) || !(sweep_tau_start > 0.0) ||
            sweep_tau_stop < sweep_tau_start)
            throw config_error("sweep bounds must give a non-empty ascending tau sweep");
        if (!(discharge_t_max > 0.0) || !(discharge_dt > 0.0) || discharge_stride == 0)
            throw config_error("discharge settings must be positive");
        if (tomography_shots == 0) throw config_error("tomography.shots must be positive");
    }

    std::map<std::string, std::string> to_key_map() const {
        std::map<std::string, std::string> m;
        m["levels.omega01_rad_s"] = fmt_double(levels.omega01);
        m["levels.omega12_rad_s"] = fmt_double(levels.omega12);
        m["drive.omega_max_rad_s"] = fmt_double(omega_max);
        m["rates.gamma10_per_s"] = fmt_double(rates.gamma10);
        m["rates.gamma21_per_s"] = fmt_double(rates.gamma21);
        m["rates.deph1_per_s"] = fmt_double(rates.deph1);
        m["rates.deph2_per_s"] = fmt_double(rates.deph2);
        m["protocol.family"] = to_string(protocol_family);
        m["protocol.mode"] = to_string(protocol_mode);
        m["protocol.tau_s"] = fmt_double(protocol_tau);
        m["sweep.tau_start_s"] = fmt_double(sweep_tau_start);
        m["sweep.tau_stop_s"] = fmt_double(sweep_tau_stop);
        m["sweep.tau_step_s"] = fmt_double(sweep_tau_step);
        m["run.dt_s"] = fmt_double(dt);
        m["run.samples"] = std::to_string(n_samples);
        m["run.threshold"] = fmt_double(threshold);
        m["discharge.t_max_s"] = fmt_double(discharge_t_max);
        m["discharge.dt_s"] = fmt_double(discharge_dt);
        m["discharge.stride"] = std::to_string(discharge_stride);
        m["tomography.shots"] = std::to_string(tomography_shots);
        if (seed) m["seed"] = std::to_string(*seed);
        m["output.dir"] = output_dir;
        return m;
    }

    void apply(const std::string& key, const std::string& value) {
        const auto num = [&] { return parse_double(value); };
        if (key == "levels.omega01_rad_s")
            levels.omega01 = num();
        else if (key == "levels.omega12_rad_s")
            levels.omega12 = num();
        else if (key == "drive.omega_max_rad_s")
            omega_max = num();
        else if (key == "rates.gamma10_per_s")
            rates.gamma10 = num();
        else if (key == "rates.gamma21_per_s")
            rates.gamma21 = num();
        else if (key == "rates.deph1_per_s")
            rates.deph1 = num();
        else if (key == "rates.deph2_per_s")
            rates.deph2 = num();
        else if (key == "protocol.family")
            protocol_family = parse_family(value);
        else if (key == "protocol.mode")
            protocol_mode = parse_mode(value);
        else if (key == "protocol.tau_s")
            protocol_tau = num();
        else if (key == "sweep.tau_start_s")
            sweep_tau_start = num();
        else if (key == "sweep.tau_stop_s")
            sweep_tau_stop = num();
        else if (key == "sweep.tau_step_s")
            sweep_tau_step = num();
        else if (key == "run.dt_s")
            dt = num();
        else if (key == "run.samples")
            n_samples = static_cast<std::size_t>(num());
        else if (key == "run.threshold")
            threshold = num();
        else if (key == "discharge.t_max_s")
            discharge_t_max = num();
        else if (key == "discharge.dt_s")
            discharge_dt = num();
        else if (key == "discharge.stride")
            discharge_stride = static_cast<std::size_t>(num());
        else if (key == "tomography.shots")
            tomography_shots = static_cast<std::uint64_t>(num());
        else if (key == "seed")
            seed = static_cast<std::uint64_t>(num());
        else if (key == "output.dir")
            output_dir = value;
        else
            throw config_error("unknown config key '" + key + "'");
    }

    static ProtocolTag parse_family(const std::string& v) {
        if (v == "ramp") return ProtocolTag::LinearRamp;
        if (v == "cycloid") return ProtocolTag::CycloidLinear;
        if (v == "qab") return ProtocolTag::QabQuadratic;
        if (v == "numerical") return ProtocolTag::NumericalUnconstrained;
        throw config_error("protocol.family must be one of ramp|cycloid|qab|numerical");
    }

    static ChargeMode parse_mode(const std::string& v) {
        if (v == "stable") return ChargeMode::Stable;
        if (v == "unstable") return ChargeMode::Unstable;
        throw config_error("protocol.mode must be stable|unstable");
    }
};

/// `key = value` lines; '#' starts a comment; blank lines ignored.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          ExperimentConfig base = ExperimentConfig{}) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string{};
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string stripped = strip(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        base.apply(strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
    }
    return base;
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
    return parse_config_text(read_file(path));
}

} // namespace qbat
