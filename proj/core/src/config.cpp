#include "fdrelay/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fdrelay {

double db_to_linear(double x_db) { return std::pow(10.0, x_db / 10.0); }
double linear_to_db(double x_linear) { return 10.0 * std::log10(x_linear); }
double dbm_to_mw(double x_dbm) { return std::pow(10.0, x_dbm / 10.0); }
double dbm_to_watts(double x_dbm) { return std::pow(10.0, (x_dbm - 30.0) / 10.0); }

void SystemConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("SystemConfig: " + msg); };
    if (n_s < 1 || n_r < 1 || m_r < 1 || m_d < 1 || d < 1) fail("all counts must be >= 1");
    if (d > std::min(std::min(n_s, m_r), std::min(n_r, m_d))) {
        fail("d must not exceed min(N_s, M_r, N_r, M_d)");
    }
    if (!(p_s_max > 0.0) || !(p_r_max > 0.0)) fail("power budgets must be positive");
    if (!(sigma2_nr > 0.0) || !(sigma2_nd > 0.0)) fail("noise variances must be positive");
    if (kappa_s < 0.0 || kappa_r < 0.0 || beta_r < 0.0 || beta_d < 0.0) {
        fail("distortion coefficients must be nonnegative");
    }
    if (!(rho_sr > 0.0) || !(rho_rd > 0.0) || !(rho_sd > 0.0) || !(rho_rr > 0.0)) {
        fail("path gains must be positive");
    }
    if (k_rician < 0.0) fail("Rician factor must be nonnegative");
    if (t_training < 1) fail("CSI training length must be >= 1");
    if (!(bandwidth > 0.0)) fail("bandwidth must be positive");
}

SystemConfig default_config() {
    SystemConfig cfg;
    cfg.n_s = cfg.n_r = cfg.m_r = cfg.m_d = 4;
    cfg.d = 2;
    cfg.p_s_max = cfg.p_r_max = dbm_to_mw(0.0);
    cfg.sigma2_nr = cfg.sigma2_nd = dbm_to_mw(-40.0);
    cfg.kappa_s = cfg.kappa_r = cfg.beta_r = cfg.beta_d = db_to_linear(-40.0);
    cfg.rho_sr = cfg.rho_rd = cfg.rho_sd = db_to_linear(-30.0);
    cfg.rho_rr = db_to_linear(0.0);
    cfg.k_rician = 10.0;
    cfg.t_training = 1000;
    cfg.bandwidth = 1.0;
    return cfg;
}

SystemConfig desk_config() {
    SystemConfig cfg = default_config();
    cfg.n_s = cfg.n_r = cfg.m_r = cfg.m_d = 2;
    cfg.d = 1;
    return cfg;
}

void PddConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("PddConfig: " + msg); };
    if (!(rho0 > 0.0)) fail("rho0 must be positive");
    if (!(c_rho > 0.0 && c_rho < 1.0)) fail("c_rho must lie in (0, 1)");
    if (!(zeta_th > 0.0)) fail("zeta_th must be positive");
    if (!(eps_inner > 0.0)) fail("eps_inner must be positive");
    if (max_outer < 1 || max_inner < 1) fail("iteration caps must be >= 1");
    if (!(qp_tol > 0.0) || qp_max_iter < 1) fail("subproblem solver settings invalid");
}

namespace {

struct FieldBinding {
    std::function<double()> get;
    std::function<void(double)> set;
    bool integer = false;
};

std::map<std::string, FieldBinding> bindings(FileConfig& cfg) {
    auto& s = cfg.system;
    auto& p = cfg.pdd;
    auto real_field = [](double& ref) {
        return FieldBinding{[&ref] { return ref; }, [&ref](double v) { ref = v; }, false};
    };
    auto int_field = [](int& ref) {
        return FieldBinding{[&ref] { return static_cast<double>(ref); },
                            [&ref](double v) { ref = static_cast<int>(std::llround(v)); }, true};
    };
    return {
        {"n_s", int_field(s.n_s)},
        {"n_r", int_field(s.n_r)},
        {"m_r", int_field(s.m_r)},
        {"m_d", int_field(s.m_d)},
        {"d", int_field(s.d)},
        {"p_s_max", real_field(s.p_s_max)},
        {"p_r_max", real_field(s.p_r_max)},
        {"sigma2_nr", real_field(s.sigma2_nr)},
        {"sigma2_nd", real_field(s.sigma2_nd)},
        {"kappa_s", real_field(s.kappa_s)},
        {"kappa_r", real_field(s.kappa_r)},
        {"beta_r", real_field(s.beta_r)},
        {"beta_d", real_field(s.beta_d)},
        {"rho_sr", real_field(s.rho_sr)},
        {"rho_rd", real_field(s.rho_rd)},
        {"rho_sd", real_field(s.rho_sd)},
        {"rho_rr", real_field(s.rho_rr)},
        {"k_rician", real_field(s.k_rician)},
        {"t_training", int_field(s.t_training)},
        {"bandwidth", real_field(s.bandwidth)},
        {"rho0", real_field(p.rho0)},
        {"c_rho", real_field(p.c_rho)},
        {"zeta_th", real_field(p.zeta_th)},
        {"eps_inner", real_field(p.eps_inner)},
        {"max_outer", int_field(p.max_outer)},
        {"max_inner", int_field(p.max_inner)},
        {"qp_tol", real_field(p.qp_tol)},
        {"qp_max_iter", int_field(p.qp_max_iter)},
    };
}

bool strip_suffix(std::string& key, const std::string& suffix) {
    if (key.size() > suffix.size() && key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
        key.erase(key.size() - suffix.size());
        return true;
    }
    return false;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

FileConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_config_file: cannot open " + path);
    }
    FileConfig cfg;
    auto table = bindings(cfg);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("load_config_file: missing '=' at line " +
                                     std::to_string(lineno));
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value_str = trim(line.substr(eq + 1));
        // _db and _dbm both mean 10^(x/10); powers are milliwatt-linear by convention.
        const bool decibel = strip_suffix(key, "_dbm") || strip_suffix(key, "_db");
        auto it = table.find(key);
        if (it == table.end()) {
            throw std::runtime_error("load_config_file: unknown key '" + key + "' at line " +
                                     std::to_string(lineno));
        }
        double value = 0.0;
        try {
            value = std::stod(value_str);
        } catch (const std::exception&) {
            throw std::runtime_error("load_config_file: bad number at line " +
                                     std::to_string(lineno));
        }
        if (decibel) {
            if (it->second.integer) {
                throw std::runtime_error("load_config_file: integer key '" + key +
                                         "' cannot take a dB value");
            }
            value = db_to_linear(value);
        }
        it->second.set(value);
    }
    cfg.system.validate();
    cfg.pdd.validate();
    return cfg;
}

void save_config_file(const FileConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_config_file: cannot open " + path);
    }
    FileConfig copy = cfg;
    auto table = bindings(copy);
    out << "# fdrelay configuration (linear units; powers in mW)\n";
    for (const auto& [key, field] : table) {
        char buf[64];
        if (field.integer) {
            std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(field.get()));
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g", field.get());
        }
        out << key << " = " << buf << "\n";
    }
}

SystemConfig apply_sweep_value(SystemConfig base, const std::string& param, double value) {
    if (param == "kappa") {
        base.kappa_s = base.kappa_r = base.beta_r = base.beta_d = value;
    } else if (param == "sigma_n2") {
        base.sigma2_nr = base.sigma2_nd = value;
    } else if (param == "T") {
        base.t_training = static_cast<int>(std::llround(value));
    } else if (param == "dims") {
        const int n = static_cast<int>(std::llround(value));
        base.n_s = base.n_r = base.m_r = base.m_d = n;
    } else if (param == "rho_rr") {
        base.rho_rr = value;
    } else {
        throw std::invalid_argument("apply_sweep_value: unknown sweep parameter '" + param + "'");
    }
    base.validate();
    return base;
}

}  // namespace fdrelay
