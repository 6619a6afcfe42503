#pragma once

// Lattice Yukawa model parameters, bosonic mode energies and staggered-charge
// sectors of the spin register.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hybridsim/errors.hpp"

namespace hybridsim {

/// Computational basis state of the spin register. Qubit 0 is the most
/// significant bit, so the integer order equals the lexicographic order of
/// the ket label |q0 q1 ... q_{N-1}>.
using SpinBits = std::uint64_t;

struct ModelParams {
    int n_sites = 2;
    double lattice_spacing = 1.0;
    double fermion_mass = 1.0;
    double boson_mass = 1.0;
    double coupling = 0.0;
    int charge_sector = 0;
    std::vector<int> cutoffs{4, 4};
    double trotter_dt = 0.5;
    int trotter_steps = 1;

    /// Throws ValidationError on any violated invariant.
    void validate() const {
        if (n_sites <= 0) throw ValidationError("n_sites must be positive");
        if (n_sites % 2 != 0) throw ValidationError("n_sites must be even (staggered fermions)");
        if (n_sites > 30) throw ValidationError("n_sites too large");
        if (!(lattice_spacing > 0.0) || !std::isfinite(lattice_spacing))
            throw ValidationError("lattice_spacing must be > 0");
        if (!std::isfinite(fermion_mass)) throw ValidationError("fermion_mass must be finite");
        if (!(boson_mass >= 0.0) || !std::isfinite(boson_mass))
            throw ValidationError("boson_mass must be >= 0");
        if (!(coupling >= 0.0) || !std::isfinite(coupling))
            throw ValidationError("coupling must be >= 0");
        if (std::abs(charge_sector) > n_sites / 2)
            throw ValidationError("|charge_sector| must not exceed n_sites/2");
        if (static_cast<int>(cutoffs.size()) != n_sites)
            throw ValidationError("cutoffs must list one entry per mode (n_sites entries)");
        for (int c : cutoffs)
            if (c < 0) throw ValidationError("cutoffs must be non-negative");
        if (!(trotter_dt > 0.0) || !std::isfinite(trotter_dt))
            throw ValidationError("trotter_dt must be > 0");
        if (trotter_steps <= 0) throw ValidationError("trotter_steps must be positive");
    }

    /// chi = (-1)^(Q+1), the sign of the hopping term across the periodic boundary.
    [[nodiscard]] int boundary_sign() const { return ((charge_sector + 1) % 2 == 0) ? 1 : -1; }

    [[nodiscard]] double total_time() const { return trotter_dt * trotter_steps; }
};

struct ModeSpec {
    int index = 0;
    double energy = 0.0;
    double momentum = 0.0;
};

inline double mode_momentum(const ModelParams& p, int m) {
    if (m < 0 || m >= p.n_sites) throw ValidationError("mode index out of range");
    return 2.0 * std::numbers::pi / (p.n_sites * p.lattice_spacing) * (m - p.n_sites / 2.0);
}

/// Continuum dispersion eps_m = sqrt(p_m^2 + m_phi^2) with the shifted label
/// convention m in {0..N-1}, p_m proportional to (m - N/2).
inline double mode_energy(const ModelParams& p, int m) {
    const double k = mode_momentum(p, m);
    return std::sqrt(k * k + p.boson_mass * p.boson_mass);
}

inline std::vector<ModeSpec> mode_specs(const ModelParams& p) {
    std::vector<ModeSpec> out;
    out.reserve(p.n_sites);
    for (int m = 0; m < p.n_sites; ++m) out.push_back({m, mode_energy(p, m), mode_momentum(p, m)});
    return out;
}

inline bool bit_of(SpinBits state, int qubit, int n_qubits) {
    return ((state >> (n_qubits - 1 - qubit)) & 1U) != 0;
}

/// Q = sum_j ((-1)^(j+1) + z_j) / 2 with z_j = +1 for |0>, -1 for |1>.
inline int staggered_charge(SpinBits state, int n_sites) {
    int twice_q = 0;
    for (int j = 0; j < n_sites; ++j) {
        const int stagger = (j % 2 == 0) ? -1 : 1;
        const int z = bit_of(state, j, n_sites) ? -1 : 1;
        twice_q += stagger + z;
    }
    return twice_q / 2;
}

/// All N-qubit basis states with staggered charge Q, ascending lexicographic.
inline std::vector<SpinBits> sector_basis(int n_sites, int charge) {
    if (n_sites <= 0 || n_sites > 30) throw ValidationError("sector_basis: bad n_sites");
    std::vector<SpinBits> out;
    const SpinBits dim = SpinBits{1} << n_sites;
    for (SpinBits s = 0; s < dim; ++s)
        if (staggered_charge(s, n_sites) == charge) out.push_back(s);
    if (out.empty())
        throw ValidationError("empty sector: no " + std::to_string(n_sites) +
                              "-site state has charge " + std::to_string(charge));
    return out;
}

inline std::vector<SpinBits> sector_basis(const ModelParams& p) {
    p.validate();
    return sector_basis(p.n_sites, p.charge_sector);
}

inline std::string ket_label(SpinBits state, int n_qubits) {
    std::string s;
    for (int q = 0; q < n_qubits; ++q) s += bit_of(state, q, n_qubits) ? '1' : '0';
    return s;
}

inline SpinBits parse_ket(const std::string& label) {
    SpinBits out = 0;
    for (char c : label) {
        if (c != '0' && c != '1') throw ValidationError("bad ket label: " + label);
        out = (out << 1) | static_cast<SpinBits>(c == '1');
    }
    return out;
}

// ---------------------------------------------------------------------------
// key=value configuration files

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': not a number: '" + v + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(i);
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': not an integer: '" + v + "'");
    }
}

}  // namespace detail

/// Incrementally applies key=value entries. A uniform `cutoff` is resolved
/// against the final n_sites in finish(), so key order does not matter.
class ConfigBuilder {
public:
    explicit ConfigBuilder(ModelParams base = {}) : params_(std::move(base)) {}

    void set(const std::string& raw_key, const std::string& raw_value) {
        const std::string key = detail::trim(raw_key);
        const std::string v = detail::trim(raw_value);
        if (key == "n_sites") params_.n_sites = detail::parse_int(key, v);
        else if (key == "lattice_spacing") params_.lattice_spacing = detail::parse_double(key, v);
        else if (key == "fermion_mass") params_.fermion_mass = detail::parse_double(key, v);
        else if (key == "boson_mass") params_.boson_mass = detail::parse_double(key, v);
        else if (key == "coupling") params_.coupling = detail::parse_double(key, v);
        else if (key == "charge_sector") params_.charge_sector = detail::parse_int(key, v);
        else if (key == "cutoff") { uniform_cutoff_ = detail::parse_int(key, v); explicit_cutoffs_.reset(); }
        else if (key == "cutoffs") {
            std::vector<int> list;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) list.push_back(detail::parse_int(key, detail::trim(item)));
            explicit_cutoffs_ = std::move(list);
            uniform_cutoff_.reset();
        }
        else if (key == "trotter_dt") params_.trotter_dt = detail::parse_double(key, v);
        else if (key == "trotter_steps") params_.trotter_steps = detail::parse_int(key, v);
        else throw ValidationError("unknown config key '" + key + "'");
    }

    void parse_line(const std::string& line) {
        const std::string body = detail::trim(line.substr(0, line.find('#')));
        if (body.empty()) return;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ValidationError("config line without '=': " + body);
        set(body.substr(0, eq), body.substr(eq + 1));
    }

    void parse_stream(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) parse_line(line);
    }

    [[nodiscard]] ModelParams finish() const {
        ModelParams p = params_;
        if (uniform_cutoff_) p.cutoffs.assign(static_cast<std::size_t>(std::max(p.n_sites, 0)), *uniform_cutoff_);
        else if (explicit_cutoffs_) p.cutoffs = *explicit_cutoffs_;
        else if (static_cast<int>(p.cutoffs.size()) != p.n_sites && !p.cutoffs.empty())
            p.cutoffs.assign(static_cast<std::size_t>(std::max(p.n_sites, 0)), p.cutoffs.front());
        p.validate();
        return p;
    }

private:
    ModelParams params_;
    std::optional<int> uniform_cutoff_;
    std::optional<std::vector<int>> explicit_cutoffs_;
};

inline ModelParams parse_config(std::istream& in, ModelParams base = {}) {
    ConfigBuilder b(std::move(base));
    b.parse_stream(in);
    return b.finish();
}

inline ModelParams load_config(const std::string& path, ModelParams base = {}) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    return parse_config(in, std::move(base));
}

/// Canonical key=value rendering; round-trips through parse_config.
inline std::string to_config_string(const ModelParams& p) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "n_sites=" << p.n_sites << '\n'
       << "lattice_spacing=" << p.lattice_spacing << '\n'
       << "fermion_mass=" << p.fermion_mass << '\n'
       << "boson_mass=" << p.boson_mass << '\n'
       << "coupling=" << p.coupling << '\n'
       << "charge_sector=" << p.charge_sector << '\n'
       << "cutoffs=";
    for (std::size_t i = 0; i < p.cutoffs.size(); ++i) os << (i ? "," : "") << p.cutoffs[i];
    os << '\n'
       << "trotter_dt=" << p.trotter_dt << '\n'
       << "trotter_steps=" << p.trotter_steps << '\n';
    return os.str();
}

}  // namespace hybridsim
