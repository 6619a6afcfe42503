#pragma once

// Measured quantities: probability tables over time, mean occupations,
// weight of a state inside a charge sector.

#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "hybridsim/hybrid_state.hpp"
#include "hybridsim/model.hpp"

namespace hybridsim {

struct Target {
    enum class Kind { Spin, Mode };
    Kind kind = Kind::Spin;
    int mode = -1;
    int n_qubits = -1;  // leading qubits for a spin target; -1 = all

    static Target spin(int n_qubits = -1) { return {Kind::Spin, -1, n_qubits}; }
    static Target of_mode(int m) { return {Kind::Mode, m, -1}; }
};

struct ProbabilityTable {
    std::vector<std::string> labels;
    std::vector<double> times;
    std::vector<std::vector<double>> rows;

    /// max over rows of |sum - 1|
    [[nodiscard]] double stochasticity_defect() const {
        double d = 0.0;
        for (const auto& r : rows) {
            double s = 0.0;
            for (double x : r) s += x;
            d = std::max(d, std::abs(s - 1.0));
        }
        return d;
    }
};

inline std::vector<double> marginal(const HybridState& s, const Target& t) {
    if (t.kind == Target::Kind::Mode) return mode_marginal(s, t.mode);
    return qubit_marginal(s, t.n_qubits < 0 ? s.n_qubits() : t.n_qubits);
}

/// Rows = times, columns = reduced-qubit kets ("00", "01", ...) or Fock levels ("0", "1", ...).
inline ProbabilityTable probability_series(const std::vector<HybridState>& snapshots, const std::vector<double>& times,
                                           const Target& target) {
    if (snapshots.size() != times.size()) throw ValidationError("probability_series: times/snapshots mismatch");
    ProbabilityTable t;
    t.times = times;
    for (const auto& s : snapshots) {
        auto row = marginal(s, target);
        if (!t.rows.empty() && row.size() != t.rows.front().size())
            throw ValidationError("probability_series: inconsistent snapshot dimensions");
        t.rows.push_back(std::move(row));
    }
    if (!t.rows.empty()) {
        const std::size_t n = t.rows.front().size();
        const int nq = target.kind == Target::Kind::Spin ? static_cast<int>(std::bit_width(n) - 1) : 0;
        for (std::size_t k = 0; k < n; ++k)
            t.labels.push_back(target.kind == Target::Kind::Spin ? ket_label(k, nq) : std::to_string(k));
    }
    return t;
}

/// Largest elementwise difference between two tables of the same shape.
inline double max_table_deviation(const ProbabilityTable& a, const ProbabilityTable& b) {
    if (a.rows.size() != b.rows.size()) throw ValidationError("table deviation: row count mismatch");
    double d = 0.0;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        if (a.rows[r].size() != b.rows[r].size()) throw ValidationError("table deviation: column count mismatch");
        for (std::size_t c = 0; c < a.rows[r].size(); ++c) d = std::max(d, std::abs(a.rows[r][c] - b.rows[r][c]));
    }
    return d;
}

inline double mean_occupation(const HybridState& s, int mode) {
    const auto p = mode_marginal(s, mode);
    double m = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) m += static_cast<double>(n) * p[n];
    return m;
}

/// Probability that the spin register lies in `sector` (list of spin basis states).
inline double sector_weight(const HybridState& s, const std::vector<SpinBits>& sector) {
    const auto p = spin_marginal(s);
    double w = 0.0;
    for (SpinBits b : sector) {
        if (b >= p.size()) throw ValidationError("sector_weight: sector state outside the spin register");
        w += p[b];
    }
    return w;
}

}  // namespace hybridsim
