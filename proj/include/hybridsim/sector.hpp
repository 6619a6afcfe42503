#pragma once

// Projection of charge-conserving operators onto a fixed-charge sector encoded
// in fewer qubits.

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <map>
#include <vector>

#include "hybridsim/model.hpp"
#include "hybridsim/operator_sum.hpp"
#include "hybridsim/realize.hpp"

namespace hybridsim {

struct SectorMap {
    int n_source_qubits = 0;
    int n_target_qubits = 0;
    std::vector<SpinBits> source;  // sector states, in encoding order
    std::vector<SpinBits> target;  // reduced basis state for each source entry

    void validate() const {
        if (source.size() != target.size() || source.empty())
            throw ValidationError("sector map: source/target size mismatch");
        std::vector<SpinBits> s = source, t = target;
        std::sort(s.begin(), s.end());
        std::sort(t.begin(), t.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end() || std::adjacent_find(t.begin(), t.end()) != t.end())
            throw ValidationError("sector map is not a bijection");
        if (t.back() >= (SpinBits{1} << n_target_qubits)) throw ValidationError("sector map target out of range");
    }

    /// Sector states in descending lexicographic order mapped to |0..0>, |0..1>, ...
    /// Reproduces the encodings |10>->|0>, |01>->|1> (N=2, Q=0) and
    /// |1110>,|1101>,|1011>,|0111> -> |00>,|01>,|10>,|11> (N=4, Q=-1).
    static SectorMap standard(int n_sites, int charge) {
        SectorMap m;
        m.n_source_qubits = n_sites;
        m.source = sector_basis(n_sites, charge);
        std::reverse(m.source.begin(), m.source.end());
        const auto k = m.source.size();
        m.n_target_qubits = (k <= 1) ? 0 : static_cast<int>(std::bit_width(k - 1));
        for (std::size_t i = 0; i < k; ++i) m.target.push_back(i);
        return m;
    }

    static SectorMap standard(const ModelParams& p) { return standard(p.n_sites, p.charge_sector); }
};

/// Dense matrix of a pure Pauli-string sum on n qubits.
inline DenseMatrix spin_matrix(const std::vector<OperatorTerm>& terms, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& t : terms)
        for (std::size_t col = 0; col < dim; ++col) {
            std::size_t row = 0;
            const cplx f = detail::apply_paulis(t.paulis, n_qubits, col, row);
            m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += t.coeff * f;
        }
    return m;
}

/// All 4^n Pauli strings on n qubits (identities omitted from the map).
inline std::vector<std::map<int, Pauli>> all_pauli_strings(int n) {
    std::vector<std::map<int, Pauli>> out;
    const std::size_t count = std::size_t{1} << (2 * n);
    constexpr Pauli letters[4] = {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z};
    for (std::size_t code = 0; code < count; ++code) {
        std::map<int, Pauli> s;
        for (int q = 0; q < n; ++q) {
            const Pauli p = letters[(code >> (2 * (n - 1 - q))) & 3U];
            if (p != Pauli::I) s[q] = p;
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Normalized Hilbert-Schmidt decomposition M = sum_P Tr(P M)/2^n P.
inline std::vector<OperatorTerm> pauli_decompose(const DenseMatrix& m, int n_qubits, double tol = 1e-13) {
    std::vector<OperatorTerm> out;
    const double norm = static_cast<double>(std::size_t{1} << n_qubits);
    for (auto& s : all_pauli_strings(n_qubits)) {
        OperatorTerm p{1.0, s, {}};
        const DenseMatrix pm = spin_matrix({p}, n_qubits);
        const cplx c = (pm * m).trace() / norm;
        if (std::abs(c) > tol) out.push_back(OperatorTerm{c, std::move(s), {}});
    }
    return out;
}

/// Restricts H to the sector and re-expresses it on the reduced qubits.
/// Boson ladder monomials pass through unchanged; each mode may appear at
/// most once per monomial. Throws ChargeViolation if any spin factor couples
/// the sector to its complement by more than `tol`.
inline OperatorSum project_to_sector(const OperatorSum& h, const SectorMap& map, double tol = 1e-10) {
    map.validate();
    if (h.n_qubits() != map.n_source_qubits)
        throw ValidationError("project_to_sector: operator qubit count differs from sector map");
    std::map<std::vector<Ladder>, std::vector<OperatorTerm>> groups;
    for (const auto& t : h.terms()) {
        for (std::size_t a = 0; a < t.ladders.size(); ++a)
            for (std::size_t b = a + 1; b < t.ladders.size(); ++b)
                if (t.ladders[a].mode == t.ladders[b].mode)
                    throw ValidationError("project_to_sector: ladder monomials above degree one per mode are not supported");
        groups[t.ladders].push_back(t);
    }

    const int n = map.n_source_qubits;
    const std::size_t full_dim = std::size_t{1} << n;
    std::vector<char> in_sector(full_dim, 0);
    for (SpinBits s : map.source) in_sector[s] = 1;
    const std::size_t red_dim = std::size_t{1} << map.n_target_qubits;

    OperatorSum out(map.n_target_qubits, h.n_modes());
    for (const auto& [ladders, terms] : groups) {
        const DenseMatrix m = spin_matrix(terms, n);
        double leak = 0.0;
        for (std::size_t r = 0; r < full_dim; ++r)
            for (std::size_t c = 0; c < full_dim; ++c)
                if (in_sector[r] != in_sector[c])
                    leak = std::max(leak, std::abs(m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
        if (leak > tol)
            throw ChargeViolation("charge violation: operator couples the sector to its complement (max element " +
                                  std::to_string(leak) + ")");
        DenseMatrix red = DenseMatrix::Zero(static_cast<Eigen::Index>(red_dim), static_cast<Eigen::Index>(red_dim));
        for (std::size_t k = 0; k < map.source.size(); ++k)
            for (std::size_t l = 0; l < map.source.size(); ++l)
                red(static_cast<Eigen::Index>(map.target[k]), static_cast<Eigen::Index>(map.target[l])) =
                    m(static_cast<Eigen::Index>(map.source[k]), static_cast<Eigen::Index>(map.source[l]));
        for (auto& t : pauli_decompose(red, map.n_target_qubits)) {
            t.ladders = ladders;
            out.add(std::move(t));
        }
    }
    return out.canonical(tol * 1e-2);
}

/// Embeds a reduced spin index back into the full register.
inline SpinBits lift_spin(const SectorMap& map, SpinBits reduced) {
    for (std::size_t k = 0; k < map.target.size(); ++k)
        if (map.target[k] == reduced) return map.source[k];
    throw ValidationError("lift_spin: reduced state not in the sector encoding");
}

}  // namespace hybridsim
