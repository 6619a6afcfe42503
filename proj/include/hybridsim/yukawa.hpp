#pragma once

// Jordan-Wigner-mapped lattice Yukawa Hamiltonian on N qubits and N boson modes.

#include <cmath>
#include <complex>
#include <numbers>

#include "hybridsim/model.hpp"
#include "hybridsim/operator_sum.hpp"

namespace hybridsim {

/// Hopping (with boundary sign chi from the configured sector) plus staggered mass.
inline OperatorSum build_fermion_hamiltonian(const ModelParams& p) {
    p.validate();
    const int n = p.n_sites;
    const double hop = 1.0 / (4.0 * p.lattice_spacing);
    OperatorSum h(n, n);
    for (int j = 0; j + 1 < n; ++j) {
        h.add(pauli(Pauli::X, j) * pauli(Pauli::X, j + 1, hop));
        h.add(pauli(Pauli::Y, j) * pauli(Pauli::Y, j + 1, hop));
    }
    const double chi_hop = p.boundary_sign() * hop;
    h.add(pauli(Pauli::X, n - 1) * pauli(Pauli::X, 0, chi_hop));
    h.add(pauli(Pauli::Y, n - 1) * pauli(Pauli::Y, 0, chi_hop));
    for (int j = 0; j < n; ++j) {
        const double stagger = (j % 2 == 0) ? -1.0 : 1.0;
        h.add(pauli(Pauli::Z, j, 0.5 * p.fermion_mass * stagger));
    }
    return h.canonical();
}

/// sum_m eps_m a_m^dag a_m; the zero-point constant is dropped.
inline OperatorSum build_boson_hamiltonian(const ModelParams& p) {
    p.validate();
    OperatorSum h(p.n_sites, p.n_sites);
    for (int m = 0; m < p.n_sites; ++m) h.add(number(m, mode_energy(p, m)));
    return h.canonical();
}

inline OperatorSum build_interaction_hamiltonian(const ModelParams& p) {
    p.validate();
    const int n = p.n_sites;
    OperatorSum h(n, n);
    if (p.coupling == 0.0) return h;
    const double pref = std::sqrt(p.coupling * p.coupling * p.lattice_spacing / (8.0 * n));
    for (int m = 0; m < n; ++m) {
        const double eps = mode_energy(p, m);
        if (!(eps > 0.0))
            throw ValidationError("interaction undefined: mode " + std::to_string(m) +
                                  " has zero energy (set boson_mass > 0)");
        const double amp = pref / std::sqrt(eps);
        for (int j = 0; j < n; ++j) {
            const double angle = 2.0 * std::numbers::pi * (j + 1) * (m - n / 2.0) / n;
            const cplx c = amp * std::polar(1.0, -angle);
            // (1_j + Z_j) (c a^dag + c* a)
            h.add(create(m, c));
            h.add(annihilate(m, std::conj(c)));
            h.add(pauli(Pauli::Z, j) * create(m, c));
            h.add(pauli(Pauli::Z, j) * annihilate(m, std::conj(c)));
        }
    }
    return h.canonical();
}

/// H = H_f + H_b + H_fb on the full N-qubit register.
inline OperatorSum build_full_hamiltonian(const ModelParams& p) {
    return (build_fermion_hamiltonian(p) + build_boson_hamiltonian(p) + build_interaction_hamiltonian(p)).canonical();
}

/// Staggered charge operator Q as a diagonal OperatorSum (constant part kept).
inline OperatorSum build_charge_operator(int n_sites) {
    OperatorSum q(n_sites, 0);
    for (int j = 0; j < n_sites; ++j) {
        const double stagger = (j % 2 == 0) ? -1.0 : 1.0;
        q.add(term(0.5 * stagger));
        q.add(pauli(Pauli::Z, j, 0.5));
    }
    return q.canonical();
}

}  // namespace hybridsim
