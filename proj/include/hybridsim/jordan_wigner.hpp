#pragma once

// Brute-force check of the Jordan-Wigner mapping behind the spin Hamiltonian.

#include <Eigen/Dense>
#include <vector>

#include "hybridsim/model.hpp"
#include "hybridsim/sector.hpp"
#include "hybridsim/yukawa.hpp"

namespace hybridsim {

struct JordanWignerReport {
    int n_sites = 0;
    double anticommutator_deviation = 0.0;  // max |{psi_i, psi_j^dag} - delta_ij|
    double annihilator_deviation = 0.0;     // max |{psi_i, psi_j}|
    double hamiltonian_deviation = 0.0;     // max over charge sectors, elementwise
    std::vector<std::pair<int, int>> boundary_signs;  // (Q, chi)
};

/// psi_j = prod_{l<j} (i Z_l) sigma^-_j, with sigma^- = (X - iY)/2.
inline DenseMatrix jw_annihilator(int j, int n) {
    OperatorTerm t = term(1.0);
    for (int l = 0; l < j; ++l) t = t * pauli(Pauli::Z, l, cplx{0.0, 1.0});
    const DenseMatrix string = spin_matrix({t}, n);
    const DenseMatrix lower = spin_matrix({pauli(Pauli::X, j, 0.5), pauli(Pauli::Y, j, cplx{0.0, -0.5})}, n);
    return string * lower;
}

/// Checks the canonical anticommutators and compares the spin Hamiltonian
/// (hopping with boundary sign chi = (-1)^(Q+1), staggered mass) with the JW
/// image of the fermionic hopping/mass Hamiltonian, sector by sector.
inline JordanWignerReport jordan_wigner_check(int n, double lattice_spacing = 1.0, double fermion_mass = 0.7) {
    if (n < 2 || n > 6 || n % 2 != 0) throw ValidationError("jordan_wigner_check: N must be even and <= 6");
    JordanWignerReport rep;
    rep.n_sites = n;
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    std::vector<DenseMatrix> psi;
    for (int j = 0; j < n; ++j) psi.push_back(jw_annihilator(j, n));
    const DenseMatrix id = DenseMatrix::Identity(dim, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const DenseMatrix ac = psi[i] * psi[j].adjoint() + psi[j].adjoint() * psi[i] - (i == j ? id : DenseMatrix::Zero(dim, dim));
            const DenseMatrix aa = psi[i] * psi[j] + psi[j] * psi[i];
            rep.anticommutator_deviation = std::max(rep.anticommutator_deviation, ac.cwiseAbs().maxCoeff());
            rep.annihilator_deviation = std::max(rep.annihilator_deviation, aa.cwiseAbs().maxCoeff());
        }

    // H_f = sum_j [ i/(2b) (psi_j^dag psi_{j+1} - h.c.) + m (-1)^(j+1) psi_j^dag psi_j ], psi_N = psi_0
    DenseMatrix hf = DenseMatrix::Zero(dim, dim);
    const cplx i_over_2b{0.0, 1.0 / (2.0 * lattice_spacing)};
    for (int j = 0; j < n; ++j) {
        const int k = (j + 1) % n;
        const DenseMatrix hop = i_over_2b * (psi[j].adjoint() * psi[k]);
        hf += hop + hop.adjoint();
        const double stagger = (j % 2 == 0) ? -1.0 : 1.0;
        hf += fermion_mass * stagger * (psi[j].adjoint() * psi[j]);
    }

    for (int q = -n / 2; q <= n / 2; ++q) {
        ModelParams p;
        p.n_sites = n;
        p.lattice_spacing = lattice_spacing;
        p.fermion_mass = fermion_mass;
        p.charge_sector = q;
        p.cutoffs.assign(static_cast<std::size_t>(n), 0);
        rep.boundary_signs.emplace_back(q, p.boundary_sign());
        const OperatorSum spin = build_fermion_hamiltonian(p);
        const DenseMatrix hs = spin_matrix(spin.terms(), n);
        const auto basis = sector_basis(n, q);
        for (SpinBits r : basis)
            for (SpinBits c : basis) {
                const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
                rep.hamiltonian_deviation = std::max(rep.hamiltonian_deviation, std::abs(hs(ri, ci) - hf(ri, ci)));
            }
    }
    return rep;
}

}  // namespace hybridsim
