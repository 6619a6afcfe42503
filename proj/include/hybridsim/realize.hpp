#pragma once

// Matrix realization of OperatorSum on the truncated hybrid space.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "hybridsim/layout.hpp"
#include "hybridsim/operator_sum.hpp"

namespace hybridsim {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace detail {

/// Applies a Pauli string to a spin index: returns the amplitude factor and
/// writes the image index.
inline cplx apply_paulis(const std::map<int, Pauli>& paulis, int n_qubits, std::size_t spin,
                         std::size_t& out_spin) {
    cplx f = 1.0;
    out_spin = spin;
    for (const auto& [q, p] : paulis) {
        const std::size_t mask = std::size_t{1} << (n_qubits - 1 - q);
        const bool one = (spin & mask) != 0;
        switch (p) {
            case Pauli::I: break;
            case Pauli::X: out_spin ^= mask; break;
            case Pauli::Y:
                out_spin ^= mask;
                f *= one ? cplx{0.0, -1.0} : cplx{0.0, 1.0};
                break;
            case Pauli::Z:
                if (one) f = -f;
                break;
        }
    }
    return f;
}

}  // namespace detail

/// Matrix of H on `layout`. a^dag has entries sqrt(n+1) up to the cutoff and
/// annihilates the top level. Throws if H references a qubit or mode the
/// layout does not hold.
inline SparseMatrix realize_matrix(const OperatorSum& h, const Layout& layout) {
    if (h.n_qubits() > layout.n_qubits())
        throw ValidationError("realize_matrix: operator acts on more qubits than the layout holds");
    for (const auto& t : h.terms())
        for (const auto& l : t.ladders) (void)layout.mode_position(l.mode);

    const std::size_t dim = layout.dim();
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(h.size() * dim);
    std::vector<int> occ(layout.n_modes());
    for (const auto& t : h.terms()) {
        std::vector<std::pair<std::size_t, LadderKind>> lads;
        for (const auto& l : t.ladders) lads.emplace_back(layout.mode_position(l.mode), l.kind);
        for (std::size_t col = 0; col < dim; ++col) {
            // ladders: rightmost first
            cplx amp = t.coeff;
            std::size_t idx = col;
            bool zero = false;
            for (auto it = lads.rbegin(); it != lads.rend(); ++it) {
                const auto [pos, kind] = *it;
                const int n = layout.occupation(idx, pos);
                const std::size_t stride = layout.mode_stride(pos);
                if (kind == LadderKind::Number) {
                    amp *= static_cast<double>(n);
                    if (n == 0) zero = true;
                } else if (kind == LadderKind::Creation) {
                    if (n >= layout.cutoffs()[pos]) { zero = true; break; }
                    amp *= std::sqrt(static_cast<double>(n + 1));
                    idx += stride;
                } else {
                    if (n == 0) { zero = true; break; }
                    amp *= std::sqrt(static_cast<double>(n));
                    idx -= stride;
                }
                if (zero) break;
            }
            if (zero) continue;
            const std::size_t spin = idx / layout.fock_dim();
            const std::size_t rest = idx % layout.fock_dim();
            std::size_t out_spin = 0;
            amp *= detail::apply_paulis(t.paulis, layout.n_qubits(), spin, out_spin);
            trips.emplace_back(static_cast<int>(out_spin * layout.fock_dim() + rest), static_cast<int>(col), amp);
        }
    }
    SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(trips.begin(), trips.end());
    m.prune(cplx{0.0, 0.0}, 0.0);
    return m;
}

inline SparseMatrix realize_matrix(const OperatorSum& h, const std::vector<int>& cutoffs,
                                   std::size_t capacity = kDefaultCapacity) {
    return realize_matrix(h, Layout(h.n_qubits(), cutoffs, {}, capacity));
}

/// max_ij |A - A^dag|_ij
inline double hermiticity_defect(const SparseMatrix& a) {
    const SparseMatrix d = a - SparseMatrix(a.adjoint());
    double m = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

inline double max_abs(const SparseMatrix& a) {
    double m = 0.0;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

}  // namespace hybridsim
