#pragma once

// Dense statevector over qubits x truncated Fock modes.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "hybridsim/layout.hpp"
#include "hybridsim/realize.hpp"

namespace hybridsim {

class HybridState {
public:
    HybridState() = default;

    /// Zero vector of the layout's dimension (not normalized; use a factory).
    explicit HybridState(Layout layout)
        : layout_(std::move(layout)), amps_(Vector::Zero(static_cast<Eigen::Index>(layout_.dim()))) {}

    HybridState(Layout layout, Vector amplitudes) : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
        if (static_cast<std::size_t>(amps_.size()) != layout_.dim())
            throw ValidationError("hybrid state: amplitude count does not match layout");
    }

    [[nodiscard]] const Layout& layout() const { return layout_; }
    [[nodiscard]] const Vector& amplitudes() const { return amps_; }
    [[nodiscard]] Vector& amplitudes() { return amps_; }
    [[nodiscard]] std::size_t dim() const { return layout_.dim(); }
    [[nodiscard]] int n_qubits() const { return layout_.n_qubits(); }
    [[nodiscard]] double norm() const { return amps_.norm(); }

    cplx& operator[](std::size_t i) { return amps_(static_cast<Eigen::Index>(i)); }
    const cplx& operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }

private:
    Layout layout_;
    Vector amps_;
};

inline HybridState vacuum_state(const Layout& layout) {
    HybridState s(layout);
    s[0] = 1.0;
    return s;
}

inline HybridState vacuum_state(int n_qubits, const std::vector<int>& cutoffs) {
    return vacuum_state(Layout(n_qubits, cutoffs));
}

inline HybridState basis_state(const Layout& layout, std::size_t spin, const std::vector<int>& occupations) {
    HybridState s(layout);
    s[layout.encode(spin, occupations)] = 1.0;
    return s;
}

/// |spin> (x) |mode_0> (x) ... from per-factor amplitude vectors (normalized on output).
inline HybridState product_state(const Layout& layout, const Vector& spin,
                                 const std::vector<Vector>& modes) {
    if (static_cast<std::size_t>(spin.size()) != layout.spin_dim() || modes.size() != layout.n_modes())
        throw ValidationError("product_state: factor dimensions do not match layout");
    Vector v = spin;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        if (modes[k].size() != layout.cutoffs()[k] + 1)
            throw ValidationError("product_state: mode factor has wrong length");
        Vector next(v.size() * modes[k].size());
        for (Eigen::Index i = 0; i < v.size(); ++i) next.segment(i * modes[k].size(), modes[k].size()) = v(i) * modes[k];
        v = std::move(next);
    }
    v.normalize();
    return HybridState(layout, std::move(v));
}

/// Probability of each spin basis state (all qubits), summed over Fock levels.
inline std::vector<double> spin_marginal(const HybridState& s) {
    const auto& l = s.layout();
    std::vector<double> p(l.spin_dim(), 0.0);
    const std::size_t f = l.fock_dim();
    for (std::size_t sp = 0; sp < l.spin_dim(); ++sp)
        p[sp] = s.amplitudes().segment(static_cast<Eigen::Index>(sp * f), static_cast<Eigen::Index>(f)).squaredNorm();
    return p;
}

/// Marginal over the leading `k` qubits (e.g. system qubits when ancillas
/// are appended after them).
inline std::vector<double> qubit_marginal(const HybridState& s, int k) {
    if (k < 0 || k > s.n_qubits()) throw ValidationError("qubit_marginal: bad qubit count");
    const auto full = spin_marginal(s);
    std::vector<double> p(std::size_t{1} << k, 0.0);
    const int drop = s.n_qubits() - k;
    for (std::size_t sp = 0; sp < full.size(); ++sp) p[sp >> drop] += full[sp];
    return p;
}

/// P(n) for the mode with physical label `mode`, n = 0..cutoff.
inline std::vector<double> mode_marginal(const HybridState& s, int mode) {
    const auto& l = s.layout();
    const std::size_t pos = l.mode_position(mode);
    const std::size_t stride = l.mode_stride(pos);
    const auto levels = static_cast<std::size_t>(l.cutoffs()[pos] + 1);
    std::vector<double> p(levels, 0.0);
    const auto& a = s.amplitudes();
    for (std::size_t i = 0; i < l.dim(); ++i) p[(i / stride) % levels] += std::norm(a(static_cast<Eigen::Index>(i)));
    return p;
}

/// Probability at the top Fock level of every mode (layout order).
inline std::vector<double> leakage(const HybridState& s) {
    std::vector<double> out;
    for (int label : s.layout().mode_labels()) out.push_back(mode_marginal(s, label).back());
    return out;
}

inline cplx overlap(const HybridState& a, const HybridState& b) {
    if (!(a.layout() == b.layout())) throw ValidationError("overlap: layouts differ");
    return a.amplitudes().dot(b.amplitudes());
}

inline double fidelity(const HybridState& a, const HybridState& b) { return std::norm(overlap(a, b)); }

// ---------------------------------------------------------------------------
// binary dump: "HYST", u32 n_qubits, u32 mode count, u32 version (16 bytes),
// then one u32 cutoff per mode, then little-endian f64 (re, im) pairs.

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4] = {};
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("state dump truncated");
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}
inline void put_f64(std::ostream& os, double d) {
    std::uint64_t u = 0;
    std::memcpy(&u, &d, 8);
    for (int k = 0; k < 8; ++k) os.put(static_cast<char>((u >> (8 * k)) & 0xFFU));
}
inline double get_f64(std::istream& in) {
    unsigned char b[8] = {};
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("state dump truncated");
    std::uint64_t u = 0;
    for (int k = 0; k < 8; ++k) u |= std::uint64_t{b[k]} << (8 * k);
    double d = 0;
    std::memcpy(&d, &u, 8);
    return d;
}
}  // namespace detail

inline void write_state(std::ostream& os, const HybridState& s) {
    os.write("HYST", 4);
    detail::put_u32(os, static_cast<std::uint32_t>(s.n_qubits()));
    detail::put_u32(os, static_cast<std::uint32_t>(s.layout().n_modes()));
    detail::put_u32(os, 1);
    for (int c : s.layout().cutoffs()) detail::put_u32(os, static_cast<std::uint32_t>(c));
    for (Eigen::Index i = 0; i < s.amplitudes().size(); ++i) {
        detail::put_f64(os, s.amplitudes()(i).real());
        detail::put_f64(os, s.amplitudes()(i).imag());
    }
}

inline HybridState read_state(std::istream& in) {
    char magic[4] = {};
    if (!in.read(magic, 4) || std::memcmp(magic, "HYST", 4) != 0) throw ValidationError("state dump: bad magic");
    const auto nq = detail::get_u32(in);
    const auto nm = detail::get_u32(in);
    if (detail::get_u32(in) != 1) throw ValidationError("state dump: unsupported version");
    std::vector<int> cut;
    for (std::uint32_t k = 0; k < nm; ++k) cut.push_back(static_cast<int>(detail::get_u32(in)));
    Layout layout(static_cast<int>(nq), cut);
    Vector v(static_cast<Eigen::Index>(layout.dim()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double re = detail::get_f64(in);
        v(i) = {re, detail::get_f64(in)};
    }
    return HybridState(layout, std::move(v));
}

}  // namespace hybridsim
