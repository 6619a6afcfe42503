#pragma once

// Hardware gate set on the truncated hybrid space: single-qubit rotations,
// Molmer-Sorensen, spin-dependent kicks (SNP), mode phases, displacements and
// CNOT, plus the logical sigma^z-conditioned kick used before lowering.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hybridsim/hybrid_state.hpp"
#include "hybridsim/model.hpp"

namespace hybridsim {

enum class GateKind { RX, RY, RZ, MS, CNOT, SNP, ModePhase, Displace, ZKick };

inline const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::MS: return "MS";
        case GateKind::CNOT: return "CNOT";
        case GateKind::SNP: return "SNP";
        case GateKind::ModePhase: return "MODEPHASE";
        case GateKind::Displace: return "DISPLACE";
        case GateKind::ZKick: return "ZKICK";
    }
    return "?";
}

/// One gate instruction.
///
///   RX/RY/RZ(theta)   exp(-i theta sigma/2)
///   MS(theta)         exp(-i theta X_i X_j / 2)
///   CNOT              qubits = {control, target}
///   SNP(theta, phi)   exp(-i theta sigma^y (e^{i phi} a + e^{-i phi} a^dag) / 2)
///   ZKICK(theta, phi) same with sigma^z in place of sigma^y (logical gate)
///   MODEPHASE(theta)  exp(-i theta a^dag a)
///   DISPLACE(alpha)   exp(alpha a^dag - alpha* a)
///
/// `step` and `label` are bookkeeping for Trotter circuits and do not affect
/// the unitary.
struct GateOp {
    GateKind kind = GateKind::RX;
    std::array<int, 2> qubits{-1, -1};
    int mode = -1;
    double theta = 0.0;
    double phi = 0.0;
    cplx alpha{0.0, 0.0};
    int step = -1;
    std::string label;

    [[nodiscard]] int qubit_arity() const {
        switch (kind) {
            case GateKind::MS:
            case GateKind::CNOT: return 2;
            case GateKind::ModePhase:
            case GateKind::Displace: return 0;
            default: return 1;
        }
    }
    [[nodiscard]] bool has_mode() const {
        return kind == GateKind::SNP || kind == GateKind::ZKick || kind == GateKind::ModePhase ||
               kind == GateKind::Displace;
    }
    [[nodiscard]] bool touches_qubit(int q) const {
        for (int k = 0; k < qubit_arity(); ++k)
            if (qubits[k] == q) return true;
        return false;
    }

    void validate() const {
        if (!std::isfinite(theta) || !std::isfinite(phi) || !std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
            throw ValidationError(std::string(gate_name(kind)) + ": non-finite angle");
        for (int k = 0; k < qubit_arity(); ++k)
            if (qubits[k] < 0) throw ValidationError(std::string(gate_name(kind)) + ": missing qubit target");
        if (qubit_arity() == 2 && qubits[0] == qubits[1])
            throw ValidationError(std::string(gate_name(kind)) + ": qubits must be distinct");
        if (has_mode() && mode < 0) throw ValidationError(std::string(gate_name(kind)) + ": missing mode target");
    }
};

namespace detail {
inline GateOp make_gate(GateKind k, int q0, int q1, int mode, double theta, double phi = 0.0) {
    GateOp g;
    g.kind = k;
    g.qubits = {q0, q1};
    g.mode = mode;
    g.theta = theta;
    g.phi = phi;
    return g;
}
}  // namespace detail

inline GateOp rx(int q, double theta) { return detail::make_gate(GateKind::RX, q, -1, -1, theta); }
inline GateOp ry(int q, double theta) { return detail::make_gate(GateKind::RY, q, -1, -1, theta); }
inline GateOp rz(int q, double theta) { return detail::make_gate(GateKind::RZ, q, -1, -1, theta); }
inline GateOp ms(int i, int j, double theta) { return detail::make_gate(GateKind::MS, i, j, -1, theta); }
inline GateOp cnot(int control, int target) { return detail::make_gate(GateKind::CNOT, control, target, -1, 0.0); }
inline GateOp snp(int q, int m, double theta, double phi) { return detail::make_gate(GateKind::SNP, q, -1, m, theta, phi); }
inline GateOp zkick(int q, int m, double theta, double phi) { return detail::make_gate(GateKind::ZKick, q, -1, m, theta, phi); }
inline GateOp mode_phase(int m, double theta) { return detail::make_gate(GateKind::ModePhase, -1, -1, m, theta); }
inline GateOp displace(int m, cplx alpha) {
    GateOp g = detail::make_gate(GateKind::Displace, -1, -1, m, 0.0);
    g.alpha = alpha;
    return g;
}

/// Displacement amplitude of exp(-i theta (e^{i phi} a + e^{-i phi} a^dag) / 2).
inline cplx kick_alpha(double theta, double phi) { return cplx{0.0, -0.5 * theta} * std::polar(1.0, -phi); }

struct Circuit {
    int n_qubits = 0;
    std::vector<int> modes;
    std::vector<GateOp> ops;

    Circuit& add(GateOp g) {
        ops.push_back(std::move(g));
        return *this;
    }
    Circuit& append(const Circuit& other) {
        ops.insert(ops.end(), other.ops.begin(), other.ops.end());
        return *this;
    }
    [[nodiscard]] std::size_t count(GateKind k) const {
        std::size_t c = 0;
        for (const auto& g : ops) c += (g.kind == k);
        return c;
    }
    void validate() const {
        for (const auto& g : ops) {
            g.validate();
            for (int k = 0; k < g.qubit_arity(); ++k)
                if (g.qubits[k] >= n_qubits) throw ValidationError("circuit: qubit target out of range");
            if (g.has_mode()) {
                bool found = false;
                for (int m : modes) found = found || (m == g.mode);
                if (!found) throw ValidationError("circuit: mode target not in circuit mode set");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// truncated mode operators

/// exp(alpha a^dag - alpha* a) on levels 0..cutoff, obtained by exponentiating
/// the truncated Hermitian generator, so the result is exactly unitary.
inline DenseMatrix displacement_matrix(int cutoff, cplx alpha) {
    const int d = cutoff + 1;
    DenseMatrix gen = DenseMatrix::Zero(d, d);  // i (alpha a^dag - alpha* a)
    for (int n = 0; n < cutoff; ++n) {
        const double s = std::sqrt(n + 1.0);
        gen(n + 1, n) = cplx{0.0, 1.0} * alpha * s;
        gen(n, n + 1) = cplx{0.0, -1.0} * std::conj(alpha) * s;
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gen);
    const Eigen::VectorXcd phases = (cplx{0.0, -1.0} * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// Thread-safe cache of displacement matrices keyed by (cutoff, alpha rounded
/// to 12 decimal digits).
class DisplacementCache {
public:
    std::shared_ptr<const DenseMatrix> get(int cutoff, cplx alpha) {
        const Key key{cutoff, std::llround(alpha.real() * 1e12), std::llround(alpha.imag() * 1e12)};
        {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        auto m = std::make_shared<const DenseMatrix>(displacement_matrix(cutoff, alpha));
        std::unique_lock lock(mutex_);
        if (cache_.size() > kMaxEntries) cache_.clear();
        return cache_.emplace(key, std::move(m)).first->second;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return cache_.size();
    }

    static DisplacementCache& global() {
        static DisplacementCache instance;
        return instance;
    }

private:
    using Key = std::tuple<int, long long, long long>;
    static constexpr std::size_t kMaxEntries = 100'000;
    mutable std::shared_mutex mutex_;
    std::map<Key, std::shared_ptr<const DenseMatrix>> cache_;
};

// ---------------------------------------------------------------------------
// kernels

namespace detail {

/// u applied to the fibre of mode position `pos`; if `qubit` >= 0, only the
/// fibres whose qubit bit equals `bit` are touched.
inline void apply_mode_matrix(HybridState& s, std::size_t pos, const DenseMatrix& u, int qubit = -1, int bit = 0) {
    const auto& l = s.layout();
    const std::size_t stride = l.mode_stride(pos);
    const auto levels = static_cast<std::size_t>(l.cutoffs()[pos] + 1);
    const std::size_t block = stride * levels;
    const std::size_t qmask = qubit >= 0 ? l.qubit_stride(qubit) : 0;
    Vector buf(static_cast<Eigen::Index>(levels));
    Vector out(static_cast<Eigen::Index>(levels));
    auto& a = s.amplitudes();
    for (std::size_t hi = 0; hi < l.dim(); hi += block) {
        if (qubit >= 0 && (((hi / qmask) & 1U) != static_cast<std::size_t>(bit))) continue;
        for (std::size_t lo = 0; lo < stride; ++lo) {
            const std::size_t base = hi + lo;
            for (std::size_t n = 0; n < levels; ++n) buf(static_cast<Eigen::Index>(n)) = a(static_cast<Eigen::Index>(base + n * stride));
            out.noalias() = u * buf;
            for (std::size_t n = 0; n < levels; ++n) a(static_cast<Eigen::Index>(base + n * stride)) = out(static_cast<Eigen::Index>(n));
        }
    }
}

using Mat2 = Eigen::Matrix2cd;

inline void apply_qubit_matrix(HybridState& s, int q, const Mat2& u) {
    const std::size_t stride = s.layout().qubit_stride(q);
    auto& a = s.amplitudes();
    const std::size_t dim = s.dim();
    for (std::size_t hi = 0; hi < dim; hi += 2 * stride)
        for (std::size_t lo = 0; lo < stride; ++lo) {
            const auto i0 = static_cast<Eigen::Index>(hi + lo), i1 = static_cast<Eigen::Index>(hi + lo + stride);
            const cplx x0 = a(i0), x1 = a(i1);
            a(i0) = u(0, 0) * x0 + u(0, 1) * x1;
            a(i1) = u(1, 0) * x0 + u(1, 1) * x1;
        }
}

inline Mat2 rotation(GateKind k, double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    Mat2 u;
    switch (k) {
        case GateKind::RX: u << c, cplx{0, -s}, cplx{0, -s}, c; break;
        case GateKind::RY: u << c, -s, s, c; break;
        case GateKind::RZ: u << std::polar(1.0, -theta / 2), 0.0, 0.0, std::polar(1.0, theta / 2); break;
        default: throw ValidationError("not a rotation");
    }
    return u;
}

/// Columns are the sigma^y eigenvectors |+y> = (|0> + i|1>)/sqrt2, |-y> = (|0> - i|1>)/sqrt2.
inline Mat2 y_basis() {
    const double r = 1.0 / std::sqrt(2.0);
    Mat2 v;
    v << r, r, cplx{0, r}, cplx{0, -r};
    return v;
}

/// Applies D(+alpha) where the qubit bit is 0 and D(-alpha) where it is 1.
inline void apply_conditional_displacement(HybridState& s, int q, int mode, cplx alpha) {
    const auto& l = s.layout();
    const std::size_t pos = l.mode_position(mode);
    auto& cache = DisplacementCache::global();
    const auto plus = cache.get(l.cutoffs()[pos], alpha);
    const auto minus = cache.get(l.cutoffs()[pos], -alpha);
    apply_mode_matrix(s, pos, *plus, q, 0);
    apply_mode_matrix(s, pos, *minus, q, 1);
}

}  // namespace detail

/// In-place application of one gate.
inline void apply_gate(const GateOp& g, HybridState& s) {
    g.validate();
    const auto& l = s.layout();
    for (int k = 0; k < g.qubit_arity(); ++k) l.check_qubit(g.qubits[k]);
    switch (g.kind) {
        case GateKind::RX:
        case GateKind::RY:
        case GateKind::RZ: detail::apply_qubit_matrix(s, g.qubits[0], detail::rotation(g.kind, g.theta)); break;
        case GateKind::MS: {
            const std::size_t si = l.qubit_stride(g.qubits[0]), sj = l.qubit_stride(g.qubits[1]);
            const double c = std::cos(g.theta / 2), sn = std::sin(g.theta / 2);
            const cplx mis{0.0, -sn};
            auto& a = s.amplitudes();
            for (std::size_t i = 0; i < s.dim(); ++i) {
                if ((i / si) & 1U) continue;  // visit pairs from the bit_i = 0 side
                const std::size_t j = i + si;
                const std::size_t partner_i = ((i / sj) & 1U) ? j - sj : j + sj;  // flip both bits
                const auto x = static_cast<Eigen::Index>(i), y = static_cast<Eigen::Index>(partner_i);
                const cplx ai = a(x), ap = a(y);
                a(x) = c * ai + mis * ap;
                a(y) = mis * ai + c * ap;
            }
            break;
        }
        case GateKind::CNOT: {
            const std::size_t sc = l.qubit_stride(g.qubits[0]), st = l.qubit_stride(g.qubits[1]);
            auto& a = s.amplitudes();
            for (std::size_t i = 0; i < s.dim(); ++i)
                if (((i / sc) & 1U) && !((i / st) & 1U)) std::swap(a(static_cast<Eigen::Index>(i)), a(static_cast<Eigen::Index>(i + st)));
            break;
        }
        case GateKind::SNP: {
            // |+y><+y| (x) D(alpha) + |-y><-y| (x) D(-alpha)
            const auto v = detail::y_basis();
            detail::apply_qubit_matrix(s, g.qubits[0], v.adjoint());
            detail::apply_conditional_displacement(s, g.qubits[0], g.mode, kick_alpha(g.theta, g.phi));
            detail::apply_qubit_matrix(s, g.qubits[0], v);
            break;
        }
        case GateKind::ZKick:
            detail::apply_conditional_displacement(s, g.qubits[0], g.mode, kick_alpha(g.theta, g.phi));
            break;
        case GateKind::ModePhase: {
            const std::size_t pos = l.mode_position(g.mode);
            const std::size_t stride = l.mode_stride(pos);
            const auto levels = static_cast<std::size_t>(l.cutoffs()[pos] + 1);
            std::vector<cplx> ph(levels);
            for (std::size_t n = 0; n < levels; ++n) ph[n] = std::polar(1.0, -g.theta * static_cast<double>(n));
            auto& a = s.amplitudes();
            for (std::size_t i = 0; i < s.dim(); ++i) a(static_cast<Eigen::Index>(i)) *= ph[(i / stride) % levels];
            break;
        }
        case GateKind::Displace: {
            const std::size_t pos = l.mode_position(g.mode);
            detail::apply_mode_matrix(s, pos, *DisplacementCache::global().get(l.cutoffs()[pos], g.alpha));
            break;
        }
    }
}

/// Functional form: returns U|state>.
inline HybridState apply(const GateOp& g, HybridState s) {
    apply_gate(g, s);
    return s;
}

inline void apply_circuit(const Circuit& c, HybridState& s) {
    for (const auto& g : c.ops) apply_gate(g, s);
}

/// Dense matrix of a gate or circuit on a layout (columns = images of basis states).
inline DenseMatrix circuit_matrix(const Circuit& c, const Layout& layout) {
    const auto dim = static_cast<Eigen::Index>(layout.dim());
    DenseMatrix u(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        HybridState s(layout);
        s[static_cast<std::size_t>(col)] = 1.0;
        apply_circuit(c, s);
        u.col(col) = s.amplitudes();
    }
    return u;
}

inline DenseMatrix gate_matrix(const GateOp& g, const Layout& layout) {
    Circuit c;
    c.ops.push_back(g);
    return circuit_matrix(c, layout);
}

/// min over global phases of max |A - e^{i phase} B|
inline double distance_up_to_phase(const DenseMatrix& a, const DenseMatrix& b) {
    const cplx ip = (b.adjoint() * a).trace();
    const cplx phase = std::abs(ip) > 0 ? ip / std::abs(ip) : cplx{1.0, 0.0};
    return (a - phase * b).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// standard decompositions

/// CNOT(control, target) from one MS(pi/2) dressed with single-qubit rotations.
/// Equal to CNOT up to a global phase.
inline Circuit cnot_decomposition(int control, int target) {
    if (control == target) throw ValidationError("cnot_decomposition: qubits must be distinct");
    constexpr double h = std::numbers::pi / 2;
    Circuit c;
    c.n_qubits = std::max(control, target) + 1;
    c.add(ry(control, h)).add(ms(control, target, h)).add(rx(control, -h)).add(rx(target, -h)).add(ry(control, -h));
    return c;
}

/// exp(-i theta sigma^z_q (e^{i phi} a + e^{-i phi} a^dag)/2) from an SNP
/// conjugated by RX(-/+ pi/2). With `zz_control`, realizes the
/// sigma^z_c sigma^z_q variant via CNOT(c, q) conjugation (CNOTs lowered to MS).
inline Circuit conjugated_kick(int qubit, int mode, double theta, double phi, std::optional<int> zz_control = std::nullopt) {
    constexpr double h = std::numbers::pi / 2;
    Circuit c;
    c.n_qubits = std::max(qubit, zz_control.value_or(0)) + 1;
    c.modes = {mode};
    Circuit core;
    core.add(rx(qubit, -h)).add(snp(qubit, mode, theta, phi)).add(rx(qubit, h));
    if (zz_control) {
        c.append(cnot_decomposition(*zz_control, qubit));
        c.append(core);
        c.append(cnot_decomposition(*zz_control, qubit));
    } else {
        c.append(core);
    }
    return c;
}

enum class KickMechanism { DirectDisplacement, Ancilla };

/// exp(-i theta (e^{i phi} a + e^{-i phi} a^dag)/2) on a mode with no spin
/// factor: either a plain displacement, or an SNP on an ancilla rotated into
/// the +1 eigenstate of sigma^y (and rotated back afterwards).
inline Circuit identity_kick(int mode, double theta, double phi, KickMechanism mech, std::optional<int> ancilla = std::nullopt) {
    Circuit c;
    c.modes = {mode};
    if (mech == KickMechanism::DirectDisplacement) {
        c.add(displace(mode, kick_alpha(theta, phi)));
        return c;
    }
    if (!ancilla) throw ValidationError("identity_kick: ancilla mechanism requires an ancilla qubit");
    constexpr double h = std::numbers::pi / 2;
    c.n_qubits = *ancilla + 1;
    c.add(rx(*ancilla, -h)).add(snp(*ancilla, mode, theta, phi)).add(rx(*ancilla, h));
    return c;
}

/// Replaces logical CNOT and ZKICK gates with native gates.
inline Circuit lower_to_native(const Circuit& in) {
    Circuit out;
    out.n_qubits = in.n_qubits;
    out.modes = in.modes;
    for (const auto& g : in.ops) {
        Circuit sub;
        if (g.kind == GateKind::CNOT) sub = cnot_decomposition(g.qubits[0], g.qubits[1]);
        else if (g.kind == GateKind::ZKick) sub = conjugated_kick(g.qubits[0], g.mode, g.theta, g.phi);
        else {
            out.ops.push_back(g);
            continue;
        }
        for (auto& s : sub.ops) {
            s.step = g.step;
            s.label = g.label;
            out.ops.push_back(std::move(s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// phase frame

/// Running record of mode phases exp(-i theta a^dag a) that have been moved
/// past later gates instead of being applied.
class PhaseFrame {
public:
    /// Returns the gate to execute in place of `g`, or nullopt if `g` was
    /// absorbed into the frame.
    std::optional<GateOp> absorb(const GateOp& g) {
        if (g.kind == GateKind::ModePhase) {
            frame_[g.mode] += g.theta;
            return std::nullopt;
        }
        GateOp out = g;
        if (auto it = frame_.find(g.mode); g.has_mode() && it != frame_.end()) {
            if (g.kind == GateKind::SNP || g.kind == GateKind::ZKick) out.phi = g.phi - it->second;
            else if (g.kind == GateKind::Displace) out.alpha = g.alpha * std::polar(1.0, it->second);
        }
        return out;
    }
    [[nodiscard]] const std::map<int, double>& residual() const { return frame_; }

    /// Applies the pending phases so the state matches the uncompiled circuit.
    void restore(HybridState& s) const {
        for (const auto& [m, theta] : frame_)
            if (s.layout().has_mode(m)) apply_gate(mode_phase(m, theta), s);
    }

private:
    std::map<int, double> frame_;
};

struct CompiledCircuit {
    Circuit circuit;
    std::map<int, double> residual;  // per-mode phase left at the end (diagonal in Fock basis)
};

/// Removes every MODEPHASE by shifting the phase of later SNP/ZKICK/DISPLACE
/// gates on the same mode.
inline CompiledCircuit compile_mode_phases(const Circuit& in) {
    CompiledCircuit out;
    out.circuit.n_qubits = in.n_qubits;
    out.circuit.modes = in.modes;
    PhaseFrame frame;
    for (const auto& g : in.ops)
        if (auto kept = frame.absorb(g)) out.circuit.ops.push_back(std::move(*kept));
    out.residual = frame.residual();
    return out;
}

// ---------------------------------------------------------------------------
// text format, one op per line:
//   SNP q0 m1 theta=0.5 phi=1.2 | MS q0 q1 theta=1.5708 | RX q0 theta=..
//   MODEPHASE m0 theta=.. | DISPLACE m2 re=.. im=.. | CNOT q0 q1

inline std::string format_gate(const GateOp& g) {
    std::ostringstream os;
    os << std::setprecision(17) << gate_name(g.kind);
    for (int k = 0; k < g.qubit_arity(); ++k) os << " q" << g.qubits[k];
    if (g.has_mode()) os << " m" << g.mode;
    switch (g.kind) {
        case GateKind::CNOT: break;
        case GateKind::Displace: os << " re=" << g.alpha.real() << " im=" << g.alpha.imag(); break;
        case GateKind::SNP:
        case GateKind::ZKick: os << " theta=" << g.theta << " phi=" << g.phi; break;
        default: os << " theta=" << g.theta;
    }
    return os.str();
}

inline void write_circuit(std::ostream& os, const Circuit& c) {
    os << "# qubits=" << c.n_qubits << " modes=";
    for (std::size_t k = 0; k < c.modes.size(); ++k) os << (k ? "," : "") << c.modes[k];
    os << '\n';
    for (const auto& g : c.ops) os << format_gate(g) << '\n';
}

inline GateOp parse_gate(const std::string& line) {
    std::istringstream is(line);
    std::string name;
    is >> name;
    static const std::map<std::string, GateKind> kinds{
        {"RX", GateKind::RX}, {"RY", GateKind::RY}, {"RZ", GateKind::RZ}, {"MS", GateKind::MS},
        {"CNOT", GateKind::CNOT}, {"SNP", GateKind::SNP}, {"MODEPHASE", GateKind::ModePhase},
        {"DISPLACE", GateKind::Displace}, {"ZKICK", GateKind::ZKick}};
    const auto it = kinds.find(name);
    if (it == kinds.end()) throw ValidationError("circuit: unknown gate '" + name + "'");
    GateOp g;
    g.kind = it->second;
    int nq = 0;
    std::string tok;
    auto number = [&](const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ValidationError("circuit: bad number in '" + line + "'");
        }
    };
    while (is >> tok) {
        if (tok.size() > 1 && tok[0] == 'q' && std::isdigit(static_cast<unsigned char>(tok[1]))) {
            if (nq >= 2) throw ValidationError("circuit: too many qubits in '" + line + "'");
            g.qubits[nq++] = static_cast<int>(number(tok.substr(1)));
        } else if (tok.size() > 1 && tok[0] == 'm' && std::isdigit(static_cast<unsigned char>(tok[1]))) {
            g.mode = static_cast<int>(number(tok.substr(1)));
        } else if (const auto eq = tok.find('='); eq != std::string::npos) {
            const std::string key = tok.substr(0, eq);
            const double v = number(tok.substr(eq + 1));
            if (key == "theta") g.theta = v;
            else if (key == "phi") g.phi = v;
            else if (key == "re") g.alpha.real(v);
            else if (key == "im") g.alpha.imag(v);
            else throw ValidationError("circuit: unknown field '" + key + "'");
        } else {
            throw ValidationError("circuit: unexpected token '" + tok + "'");
        }
    }
    if (nq != g.qubit_arity()) throw ValidationError("circuit: wrong qubit count in '" + line + "'");
    g.validate();
    return g;
}

inline Circuit read_circuit(std::istream& in) {
    Circuit c;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (auto q = line.find("qubits="); q != std::string::npos) {
                c.n_qubits = std::stoi(line.substr(q + 7));
                header = true;
            }
            if (auto m = line.find("modes="); m != std::string::npos) {
                std::stringstream ss(line.substr(m + 6));
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty() && item.find_first_not_of(" \t\r") != std::string::npos) c.modes.push_back(std::stoi(item));
            }
            continue;
        }
        c.ops.push_back(parse_gate(line));
    }
    if (!header) {
        for (const auto& g : c.ops) {
            for (int k = 0; k < g.qubit_arity(); ++k) c.n_qubits = std::max(c.n_qubits, g.qubits[k] + 1);
            if (g.has_mode() && std::find(c.modes.begin(), c.modes.end(), g.mode) == c.modes.end()) c.modes.push_back(g.mode);
        }
    }
    c.validate();
    return c;
}

}  // namespace hybridsim
