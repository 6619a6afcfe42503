#pragma once

// First-order Trotter plans for the reduced Hamiltonians, their compilation
// to logical gates, and the circuit-compression passes.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hybridsim/gates.hpp"
#include "hybridsim/model.hpp"
#include "hybridsim/sector.hpp"
#include "hybridsim/yukawa.hpp"

namespace hybridsim {

/// One factor exp(-i H_group dt) of a Trotter step.
struct PlanGroup {
    std::string label;
    OperatorSum terms;
};

/// Selects the terms of a reduced Hamiltonian that belong to one plan group:
/// the spin part must equal `paulis`; `kind` picks pure-spin terms, number
/// terms of `mode`, or linear (a or a^dag) terms of `mode`.
struct TermSlot {
    enum class Kind { Spin, Number, Kick };
    std::string label;
    Kind kind = Kind::Spin;
    std::map<int, Pauli> paulis;
    int mode = -1;

    [[nodiscard]] bool matches(const OperatorTerm& t) const {
        if (t.paulis != paulis) return false;
        switch (kind) {
            case Kind::Spin: return t.ladders.empty();
            case Kind::Number:
                return t.ladders.size() == 1 && t.ladders[0].mode == mode && t.ladders[0].kind == LadderKind::Number;
            case Kind::Kick:
                return t.ladders.size() == 1 && t.ladders[0].mode == mode && t.ladders[0].kind != LadderKind::Number;
        }
        return false;
    }
};

struct Measurement {
    enum class Kind { Spin, Mode };
    Kind kind = Kind::Spin;
    int mode = -1;
    int n_system_qubits = -1;  // spin measurement of the leading qubits; -1 = all

    static Measurement spin(int n_system = -1) { return {Kind::Spin, -1, n_system}; }
    static Measurement of_mode(int m) { return {Kind::Mode, m, -1}; }
};

struct CompressOptions {
    bool cancel_cnots = true;
    bool initial_vacuum = true;  // the circuit starts from |0...0>
    bool drop_trailing = true;
    Measurement measurement = Measurement::spin();
};

struct TrotterPlan {
    std::string name;
    int n_qubits = 0;  // system qubits (an ancilla, if used, is appended after them)
    std::vector<int> modes;
    std::vector<PlanGroup> groups;
    double dt = 0.0;
    int steps = 0;
    KickMechanism mechanism = KickMechanism::DirectDisplacement;
    bool compile_phases = false;
    std::optional<CompressOptions> compression;

    [[nodiscard]] bool needs_ancilla() const {
        if (mechanism != KickMechanism::Ancilla) return false;
        for (const auto& g : groups)
            for (const auto& t : g.terms.terms())
                if (t.paulis.empty() && !t.ladders.empty() && t.ladders[0].kind != LadderKind::Number) return true;
        return false;
    }
    [[nodiscard]] int total_qubits() const { return n_qubits + (needs_ancilla() ? 1 : 0); }
    [[nodiscard]] double total_time() const { return dt * steps; }

    /// Sum of all group terms.
    [[nodiscard]] OperatorSum hamiltonian() const {
        int nm = 0;
        for (int m : modes) nm = std::max(nm, m + 1);
        OperatorSum h(n_qubits, nm);
        for (const auto& g : groups)
            for (const auto& t : g.terms.terms()) h.add(t);
        return h.canonical();
    }
};

/// Slices `reduced` into groups following `slots` (in order). Every term of
/// `reduced` must land in exactly one slot.
inline std::vector<PlanGroup> slice_terms(const OperatorSum& reduced, const std::vector<TermSlot>& slots) {
    std::vector<PlanGroup> out;
    std::vector<int> used(reduced.size(), 0);
    for (const auto& slot : slots) {
        PlanGroup g{slot.label, OperatorSum(reduced.n_qubits(), reduced.n_modes())};
        for (std::size_t k = 0; k < reduced.size(); ++k)
            if (slot.matches(reduced.terms()[k])) {
                g.terms.add(reduced.terms()[k]);
                ++used[k];
            }
        out.push_back(std::move(g));
    }
    for (std::size_t k = 0; k < reduced.size(); ++k)
        if (used[k] != 1)
            throw ValidationError("trotter plan: term " + format_term(reduced.terms()[k]) +
                                  (used[k] ? " matched several slots" : " is not covered by the ordering"));
    return out;
}

namespace detail {

inline std::map<int, Pauli> paulis_of(std::initializer_list<std::pair<int, Pauli>> l) { return {l.begin(), l.end()}; }

inline TermSlot spin_slot(std::string label, std::map<int, Pauli> p) {
    return {std::move(label), TermSlot::Kind::Spin, std::move(p), -1};
}
inline TermSlot kick_slot(std::string label, std::map<int, Pauli> p, int mode) {
    return {std::move(label), TermSlot::Kind::Kick, std::move(p), mode};
}
inline TermSlot number_slot(int mode) { return {"n" + std::to_string(mode), TermSlot::Kind::Number, {}, mode}; }

inline OperatorSum reduced_hamiltonian(const ModelParams& p) {
    return project_to_sector(build_full_hamiltonian(p), SectorMap::standard(p));
}

}  // namespace detail

/// N=2, Q=0 ordering {Z, Z(a0 + a0^dag), (a1 + a1^dag), n0, n1}.
inline TrotterPlan plan_n2(const ModelParams& p, KickMechanism mech = KickMechanism::Ancilla) {
    p.validate();
    if (p.n_sites != 2 || p.charge_sector != 0) throw ValidationError("plan_n2: requires N=2, Q=0");
    using detail::paulis_of;
    const std::vector<TermSlot> slots{
        detail::spin_slot("Z0", paulis_of({{0, Pauli::Z}})),
        detail::kick_slot("Z0(a0+a0^)", paulis_of({{0, Pauli::Z}}), 0),
        detail::kick_slot("(a1+a1^)", {}, 1),
        detail::number_slot(0),
        detail::number_slot(1),
    };
    TrotterPlan plan;
    plan.name = "n2";
    plan.n_qubits = 1;
    plan.modes = {0, 1};
    plan.groups = slice_terms(detail::reduced_hamiltonian(p), slots);
    plan.dt = p.trotter_dt;
    plan.steps = p.trotter_steps;
    plan.mechanism = mech;
    return plan;
}

struct PlanPair {
    TrotterPlan main;
    TrotterPlan mode2;
};

/// N=4, Q=-1: the coupled circuit on qubits {0,1} and modes {0,1,3}, and the
/// independent circuit for the decoupled mode 2.
inline PlanPair plan_n4(const ModelParams& p, KickMechanism mode2_mech = KickMechanism::DirectDisplacement) {
    p.validate();
    if (p.n_sites != 4 || p.charge_sector != -1) throw ValidationError("plan_n4: requires N=4, Q=-1");
    using detail::paulis_of;
    const auto z0 = paulis_of({{0, Pauli::Z}}), z1 = paulis_of({{1, Pauli::Z}});
    const auto zz = paulis_of({{0, Pauli::Z}, {1, Pauli::Z}});
    const std::vector<TermSlot> main_slots{
        detail::spin_slot("X1", paulis_of({{1, Pauli::X}})),
        detail::spin_slot("X0X1", paulis_of({{0, Pauli::X}, {1, Pauli::X}})),
        detail::kick_slot("Z0 a1", z0, 1),
        detail::kick_slot("Z0Z1 a1", zz, 1),
        detail::kick_slot("Z0 a3", z0, 3),
        detail::kick_slot("Z0Z1 a3", zz, 3),
        detail::spin_slot("Z1", z1),
        detail::kick_slot("Z1 a0", z1, 0),
        detail::number_slot(0),
        detail::number_slot(1),
        detail::number_slot(3),
    };
    const std::vector<TermSlot> mode2_slots{detail::kick_slot("(a2+a2^)", {}, 2), detail::number_slot(2)};

    const OperatorSum reduced = detail::reduced_hamiltonian(p);
    // split the reduced Hamiltonian by whether a term touches mode 2
    OperatorSum rest(reduced.n_qubits(), reduced.n_modes()), m2(0, reduced.n_modes());
    for (const auto& t : reduced.terms()) {
        const bool on2 = std::any_of(t.ladders.begin(), t.ladders.end(), [](const Ladder& l) { return l.mode == 2; });
        (on2 ? m2 : rest).add(t);
    }

    PlanPair out;
    out.main.name = "n4_main";
    out.main.n_qubits = 2;
    out.main.modes = {0, 1, 3};
    out.main.groups = slice_terms(rest, main_slots);
    out.mode2.name = "n4_mode2";
    out.mode2.n_qubits = 0;
    out.mode2.modes = {2};
    out.mode2.groups = slice_terms(m2, mode2_slots);
    out.mode2.mechanism = mode2_mech;
    for (auto* plan : {&out.main, &out.mode2}) {
        plan->dt = p.trotter_dt;
        plan->steps = p.trotter_steps;
    }
    return out;
}

/// Generic plan: one group per distinct term "shape" in the order they occur.
/// Used for presets other than the two hand-ordered ones.
inline TrotterPlan plan_generic(const OperatorSum& reduced, double dt, int steps) {
    std::vector<TermSlot> slots;
    auto same = [](const TermSlot& s, const TermSlot& t) { return s.kind == t.kind && s.paulis == t.paulis && s.mode == t.mode; };
    for (const auto& t : reduced.terms()) {
        TermSlot s;
        s.paulis = t.paulis;
        if (t.ladders.empty()) s.kind = TermSlot::Kind::Spin;
        else if (t.ladders.size() == 1) {
            s.kind = t.ladders[0].kind == LadderKind::Number ? TermSlot::Kind::Number : TermSlot::Kind::Kick;
            s.mode = t.ladders[0].mode;
        } else {
            throw ValidationError("plan_generic: unsupported multi-mode term " + format_term(t));
        }
        if (std::none_of(slots.begin(), slots.end(), [&](const TermSlot& o) { return same(o, s); })) {
            OperatorTerm shown = t;
            shown.coeff = 1.0;
            if (s.kind == TermSlot::Kind::Kick) shown.ladders[0].kind = LadderKind::Creation;
            s.label = format_term(shown);
            slots.push_back(std::move(s));
        }
    }
    TrotterPlan plan;
    plan.name = "generic";
    plan.n_qubits = reduced.n_qubits();
    std::set<int> modes;
    for (const auto& t : reduced.terms())
        for (const auto& l : t.ladders) modes.insert(l.mode);
    plan.modes.assign(modes.begin(), modes.end());
    plan.groups = slice_terms(reduced, slots);
    plan.dt = dt;
    plan.steps = steps;
    return plan;
}

// ---------------------------------------------------------------------------
// group -> gates

/// Logical gates for exp(-i H_group dt). Recognized forms: a single Pauli
/// string on at most two qubits, number terms, and Z-string * (alpha a^dag + h.c.).
inline Circuit group_circuit(const PlanGroup& g, double dt, KickMechanism mech, int ancilla) {
    Circuit c;
    const auto& terms = g.terms.terms();
    if (terms.empty()) return c;
    auto real_coeff = [&](const OperatorTerm& t) {
        if (std::abs(t.coeff.imag()) > 1e-12) throw ValidationError("group " + g.label + ": non-Hermitian spin coefficient");
        return t.coeff.real();
    };

    const auto& first = terms.front();
    if (first.ladders.empty()) {
        if (terms.size() != 1) throw ValidationError("group " + g.label + ": expected a single Pauli string");
        const double theta = 2.0 * real_coeff(first) * dt;
        std::vector<std::pair<int, Pauli>> ps(first.paulis.begin(), first.paulis.end());
        if (ps.size() == 1) {
            const int q = ps[0].first;
            switch (ps[0].second) {
                case Pauli::X: c.add(rx(q, theta)); break;
                case Pauli::Y: c.add(ry(q, theta)); break;
                case Pauli::Z: c.add(rz(q, theta)); break;
                default: break;
            }
            return c;
        }
        if (ps.size() == 2 && ps[0].second == ps[1].second && ps[0].second != Pauli::Y) {
            const int i = ps[0].first, j = ps[1].first;
            c.add(cnot(i, j));
            c.add(ps[0].second == Pauli::X ? rx(i, theta) : rz(j, theta));
            c.add(cnot(i, j));
            return c;
        }
        throw ValidationError("group " + g.label + ": no gate realization for " + format_term(first));
    }

    if (first.ladders[0].kind == LadderKind::Number) {
        for (const auto& t : terms) {
            if (!t.paulis.empty() || t.ladders.size() != 1 || t.ladders[0].kind != LadderKind::Number)
                throw ValidationError("group " + g.label + ": mixed number group");
            c.add(mode_phase(t.ladders[0].mode, real_coeff(t) * dt));
        }
        return c;
    }

    // S (alpha a^dag + alpha* a)
    const int m = first.ladders[0].mode;
    cplx alpha = 0.0, alpha_conj = 0.0;
    for (const auto& t : terms) {
        if (t.paulis != first.paulis || t.ladders.size() != 1 || t.ladders[0].mode != m)
            throw ValidationError("group " + g.label + ": inconsistent kick group");
        (t.ladders[0].kind == LadderKind::Creation ? alpha : alpha_conj) += t.coeff;
    }
    if (std::abs(alpha - std::conj(alpha_conj)) > 1e-12 * std::max(1.0, std::abs(alpha)))
        throw ValidationError("group " + g.label + ": kick group is not Hermitian");
    const double theta = 2.0 * std::abs(alpha) * dt;
    const double phi = std::abs(alpha) > 0 ? -std::arg(alpha) : 0.0;
    std::vector<int> zs;
    for (const auto& [q, pl] : first.paulis) {
        if (pl != Pauli::Z) throw ValidationError("group " + g.label + ": kick spin factor must be a Z string");
        zs.push_back(q);
    }
    if (zs.empty()) {
        const Circuit k = identity_kick(m, theta, phi, mech, mech == KickMechanism::Ancilla ? std::optional<int>(ancilla) : std::nullopt);
        c.append(k);
    } else if (zs.size() == 1) {
        c.add(zkick(zs[0], m, theta, phi));
    } else if (zs.size() == 2) {
        c.add(cnot(zs[0], zs[1])).add(zkick(zs[1], m, theta, phi)).add(cnot(zs[0], zs[1]));
    } else {
        throw ValidationError("group " + g.label + ": Z strings longer than two qubits are not supported");
    }
    return c;
}

/// Logical circuit (CNOT and ZKICK not yet lowered) for `steps` Trotter steps,
/// every gate tagged with its step index and group label.
inline Circuit plan_circuit(const TrotterPlan& plan, int steps) {
    Circuit c;
    c.n_qubits = plan.total_qubits();
    c.modes = plan.modes;
    const int anc = plan.needs_ancilla() ? plan.n_qubits : -1;
    std::vector<Circuit> per_group;
    for (const auto& g : plan.groups) per_group.push_back(group_circuit(g, plan.dt, plan.mechanism, anc));
    for (int s = 0; s < steps; ++s)
        for (std::size_t k = 0; k < plan.groups.size(); ++k)
            for (auto op : per_group[k].ops) {
                op.step = s;
                op.label = plan.groups[k].label;
                c.ops.push_back(std::move(op));
            }
    return c;
}

inline Circuit plan_circuit(const TrotterPlan& plan) { return plan_circuit(plan, plan.steps); }

// ---------------------------------------------------------------------------
// compression

namespace detail {

inline bool z_diagonal_on(const GateOp& g, int q) {
    if (!g.touches_qubit(q)) return true;
    switch (g.kind) {
        case GateKind::RZ:
        case GateKind::ZKick: return true;
        case GateKind::CNOT: return g.qubits[0] == q;  // diagonal on its control
        default: return false;
    }
}

/// True if g commutes with CNOT(c, t).
inline bool commutes_with_cnot(const GateOp& g, int c, int t) {
    const bool on_c = g.touches_qubit(c), on_t = g.touches_qubit(t);
    if (!on_c && !on_t) return true;
    if (g.kind == GateKind::CNOT) {
        if (g.qubits[0] == c && g.qubits[1] != t) return true;  // shared control
        if (g.qubits[1] == t && g.qubits[0] != c) return true;  // shared target
        return g.qubits[0] == c && g.qubits[1] == t;
    }
    if (on_c && !on_t) return g.kind == GateKind::RZ || g.kind == GateKind::ZKick;
    if (on_t && !on_c) return g.kind == GateKind::RX;
    return false;
}

inline bool cancel_cnot_pairs(std::vector<GateOp>& ops) {
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (ops[i].kind != GateKind::CNOT) continue;
        const int c = ops[i].qubits[0], t = ops[i].qubits[1];
        for (std::size_t j = i + 1; j < ops.size(); ++j) {
            const auto& g = ops[j];
            if (g.kind == GateKind::CNOT && g.qubits[0] == c && g.qubits[1] == t) {
                ops.erase(ops.begin() + static_cast<std::ptrdiff_t>(j));
                ops.erase(ops.begin() + static_cast<std::ptrdiff_t>(i));
                return true;
            }
            if (!commutes_with_cnot(g, c, t)) break;
        }
    }
    return false;
}

inline void drop_idle_cnots(std::vector<GateOp>& ops, int n_qubits) {
    std::vector<bool> zero(static_cast<std::size_t>(std::max(n_qubits, 0)), true);
    std::vector<GateOp> kept;
    for (auto& g : ops) {
        if (g.kind == GateKind::CNOT && zero[static_cast<std::size_t>(g.qubits[0])]) continue;  // control is |0>
        for (int k = 0; k < g.qubit_arity(); ++k)
            if (!z_diagonal_on(g, g.qubits[k])) zero[static_cast<std::size_t>(g.qubits[k])] = false;
        kept.push_back(std::move(g));
    }
    ops = std::move(kept);
}

inline bool irrelevant_at_end(const GateOp& g, const Measurement& meas, int n_qubits) {
    if (meas.kind == Measurement::Kind::Mode)
        return !g.has_mode() || g.mode != meas.mode || g.kind == GateKind::ModePhase;
    const int nsys = meas.n_system_qubits < 0 ? n_qubits : meas.n_system_qubits;
    for (int k = 0; k < g.qubit_arity(); ++k)
        if (g.qubits[k] < nsys && !(g.kind == GateKind::RZ || g.kind == GateKind::ZKick)) return false;
    return true;
}

}  // namespace detail


/// (i) cancels CNOT pairs that meet after commuting past intermediate gates,
/// (ii) drops CNOTs whose control is still |0> when starting from |0...0>,
/// (iii) drops trailing gates that cannot change the measured marginal.
inline Circuit compress(const Circuit& in, const CompressOptions& opt = {}) {
    Circuit out = in;
    auto& ops = out.ops;
    if (opt.cancel_cnots)
        while (detail::cancel_cnot_pairs(ops)) {
        }
    if (opt.initial_vacuum) detail::drop_idle_cnots(ops, out.n_qubits);
    if (opt.drop_trailing)
        while (!ops.empty() && detail::irrelevant_at_end(ops.back(), opt.measurement, out.n_qubits)) ops.pop_back();
    return out;
}

inline Circuit compress(const Circuit& in, bool initial_state_known, const Measurement& meas) {
    CompressOptions o;
    o.initial_vacuum = initial_state_known;
    o.measurement = meas;
    return compress(in, o);
}

/// Per-step CNOT count of a circuit (index = step tag).
inline std::vector<int> cnots_per_step(const Circuit& c, int steps) {
    std::vector<int> n(static_cast<std::size_t>(steps), 0);
    for (const auto& g : c.ops)
        if (g.kind == GateKind::CNOT && g.step >= 0 && g.step < steps) ++n[static_cast<std::size_t>(g.step)];
    return n;
}

}  // namespace hybridsim
