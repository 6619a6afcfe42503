#include <catch_amalgamated.hpp>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "hybridsim/evolution.hpp"
#include "hybridsim/trotter.hpp"

using namespace hybridsim;
using Catch::Approx;

namespace {

ModelParams n2_params(int cut = 4) {
    ModelParams p;
    p.n_sites = 2;
    p.fermion_mass = 1.0;
    p.boson_mass = 1.5;
    p.coupling = 4.0;
    p.charge_sector = 0;
    p.cutoffs = {cut, cut};
    p.trotter_dt = 0.5;
    p.trotter_steps = 12;
    return p;
}

ModelParams n4_params(double g, int cut = 3) {
    ModelParams p;
    p.n_sites = 4;
    p.boson_mass = 1.0;
    p.coupling = g;
    p.charge_sector = -1;
    p.cutoffs.assign(4, cut);
    p.trotter_dt = 1.0;
    p.trotter_steps = 5;
    return p;
}

std::vector<GateKind> kinds(const Circuit& c) {
    std::vector<GateKind> k;
    for (const auto& g : c.ops) k.push_back(g.kind);
    return k;
}

// every group's gates equal exp(-i H_group dt) up to a global phase; with an
// ancilla the identity kick is only required on the ancilla-|0> columns
void check_groups(const TrotterPlan& plan, int cut) {
    const Layout l = plan_layout(plan, std::vector<int>(8, cut));
    const int anc = plan.needs_ancilla() ? plan.n_qubits : -1;
    std::vector<Eigen::Index> cols;
    for (std::size_t col = 0; col < l.dim(); ++col)
        if (anc < 0 || ((col / l.qubit_stride(anc)) & 1U) == 0) cols.push_back(static_cast<Eigen::Index>(col));
    for (const auto& g : plan.groups) {
        if (g.terms.empty()) continue;
        INFO("group " << g.label);
        Circuit c = group_circuit(g, plan.dt, plan.mechanism, anc);
        c.n_qubits = l.n_qubits();
        const DenseMatrix h(realize_matrix(g.terms, l));
        const DenseMatrix oracle = DenseMatrix(cplx(0, -plan.dt) * h).exp();
        const DenseMatrix u = circuit_matrix(c, l);
        DenseMatrix us(u.rows(), static_cast<Eigen::Index>(cols.size())), os(u.rows(), us.cols());
        for (std::size_t k = 0; k < cols.size(); ++k) {
            us.col(static_cast<Eigen::Index>(k)) = u.col(cols[k]);
            os.col(static_cast<Eigen::Index>(k)) = oracle.col(cols[k]);
        }
        CHECK(distance_up_to_phase(us, os) < 1e-10);
    }
}

}  // namespace

TEST_CASE("N=2 plan follows the stated ordering", "[trotter]") {
    const auto plan = plan_n2(n2_params());
    REQUIRE(plan.groups.size() == 5);
    CHECK(plan.groups[0].label == "Z0");
    CHECK(plan.groups[2].label == "(a1+a1^)");
    CHECK(plan.total_time() == 6.0);
    CHECK(plan.steps == 12);
    CHECK(plan.needs_ancilla());
    CHECK(plan.total_qubits() == 2);

    const auto one = plan_circuit(plan, 1);
    CHECK(kinds(one) == std::vector<GateKind>{GateKind::RZ, GateKind::ZKick, GateKind::RX, GateKind::SNP, GateKind::RX,
                                              GateKind::ModePhase, GateKind::ModePhase});
    CHECK(one.ops[0].theta == Approx(2 * 1.0 * 0.5));
    CHECK(one.ops[3].qubits[0] == 1);  // ancilla

    auto direct = plan_n2(n2_params(), KickMechanism::DirectDisplacement);
    CHECK(direct.total_qubits() == 1);
    CHECK(kinds(plan_circuit(direct, 1)) ==
          std::vector<GateKind>{GateKind::RZ, GateKind::ZKick, GateKind::Displace, GateKind::ModePhase, GateKind::ModePhase});

    auto bad = n2_params();
    bad.n_sites = 4;
    bad.cutoffs.assign(4, 2);
    bad.charge_sector = -1;
    CHECK_THROWS_AS(plan_n2(bad), ValidationError);
}

TEST_CASE("plans partition the reduced Hamiltonian", "[trotter][property]") {
    const auto p2 = n2_params();
    const auto red2 = project_to_sector(build_full_hamiltonian(p2), SectorMap::standard(p2));
    CHECK(max_coefficient_deviation(plan_n2(p2).hamiltonian(), red2) < 1e-15);

    for (double g : {0.0, 2.0}) {
        const auto p4 = n4_params(g);
        const auto red4 = project_to_sector(build_full_hamiltonian(p4), SectorMap::standard(p4));
        const auto plans = plan_n4(p4);
        OperatorSum both = plans.main.hamiltonian();
        const OperatorSum m2 = plans.mode2.hamiltonian();
        for (const auto& t : m2.terms()) both.add(t);
        CHECK(max_coefficient_deviation(both, red4) < 1e-15);
    }

    OperatorSum extra(1, 2);
    extra.add(pauli(Pauli::X, 0));
    CHECK_THROWS_AS(slice_terms(extra, {}), ValidationError);
}

TEST_CASE("group gates equal the term exponentials", "[trotter]") {
    check_groups(plan_n2(n2_params(3)), 3);
    check_groups(plan_n2(n2_params(3), KickMechanism::DirectDisplacement), 3);
    const auto pl = plan_n4(n4_params(2.0, 3));
    check_groups(pl.main, 3);
    check_groups(pl.mode2, 3);
}

TEST_CASE("kick phases fold the complex coefficients", "[trotter]") {
    const auto p = n4_params(2.0);
    const auto pl = plan_n4(p);
    const auto one = plan_circuit(pl.main, 1);
    const double c = std::sqrt(p.coupling * p.coupling * p.lattice_spacing / 32.0);
    std::vector<GateOp> kicks;
    for (const auto& g : one.ops)
        if (g.kind == GateKind::ZKick) kicks.push_back(g);
    REQUIRE(kicks.size() == 5);
    const double pi4 = std::numbers::pi / 4;
    // (1-i) -> phi = +pi/4, (1+i) -> phi = -pi/4
    CHECK(kicks[0].mode == 1);
    CHECK(kicks[0].phi == Approx(pi4));
    CHECK(kicks[1].phi == Approx(-pi4));
    CHECK(kicks[2].mode == 3);
    CHECK(kicks[2].phi == Approx(-pi4));
    CHECK(kicks[3].phi == Approx(pi4));
    CHECK(kicks[4].mode == 0);
    CHECK(kicks[4].phi == Approx(0.0).margin(1e-15));
    CHECK(kicks[0].theta == Approx(2 * std::sqrt(2.0) * c / std::sqrt(mode_energy(p, 1)) * p.trotter_dt));
    CHECK(kicks[4].theta == Approx(2 * 2 * c / std::sqrt(mode_energy(p, 0)) * p.trotter_dt));
}

TEST_CASE("N=4 plan structure", "[trotter]") {
    const auto pl = plan_n4(n4_params(2.0));
    CHECK(pl.main.total_time() == 5.0);
    CHECK(pl.main.modes == std::vector<int>{0, 1, 3});
    CHECK(pl.mode2.modes == std::vector<int>{2});
    CHECK(pl.mode2.total_qubits() == 0);
    CHECK(kinds(plan_circuit(pl.mode2, 1)) == std::vector<GateKind>{GateKind::Displace, GateKind::ModePhase});

    const auto g0 = plan_n4(n4_params(0.0));
    const auto c0 = plan_circuit(g0.main, 1);
    std::vector<GateKind> spin_only;
    for (const auto& g : c0.ops)
        if (g.kind != GateKind::ModePhase) spin_only.push_back(g.kind);
    CHECK(spin_only == std::vector<GateKind>{GateKind::RX, GateKind::CNOT, GateKind::RX, GateKind::CNOT, GateKind::RZ});
    CHECK(plan_circuit(g0.mode2, 1).count(GateKind::Displace) == 0);

    auto bad = n4_params(2.0);
    bad.charge_sector = 0;
    CHECK_THROWS_AS(plan_n4(bad), ValidationError);
}

TEST_CASE("compression leaves two CNOTs per step", "[trotter]") {
    auto pl = plan_n4(n4_params(2.0));
    const auto one = plan_circuit(pl.main, 1);
    CHECK(one.count(GateKind::CNOT) == 6);
    const auto c1 = compress(one, false, Measurement::spin());
    CHECK(c1.count(GateKind::CNOT) == 2);

    const auto five = plan_circuit(pl.main, 5);
    CompressOptions keep_tail;
    keep_tail.drop_trailing = false;
    const auto c5 = compress(five, keep_tail);
    CHECK(cnots_per_step(c5, 5) == std::vector<int>{1, 2, 2, 2, 2});
    // lowering turns each CNOT into one MS
    CHECK(lower_to_native(c1).count(GateKind::MS) == 2);

    // trailing spin-diagonal gates are gone before a spin measurement
    const auto cs = compress(five, true, Measurement::spin());
    CHECK(cs.ops.back().kind == GateKind::CNOT);
    // before a mode-1 measurement the trailing kicks on other modes and mode phases go
    const auto cm = compress(five, true, Measurement::of_mode(1));
    CHECK((cm.ops.back().mode == 1 && cm.ops.back().kind != GateKind::ModePhase));
}

TEST_CASE("compression edge cases", "[trotter]") {
    Circuit c;
    c.n_qubits = 2;
    c.add(cnot(0, 1)).add(cnot(0, 1));
    CHECK(compress(c, false, Measurement::spin()).ops.empty());

    Circuit t;
    t.n_qubits = 1;
    t.add(rx(0, 0.4)).add(rz(0, 0.3));
    const auto ct = compress(t, true, Measurement::spin());
    REQUIRE(ct.ops.size() == 1);
    CHECK(ct.ops[0].kind == GateKind::RX);
    auto a = vacuum_state(1, {}), b = vacuum_state(1, {});
    apply_circuit(t, a);
    apply_circuit(ct, b);
    CHECK(spin_marginal(a)[0] == Approx(spin_marginal(b)[0]).margin(1e-15));

    // a CNOT blocked by a non-commuting gate survives
    Circuit blocked;
    blocked.n_qubits = 2;
    blocked.add(rx(0, 0.2)).add(cnot(0, 1)).add(rz(1, 0.3)).add(cnot(0, 1)).add(ry(1, 0.1));
    CHECK(compress(blocked, true, Measurement::spin()).count(GateKind::CNOT) == 2);
}

TEST_CASE("compression preserves the measured marginal", "[trotter][property]") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.2, 2.5);
    for (int trial = 0; trial < 4; ++trial) {
        ModelParams p = n4_params(u(rng), 4);
        p.fermion_mass = u(rng);
        p.boson_mass = u(rng);
        p.trotter_dt = 0.3 * u(rng);
        p.trotter_steps = 3;
        const auto pl = plan_n4(p);
        const Layout l = plan_layout(pl.main, p.cutoffs);
        const auto full = plan_circuit(pl.main);
        for (const auto& meas : {Measurement::spin(), Measurement::of_mode(0), Measurement::of_mode(1), Measurement::of_mode(3)}) {
            for (bool compile : {false, true}) {
                Circuit base = compile ? compile_mode_phases(full).circuit : full;
                const auto comp = compress(base, true, meas);
                CHECK(comp.ops.size() < base.ops.size());
                auto a = vacuum_state(l), b = vacuum_state(l);
                apply_circuit(full, a);
                apply_circuit(comp, b);
                const auto ma = meas.kind == Measurement::Kind::Spin ? spin_marginal(a) : mode_marginal(a, meas.mode);
                const auto mb = meas.kind == Measurement::Kind::Spin ? spin_marginal(b) : mode_marginal(b, meas.mode);
                for (std::size_t k = 0; k < ma.size(); ++k) CHECK(std::abs(ma[k] - mb[k]) < 1e-10);
            }
        }
    }
}

TEST_CASE("compressed and uncompressed N=4 runs agree on the spin marginal", "[trotter]") {
    const auto p = n4_params(2.0, 6);
    auto pl = plan_n4(p);
    const Layout l = plan_layout(pl.main, p.cutoffs);
    const auto plain = run_trotter(pl.main, vacuum_state(l));
    pl.main.compression = CompressOptions{};
    const auto packed = run_trotter(pl.main, vacuum_state(l));
    REQUIRE(plain.snapshots.size() == 6);
    REQUIRE(packed.snapshots.size() == 6);
    for (std::size_t k = 0; k < plain.snapshots.size(); ++k) {
        const auto a = spin_marginal(plain.snapshots[k]), b = spin_marginal(packed.snapshots[k]);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-10);
    }
}

TEST_CASE("zero time step composes to identity", "[trotter]") {
    auto plan = plan_n2(n2_params(3));
    plan.dt = 0.0;
    const Layout l = plan_layout(plan, {3, 3});
    const auto u = circuit_matrix(plan_circuit(plan, 1), l);
    CHECK(distance_up_to_phase(u, DenseMatrix::Identity(l.dim(), l.dim())) < 1e-14);
}

TEST_CASE("generic plans cover any reduced Hamiltonian", "[trotter]") {
    const auto p = n4_params(2.0);
    const auto red = project_to_sector(build_full_hamiltonian(p), SectorMap::standard(p));
    const auto plan = plan_generic(red, 0.1, 2);
    CHECK(max_coefficient_deviation(plan.hamiltonian(), red) < 1e-15);
    CHECK(plan.modes == std::vector<int>{0, 1, 2, 3});
    CHECK_NOTHROW(plan_circuit(plan));
}
