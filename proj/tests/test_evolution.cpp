#include <catch_amalgamated.hpp>

#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "hybridsim/evolution.hpp"

using namespace hybridsim;
using Catch::Approx;

namespace {

ModelParams n2_params(int cut, double g = 4.0) {
    ModelParams p;
    p.n_sites = 2;
    p.boson_mass = 1.5;
    p.coupling = g;
    p.cutoffs = {cut, cut};
    p.trotter_dt = 0.5;
    p.trotter_steps = 12;
    return p;
}

ModelParams n4_params(double g, int cut) {
    ModelParams p;
    p.n_sites = 4;
    p.charge_sector = -1;
    p.coupling = g;
    p.cutoffs.assign(4, cut);
    p.trotter_dt = 1.0;
    p.trotter_steps = 5;
    return p;
}

OperatorSum reduced(const ModelParams& p) { return project_to_sector(build_full_hamiltonian(p), SectorMap::standard(p)); }

double max_dev(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("t = 0 returns the initial state", "[evolution]") {
    const auto p = n2_params(4);
    const Layout l(1, p.cutoffs);
    const auto s = vacuum_state(l);
    const auto out = evolve_exact(reduced(p), s, 0.0);
    CHECK((out.amplitudes() - s.amplitudes()).norm() == 0.0);
}

TEST_CASE("harmonic oscillator rotates a coherent state", "[evolution]") {
    const int cut = 20;
    const double omega = 1.3, t = 0.9;
    OperatorSum h(0, 1);
    h.add(number(0, omega));
    const Layout l(0, {cut});
    const cplx alpha{0.7, 0.2};
    auto s = vacuum_state(l);
    apply_gate(displace(0, alpha), s);
    const auto out = evolve_exact(h, s, t);
    auto expected = vacuum_state(l);
    apply_gate(displace(0, alpha * std::polar(1.0, -omega * t)), expected);
    CHECK(fidelity(out, expected) == Approx(1.0).margin(1e-12));
    CHECK(max_dev(mode_marginal(out, 0), mode_marginal(s, 0)) < 1e-14);
}

TEST_CASE("Lanczos path matches the eigendecomposition path", "[evolution]") {
    const auto p = n2_params(10);
    const Layout l(1, p.cutoffs);
    const auto h = realize_matrix(reduced(p), l);
    EvolveOptions kry;
    kry.force_krylov = true;
    EvolveOptions small_basis = kry;
    small_basis.krylov_max_dim = 8;  // forces substep subdivision
    for (double t : {0.3, 2.0, 6.0}) {
        const auto a = evolve_exact(h, vacuum_state(l), t);
        const auto b = evolve_exact(h, vacuum_state(l), t, kry);
        const auto c = evolve_exact(h, vacuum_state(l), t, small_basis);
        CHECK((a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((a.amplitudes() - c.amplitudes()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(b.norm() == Approx(1.0).margin(1e-9));
    }
    CHECK(ExactPropagator(h).dense());
    CHECK_FALSE(ExactPropagator(h, kry).dense());
}

TEST_CASE("time composition", "[evolution][property]") {
    const auto p = n4_params(2.0, 3);
    const Layout l(2, p.cutoffs);
    const auto h = realize_matrix(reduced(p), l);
    for (bool krylov : {false, true}) {
        EvolveOptions o;
        o.force_krylov = krylov;
        const auto whole = evolve_exact(h, vacuum_state(l), 1.7, o);
        const auto split = evolve_exact(h, evolve_exact(h, vacuum_state(l), 0.6, o), 1.1, o);
        CHECK((whole.amplitudes() - split.amplitudes()).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("non-Hermitian input is rejected", "[evolution]") {
    OperatorSum h(1, 0);
    h.add(pauli(Pauli::X, 0, cplx(0, 1)));
    CHECK_THROWS_AS(evolve_exact(h, vacuum_state(1, {}), 1.0), ValidationError);
}

TEST_CASE("N=4 g=0 spin marginal matches a 4x4 oracle", "[evolution]") {
    const auto p = n4_params(0.0, 2);
    const Layout l(2, p.cutoffs);
    const auto h = realize_matrix(reduced(p), l);
    // (1/2b)(X1 + X0 X1) + m Z1 on two qubits
    DenseMatrix x(2, 2), z(2, 2), id = DenseMatrix::Identity(2, 2);
    x << 0, 1, 1, 0;
    z << 1, 0, 0, -1;
    auto kron = [](const DenseMatrix& a, const DenseMatrix& b) {
        DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return out;
    };
    const DenseMatrix h4 = 0.5 * (kron(id, x) + kron(x, x)) + p.fermion_mass * kron(id, z);
    ExactPropagator prop(h);
    for (double t : {0.5, 1.0, 2.5, 5.0}) {
        const auto s = prop.evolve(vacuum_state(l), t);
        Vector v = Vector::Zero(4);
        v(0) = 1.0;
        const Vector o = DenseMatrix(cplx(0, -t) * h4).exp() * v;
        const auto ps = spin_marginal(s);
        for (int k = 0; k < 4; ++k) CHECK(std::abs(ps[k] - std::norm(o(k))) < 1e-10);
        for (int m = 0; m < 4; ++m) CHECK(mode_marginal(s, m)[0] == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("energy expectation", "[evolution]") {
    const auto p = n2_params(8);
    const auto h = reduced(p);
    const Layout l(1, p.cutoffs);
    CHECK(energy_expectation(h, vacuum_state(l)) == Approx(1.0).margin(1e-14));

    const auto hm = realize_matrix(h, l);
    ExactPropagator prop(hm);
    for (double t : {0.5, 2.0, 6.0}) CHECK(std::abs(energy_expectation(hm, prop.evolve(vacuum_state(l), t)) - 1.0) < 1e-8);

    // Trotter energy drift shrinks with the step
    double prev = 0;
    for (double dt : {0.5, 0.25, 0.125}) {
        auto q = p;
        q.trotter_dt = dt;
        q.trotter_steps = static_cast<int>(std::lround(3.0 / dt));
        const auto plan = plan_n2(q, KickMechanism::DirectDisplacement);
        const auto run = run_trotter(plan, vacuum_state(plan_layout(plan, q.cutoffs)));
        double drift = 0;
        for (const auto& s : run.snapshots) drift = std::max(drift, std::abs(energy_expectation(hm, s) - 1.0));
        if (prev > 0) CHECK(drift < prev);
        prev = drift;
    }
}

TEST_CASE("run_trotter bookkeeping", "[evolution]") {
    const auto p = n2_params(6);
    const auto plan = plan_n2(p);
    const Layout l = plan_layout(plan, p.cutoffs);
    const auto zero = run_trotter(plan, vacuum_state(l), {0});
    REQUIRE(zero.snapshots.size() == 1);
    CHECK(zero.snapshots[0].amplitudes() == vacuum_state(l).amplitudes());

    const auto all = run_trotter(plan, vacuum_state(l));
    CHECK(all.snapshots.size() == 13);
    CHECK(all.times.back() == 6.0);
    for (const auto& s : all.snapshots) CHECK(s.norm() == Approx(1.0).margin(1e-9));
    // Lambda = 6 is too small for mode 1 of this run
    CHECK_FALSE(all.warnings.empty());

    CHECK_THROWS_AS(run_trotter(plan, vacuum_state(1, {6, 6})), ValidationError);
    CHECK_THROWS_AS(run_trotter(plan, vacuum_state(l), {13}), ValidationError);
}

TEST_CASE("g = 0 keeps the N=2 spin marginal fixed", "[evolution]") {
    const auto p = n2_params(3, 0.0);
    const auto plan = plan_n2(p);
    const auto run = run_trotter(plan, vacuum_state(plan_layout(plan, p.cutoffs)));
    for (const auto& s : run.snapshots) {
        CHECK(qubit_marginal(s, 1)[0] == Approx(1.0).margin(1e-14));
        CHECK(mode_marginal(s, 0)[0] == Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("phase-frame compiled runs reproduce the true states", "[evolution]") {
    const auto p = n2_params(10);
    auto plan = plan_n2(p);
    const Layout l = plan_layout(plan, p.cutoffs);
    const auto plain = run_trotter(plan, vacuum_state(l));
    plan.compile_phases = true;
    const auto framed = run_trotter(plan, vacuum_state(l));
    CHECK(framed.circuit.count(GateKind::ModePhase) == 0);
    for (std::size_t k = 0; k < plain.snapshots.size(); ++k)
        CHECK((plain.snapshots[k].amplitudes() - framed.snapshots[k].amplitudes()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Trotter approaches exact evolution at small steps", "[evolution]") {
    auto p = n2_params(8);
    p.trotter_dt = 0.01;
    p.trotter_steps = 300;
    const auto plan = plan_n2(p, KickMechanism::DirectDisplacement);
    const Layout l = plan_layout(plan, p.cutoffs);
    std::vector<int> rec;
    for (int k = 0; k <= 300; k += 25) rec.push_back(k);
    const auto run = run_trotter(plan, vacuum_state(l), rec);
    ExactPropagator prop(realize_matrix(reduced(p), l));
    double d = 0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const auto ex = prop.evolve(vacuum_state(l), run.times[k]);
        d = std::max(d, max_dev(spin_marginal(ex), spin_marginal(run.snapshots[k])));
        for (int m : {0, 1}) d = std::max(d, max_dev(mode_marginal(ex, m), mode_marginal(run.snapshots[k], m)));
    }
    CHECK(d < 5e-3);
}

TEST_CASE("cutoff sweeps", "[evolution]") {
    const auto zero = cutoff_sweep(reduced(n4_params(0.0, 2)), {2, 3}, 5.0);
    CHECK(zero.final_deviation() == 0.0);
    for (double m : zero.rows.back().mean_occupation) CHECK(m == 0.0);

    const auto p = n2_params(10);
    const auto table = cutoff_sweep(reduced(p), {10, 11, 12, 13, 14, 15}, 6.0);
    REQUIRE(table.rows.size() == 6);
    for (std::size_t k = 2; k < table.rows.size(); ++k)
        CHECK(table.rows[k].max_rel_deviation < table.rows[k - 1].max_rel_deviation);

    CHECK_THROWS_AS(cutoff_sweep(reduced(p), {4, 3}, 1.0), ValidationError);
}

TEST_CASE("series CSV", "[evolution][io]") {
    std::ostringstream os;
    write_series_csv(os, {"P0", "P1"}, {0.0, 0.5}, {{1.0, 0.0}, {0.123456789012345, 0.876543210987655}});
    CHECK(os.str() == "t,P0,P1\n0,1,0\n0.5,0.123456789012,0.876543210988\n");
    CHECK_THROWS_AS(write_series_csv(os, {"a"}, {0.0}, {{1.0, 2.0}}), ValidationError);
}
