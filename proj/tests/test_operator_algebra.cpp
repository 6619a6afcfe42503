#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "hybridsim/jordan_wigner.hpp"
#include "hybridsim/realize.hpp"
#include "hybridsim/sector.hpp"
#include "hybridsim/yukawa.hpp"

using namespace hybridsim;
using Catch::Approx;

namespace {

ModelParams n2_params() {
    ModelParams p;
    p.n_sites = 2;
    p.lattice_spacing = 1.0;
    p.fermion_mass = 1.0;
    p.boson_mass = 1.5;
    p.coupling = 4.0;
    p.charge_sector = 0;
    p.cutoffs = {3, 3};
    return p;
}

ModelParams n4_params(double g = 2.0) {
    ModelParams p;
    p.n_sites = 4;
    p.lattice_spacing = 1.0;
    p.fermion_mass = 1.0;
    p.boson_mass = 1.0;
    p.coupling = g;
    p.charge_sector = -1;
    p.cutoffs = {2, 2, 2, 2};
    return p;
}

// Closed form of the reduced N=2, Q=0 Hamiltonian, written out by hand.
OperatorSum closed_form_n2(const ModelParams& p) {
    const double e0 = mode_energy(p, 0), e1 = mode_energy(p, 1);
    const double c = std::sqrt(p.coupling * p.coupling * p.lattice_spacing / 4.0);
    OperatorSum h(1, 2);
    h.add(pauli(Pauli::Z, 0, p.fermion_mass));
    h.add(number(0, e0));
    h.add(number(1, e1));
    h.add(pauli(Pauli::Z, 0) * create(0, c / std::sqrt(e0)));
    h.add(pauli(Pauli::Z, 0) * annihilate(0, c / std::sqrt(e0)));
    h.add(create(1, c / std::sqrt(e1)));
    h.add(annihilate(1, c / std::sqrt(e1)));
    return h.canonical();
}

// Closed form of the reduced N=4, Q=-1 Hamiltonian, written out by hand.
OperatorSum closed_form_n4(const ModelParams& p) {
    const double b = p.lattice_spacing;
    const double c = std::sqrt(p.coupling * p.coupling * b / 32.0);
    double e[4];
    for (int m = 0; m < 4; ++m) e[m] = mode_energy(p, m);
    const cplx one_m_i{1.0, -1.0}, one_p_i{1.0, 1.0};
    OperatorSum h(2, 4);
    h.add(pauli(Pauli::X, 1, 1.0 / (2.0 * b)));
    h.add(pauli(Pauli::X, 0) * pauli(Pauli::X, 1, 1.0 / (2.0 * b)));
    h.add(pauli(Pauli::Z, 1, p.fermion_mass));
    auto kick = [&](OperatorTerm spin, int m, cplx coeff) {
        h.add(spin * create(m, c * coeff / std::sqrt(e[m])));
        h.add(spin * annihilate(m, c * std::conj(coeff) / std::sqrt(e[m])));
    };
    const auto z0 = pauli(Pauli::Z, 0), z1 = pauli(Pauli::Z, 1), z0z1 = pauli(Pauli::Z, 0) * pauli(Pauli::Z, 1);
    kick(z1, 0, 2.0);
    kick(z0, 1, one_m_i);
    kick(z0z1, 1, one_p_i);
    kick(term(1.0), 2, 2.0);
    kick(z0, 3, one_p_i);
    kick(z0z1, 3, one_m_i);
    for (int m = 0; m < 4; ++m) h.add(number(m, e[m]));
    return h.canonical();
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

DenseMatrix creation_matrix(int cutoff) {
    DenseMatrix a = DenseMatrix::Zero(cutoff + 1, cutoff + 1);
    for (int n = 0; n < cutoff; ++n) a(n + 1, n) = std::sqrt(n + 1.0);
    return a;
}

double max_abs(const DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("fermion Hamiltonian structure", "[algebra]") {
    auto p = n2_params();
    const auto hf = build_fermion_hamiltonian(p);
    // boundary and bulk hopping cancel for chi = -1, leaving (m/2)(-Z0 + Z1)
    REQUIRE(hf.size() == 2);
    CHECK(hf.coefficient(pauli(Pauli::Z, 0)) == cplx(-0.5, 0));
    CHECK(hf.coefficient(pauli(Pauli::Z, 1)) == cplx(0.5, 0));

    const auto hf4 = build_fermion_hamiltonian(n4_params());
    std::size_t hopping = 0, mass = 0;
    for (const auto& t : hf4.terms()) (t.paulis.size() == 2 ? hopping : mass)++;
    CHECK(hopping == 8);
    CHECK(mass == 4);
}

TEST_CASE("boson Hamiltonian coefficients", "[algebra]") {
    const auto hb = build_boson_hamiltonian(n2_params());
    CHECK(hb.coefficient(number(0)).real() == Approx(3.4813).margin(1e-4));
    CHECK(hb.coefficient(number(1)).real() == 1.5);

    auto p = n4_params();
    const auto hb4 = build_boson_hamiltonian(p);
    const double expected[4] = {3.297, 1.862, 1.0, 1.862};
    for (int m = 0; m < 4; ++m) CHECK(hb4.coefficient(number(m)).real() == Approx(expected[m]).margin(1e-3));

    p.boson_mass = 0.0;
    const auto massless = build_boson_hamiltonian(p);
    CHECK(massless.size() == 3);
    CHECK(massless.coefficient(number(2)) == cplx(0, 0));
}

TEST_CASE("interaction Hamiltonian", "[algebra]") {
    CHECK(build_interaction_hamiltonian(n4_params(0.0)).empty());

    const auto p = n4_params(2.0);
    const auto hfb = build_interaction_hamiltonian(p);
    const double pref = std::sqrt(p.coupling * p.coupling * p.lattice_spacing / 32.0);
    for (int m = 0; m < 4; ++m) {
        const cplx c = hfb.coefficient(pauli(Pauli::Z, 3) * create(m));
        CHECK(std::abs(c - pref / std::sqrt(mode_energy(p, m))) < 1e-14);
    }
    const auto hm = realize_matrix(hfb, std::vector<int>{1, 1, 1, 1});
    CHECK(hermiticity_defect(hm) < 1e-12);

    auto massless = p;
    massless.boson_mass = 0.0;
    CHECK_THROWS_AS(build_interaction_hamiltonian(massless), ValidationError);
}

TEST_CASE("sector maps follow the explicit encodings", "[algebra][sector]") {
    const auto m2 = SectorMap::standard(2, 0);
    CHECK(m2.n_target_qubits == 1);
    CHECK(ket_label(m2.source[0], 2) == "10");
    CHECK(ket_label(m2.source[1], 2) == "01");
    const auto m4 = SectorMap::standard(4, -1);
    CHECK(m4.n_target_qubits == 2);
    std::vector<std::string> labels;
    for (auto s : m4.source) labels.push_back(ket_label(s, 4));
    CHECK(labels == std::vector<std::string>{"1110", "1101", "1011", "0111"});
    CHECK(SectorMap::standard(2, 1).n_target_qubits == 0);
    CHECK(SectorMap::standard(4, 0).n_target_qubits == 3);  // six states, padded
}

TEST_CASE("projected N=2 Hamiltonian equals the closed form", "[algebra][sector][golden]") {
    const auto p = n2_params();
    const auto reduced = project_to_sector(build_full_hamiltonian(p), SectorMap::standard(p));
    CHECK(reduced.n_qubits() == 1);
    CHECK(max_coefficient_deviation(reduced, closed_form_n2(p)) < 1e-10);
    CHECK(reduced.size() == closed_form_n2(p).size());
}

TEST_CASE("projected N=4 Hamiltonian equals the closed form", "[algebra][sector][golden]") {
    for (double g : {0.0, 2.0, 3.7}) {
        const auto p = n4_params(g);
        const auto reduced = project_to_sector(build_full_hamiltonian(p), SectorMap::standard(p));
        CHECK(reduced.n_qubits() == 2);
        CHECK(max_coefficient_deviation(reduced, closed_form_n4(p)) < 1e-10);
    }
}

TEST_CASE("mass term projects to m Z on the reduced qubit", "[algebra][sector]") {
    OperatorSum mass(2, 0);
    mass.add(pauli(Pauli::Z, 0, -0.5 * 1.3));
    mass.add(pauli(Pauli::Z, 1, 0.5 * 1.3));
    const auto r = project_to_sector(mass, SectorMap::standard(2, 0));
    REQUIRE(r.size() == 1);
    CHECK(std::abs(r.coefficient(pauli(Pauli::Z, 0)) - 1.3) < 1e-14);
}

TEST_CASE("projection rejects charge-violating operators", "[algebra][sector]") {
    OperatorSum x(2, 0);
    x.add(pauli(Pauli::X, 0));
    CHECK_THROWS_AS(project_to_sector(x, SectorMap::standard(2, 0)), ChargeViolation);
    OperatorSum quad(2, 1);
    quad.add(create(0) * create(0));
    CHECK_THROWS_AS(project_to_sector(quad, SectorMap::standard(2, 0)), ValidationError);
}

TEST_CASE("realize_matrix basic operators", "[algebra][realize]") {
    OperatorSum z(1, 0);
    z.add(pauli(Pauli::Z, 0));
    const DenseMatrix zm = realize_matrix(z, std::vector<int>{});
    CHECK(zm(0, 0) == cplx(1, 0));
    CHECK(zm(1, 1) == cplx(-1, 0));
    CHECK(zm(0, 1) == cplx(0, 0));

    OperatorSum ad(0, 1);
    ad.add(create(0));
    const DenseMatrix am = realize_matrix(ad, std::vector<int>{2});
    CHECK(am.rows() == 3);
    CHECK(am(1, 0) == cplx(1, 0));
    CHECK(std::abs(am(2, 1) - std::sqrt(2.0)) < 1e-15);
    CHECK(am.cwiseAbs().sum() == Approx(1.0 + std::sqrt(2.0)));

    CHECK_THROWS_AS(realize_matrix(ad, std::vector<int>{1999, 1999}, 1000), CapacityError);
}

TEST_CASE("realized N=2 reduced Hamiltonian matches a Kronecker-product oracle", "[algebra][realize][oracle]") {
    const auto p = n2_params();
    const int cut = 3;
    const auto reduced = project_to_sector(build_full_hamiltonian(p), SectorMap::standard(p));
    const DenseMatrix h = realize_matrix(reduced, std::vector<int>{cut, cut});

    const DenseMatrix id2 = DenseMatrix::Identity(2, 2);
    const DenseMatrix idf = DenseMatrix::Identity(cut + 1, cut + 1);
    DenseMatrix z = DenseMatrix::Zero(2, 2);
    z(0, 0) = 1;
    z(1, 1) = -1;
    const DenseMatrix ad = creation_matrix(cut);
    const DenseMatrix x = ad + ad.adjoint();
    const DenseMatrix n = ad * ad.adjoint();
    const double e0 = mode_energy(p, 0), e1 = mode_energy(p, 1);
    const double c = p.coupling / 2.0;
    const DenseMatrix oracle = p.fermion_mass * kron(kron(z, idf), idf) + e0 * kron(kron(id2, n), idf) +
                               e1 * kron(kron(id2, idf), n) + c / std::sqrt(e0) * kron(kron(z, x), idf) +
                               c / std::sqrt(e1) * kron(kron(id2, idf), x);
    CHECK(max_abs(h - oracle) < 1e-12);
}

TEST_CASE("built Hamiltonians are Hermitian and conserve charge", "[algebra][property]") {
    for (const auto& p : {n2_params(), n4_params(2.0)}) {
        auto q = p;
        q.cutoffs.assign(static_cast<std::size_t>(p.n_sites), 2);
        const auto h = build_full_hamiltonian(q);
        const Layout layout(q.n_sites, q.cutoffs);
        const auto hm = realize_matrix(h, layout);
        CHECK(hermiticity_defect(hm) < 1e-12);
        const auto qm = realize_matrix(build_charge_operator(q.n_sites), layout);
        const SparseMatrix comm = hm * qm - qm * hm;
        CHECK(max_abs(comm) < 1e-12);
    }
}

TEST_CASE("projection is sound on random sector states", "[algebra][sector][property]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (const auto& p0 : {n2_params(), n4_params(2.0)}) {
        auto p = p0;
        p.cutoffs.assign(static_cast<std::size_t>(p.n_sites), 2);
        const auto map = SectorMap::standard(p);
        const auto full = build_full_hamiltonian(p);
        const auto reduced = project_to_sector(full, map);
        const Layout lf(p.n_sites, p.cutoffs), lr(map.n_target_qubits, p.cutoffs);
        const auto hf = realize_matrix(full, lf);
        const auto hr = realize_matrix(reduced, lr);
        for (int trial = 0; trial < 5; ++trial) {
            Vector phi_r = Vector::Zero(static_cast<Eigen::Index>(lr.dim()));
            Vector phi_f = Vector::Zero(static_cast<Eigen::Index>(lf.dim()));
            for (std::size_t k = 0; k < map.source.size(); ++k)
                for (std::size_t f = 0; f < lf.fock_dim(); ++f) {
                    const cplx a{nd(rng), nd(rng)};
                    phi_r(static_cast<Eigen::Index>(map.target[k] * lr.fock_dim() + f)) = a;
                    phi_f(static_cast<Eigen::Index>(map.source[k] * lf.fock_dim() + f)) = a;
                }
            phi_r.normalize();
            phi_f.normalize();
            const cplx ef = phi_f.dot(hf * phi_f);
            const cplx er = phi_r.dot(hr * phi_r);
            CHECK(std::abs(ef - er) < 1e-10);
        }
    }
}

TEST_CASE("canonicalization is idempotent and the text dump round-trips", "[algebra][property]") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick(0, 3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        OperatorSum s(3, 2);
        for (int k = 0; k < 12; ++k) {
            OperatorTerm t{cplx{nd(rng), nd(rng)}, {}, {}};
            for (int q = 0; q < 3; ++q)
                if (int c = pick(rng); c) t.paulis[q] = static_cast<Pauli>("IXYZ"[c]);
            if (pick(rng) == 1) t.ladders.push_back({pick(rng) % 2, LadderKind::Creation});
            if (pick(rng) == 2) t.ladders.push_back({pick(rng) % 2, LadderKind::Number});
            s.add(t);
            if (k % 3 == 0) s.add(t);  // duplicates to merge
        }
        const auto c1 = s.canonical();
        const auto c2 = c1.canonical();
        CHECK(max_coefficient_deviation(c1, c2) == 0.0);
        CHECK(c1.size() == c2.size());

        std::stringstream ss;
        write_operator_sum(ss, c1);
        const auto back = read_operator_sum(ss);
        CHECK(back.n_qubits() == 3);
        CHECK(max_coefficient_deviation(back, c1) < 1e-13);
    }
}

TEST_CASE("text dump format", "[algebra][io]") {
    OperatorSum s(2, 4);
    s.add(pauli(Pauli::Z, 0) * pauli(Pauli::X, 1) * create(0) * annihilate(1) * number(3));
    CHECK(format_term(s.terms()[0]) == "(1,0) | Z0 X1 | a0^ a1 n3");
    std::istringstream in("(0.5,-1) | - | a2^\n(2,0) | Y1 | -\n");
    const auto r = read_operator_sum(in);
    REQUIRE(r.size() == 2);
    CHECK(r.coefficient(create(2)) == cplx(0.5, -1));
    CHECK(r.coefficient(pauli(Pauli::Y, 1)) == cplx(2, 0));
    std::istringstream bad("(1,0) | Q0 | -\n");
    CHECK_THROWS_AS(read_operator_sum(bad), ValidationError);
}

TEST_CASE("Jordan-Wigner check", "[algebra][jw]") {
    for (int n : {2, 4, 6}) {
        const auto rep = jordan_wigner_check(n);
        CHECK(rep.anticommutator_deviation < 1e-12);
        CHECK(rep.annihilator_deviation < 1e-12);
        CHECK(rep.hamiltonian_deviation < 1e-12);
    }
    const auto rep = jordan_wigner_check(2);
    bool found = false;
    for (auto [q, chi] : rep.boundary_signs)
        if (q == 0) {
            CHECK(chi == -1);
            found = true;
        }
    CHECK(found);
}
