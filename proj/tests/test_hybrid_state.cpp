#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "hybridsim/hybrid_state.hpp"

using namespace hybridsim;
using Catch::Approx;

namespace {

double sum(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
}

Vector random_vector(Eigen::Index n, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = {g(rng), g(rng)};
    return v.normalized();
}

}  // namespace

TEST_CASE("vacuum dimensions", "[state]") {
    const auto a = vacuum_state(1, {2, 2});
    CHECK(a.dim() == 18);
    CHECK(a[0] == cplx{1.0, 0.0});
    CHECK(a.norm() == Approx(1.0));

    const auto b = vacuum_state(2, {8, 8, 8, 8});
    CHECK(b.dim() == 26244);
    CHECK(b.norm() == Approx(1.0));

    CHECK_THROWS_AS(vacuum_state(30, {15, 15, 15}), CapacityError);
}

TEST_CASE("marginals of simple states", "[state]") {
    const Layout l(1, {3, 3});
    const auto vac = vacuum_state(l);
    CHECK(spin_marginal(vac) == std::vector<double>{1.0, 0.0});
    CHECK(mode_marginal(vac, 1) == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    CHECK(leakage(vac) == std::vector<double>{0.0, 0.0});

    Vector plus(2);
    plus << 1.0, 1.0;
    Vector zero = Vector::Zero(4);
    zero(0) = 1.0;
    const auto s = product_state(l, plus, {zero, zero});
    const auto ps = spin_marginal(s);
    CHECK(ps[0] == Approx(0.5));
    CHECK(ps[1] == Approx(0.5));

    const auto top = basis_state(l, 0, {0, 3});
    CHECK(leakage(top)[0] == 0.0);
    CHECK(leakage(top)[1] == 1.0);
}

TEST_CASE("coherent amplitudes give a Poisson occupation law", "[state]") {
    const int cut = 15;
    const Layout l(1, {cut});
    const double mean = 1.0;
    Vector coh(cut + 1);
    double fact = 1.0;
    for (int n = 0; n <= cut; ++n) {
        if (n > 0) fact *= n;
        coh(n) = std::exp(-mean / 2) * std::pow(mean, n / 2.0) / std::sqrt(fact);
    }
    Vector up(2);
    up << 1.0, 0.0;
    const auto s = product_state(l, up, {coh});
    const auto p = mode_marginal(s, 0);
    fact = 1.0;
    for (int n = 0; n <= cut; ++n) {
        if (n > 0) fact *= n;
        CHECK(p[n] == Approx(std::exp(-mean) * std::pow(mean, n) / fact).margin(1e-10));
    }
}

TEST_CASE("layout index round trip", "[state][property]") {
    const Layout l(2, {2, 3, 1}, {0, 1, 3});
    for (std::size_t i = 0; i < l.dim(); ++i) {
        const auto d = l.decode(i);
        CHECK(l.encode(d.spin, d.occupations) == i);
    }
    // spin-major then modes ascending
    CHECK(l.encode(1, {0, 0, 0}) == 3 * 4 * 2);
    CHECK(l.encode(0, {1, 0, 0}) == 4 * 2);
    CHECK(l.encode(0, {0, 0, 1}) == 1);
    CHECK(l.mode_position(3) == 2);
    CHECK_THROWS_AS(l.mode_position(2), ValidationError);
}

TEST_CASE("product-state marginals factorize", "[state][property]") {
    std::mt19937 rng(7);
    const Layout l(2, {3, 2});
    for (int trial = 0; trial < 5; ++trial) {
        const Vector sp = random_vector(4, rng);
        const Vector m0 = random_vector(4, rng);
        const Vector m1 = random_vector(3, rng);
        const auto s = product_state(l, sp, {m0, m1});
        const auto ps = spin_marginal(s);
        const auto p0 = mode_marginal(s, 0);
        const auto p1 = mode_marginal(s, 1);
        for (int k = 0; k < 4; ++k) CHECK(ps[k] == Approx(std::norm(sp(k))).margin(1e-14));
        for (int k = 0; k < 4; ++k) CHECK(p0[k] == Approx(std::norm(m0(k))).margin(1e-14));
        for (int k = 0; k < 3; ++k) CHECK(p1[k] == Approx(std::norm(m1(k))).margin(1e-14));
        CHECK(sum(ps) == Approx(1.0).margin(1e-12));
        const auto q = qubit_marginal(s, 1);
        CHECK(q[0] == Approx(ps[0] + ps[1]).margin(1e-14));
    }
}

TEST_CASE("overlap and fidelity", "[state]") {
    const Layout l(1, {1});
    const auto a = basis_state(l, 0, {0});
    const auto b = basis_state(l, 1, {0});
    CHECK(fidelity(a, a) == Approx(1.0));
    CHECK(fidelity(a, b) == 0.0);
    CHECK_THROWS_AS(overlap(a, vacuum_state(1, {2})), ValidationError);
}

TEST_CASE("binary state dump round trip", "[state][io]") {
    std::mt19937 rng(3);
    const Layout l(2, {2, 4});
    const HybridState s(l, random_vector(static_cast<Eigen::Index>(l.dim()), rng));
    std::stringstream buf;
    write_state(buf, s);
    CHECK(buf.str().size() == 16 + 2 * 4 + l.dim() * 16);
    CHECK(buf.str().substr(0, 4) == "HYST");
    const auto t = read_state(buf);
    CHECK(t.layout() == l);
    CHECK((t.amplitudes() - s.amplitudes()).norm() == 0.0);

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_state(bad), ValidationError);
}
