#pragma once

// Symbolic sums of (complex coefficient x Pauli string x boson ladder monomial).

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hybridsim/errors.hpp"

namespace hybridsim {

using cplx = std::complex<double>;

enum class Pauli : char { I = 'I', X = 'X', Y = 'Y', Z = 'Z' };

enum class LadderKind : char { Creation = '^', Annihilation = 'a', Number = 'n' };

struct Ladder {
    int mode = 0;
    LadderKind kind = LadderKind::Creation;

    friend auto operator<=>(const Ladder&, const Ladder&) = default;
};

/// Product of two single-qubit Paulis: returns (phase, result) with a*b = phase * result.
inline std::pair<cplx, Pauli> pauli_product(Pauli a, Pauli b) {
    using enum Pauli;
    if (a == I) return {1.0, b};
    if (b == I) return {1.0, a};
    if (a == b) return {1.0, I};
    const cplx i{0.0, 1.0};
    if (a == X && b == Y) return {i, Z};
    if (a == Y && b == X) return {-i, Z};
    if (a == Y && b == Z) return {i, X};
    if (a == Z && b == Y) return {-i, X};
    if (a == Z && b == X) return {i, Y};
    return {-i, Y};  // X*Z
}

struct OperatorTerm {
    cplx coeff{1.0, 0.0};
    std::map<int, Pauli> paulis;  // qubit -> non-identity Pauli
    std::vector<Ladder> ladders;  // rightmost acts first

    using Key = std::pair<std::map<int, Pauli>, std::vector<Ladder>>;

    [[nodiscard]] Key key() const { return {paulis, ladders}; }

    /// Ladders on different modes commute: stable-sort by mode, keeping the
    /// within-mode order. Identity Paulis are removed.
    void normalize() {
        std::stable_sort(ladders.begin(), ladders.end(),
                         [](const Ladder& a, const Ladder& b) { return a.mode < b.mode; });
        std::erase_if(paulis, [](const auto& kv) { return kv.second == Pauli::I; });
    }

    [[nodiscard]] OperatorTerm dagger() const {
        OperatorTerm out;
        out.coeff = std::conj(coeff);
        out.paulis = paulis;
        for (auto it = ladders.rbegin(); it != ladders.rend(); ++it) {
            Ladder l = *it;
            if (l.kind == LadderKind::Creation) l.kind = LadderKind::Annihilation;
            else if (l.kind == LadderKind::Annihilation) l.kind = LadderKind::Creation;
            out.ladders.push_back(l);
        }
        out.normalize();
        return out;
    }

    [[nodiscard]] bool has_ladders() const { return !ladders.empty(); }
};

/// a*b with the Pauli algebra applied qubit-wise and ladders concatenated.
inline OperatorTerm operator*(const OperatorTerm& a, const OperatorTerm& b) {
    OperatorTerm out;
    out.coeff = a.coeff * b.coeff;
    out.paulis = a.paulis;
    for (const auto& [q, p] : b.paulis) {
        auto it = out.paulis.find(q);
        if (it == out.paulis.end()) {
            out.paulis.emplace(q, p);
        } else {
            auto [phase, r] = pauli_product(it->second, p);
            out.coeff *= phase;
            it->second = r;
        }
    }
    out.ladders = a.ladders;
    out.ladders.insert(out.ladders.end(), b.ladders.begin(), b.ladders.end());
    out.normalize();
    return out;
}

// convenience constructors
inline OperatorTerm term(cplx c) { return OperatorTerm{c, {}, {}}; }
inline OperatorTerm pauli(Pauli p, int q, cplx c = 1.0) {
    OperatorTerm t{c, {}, {}};
    if (p != Pauli::I) t.paulis[q] = p;
    return t;
}
inline OperatorTerm create(int m, cplx c = 1.0) { return OperatorTerm{c, {}, {{m, LadderKind::Creation}}}; }
inline OperatorTerm annihilate(int m, cplx c = 1.0) { return OperatorTerm{c, {}, {{m, LadderKind::Annihilation}}}; }
inline OperatorTerm number(int m, cplx c = 1.0) { return OperatorTerm{c, {}, {{m, LadderKind::Number}}}; }

class OperatorSum {
public:
    OperatorSum() = default;
    OperatorSum(int n_qubits, int n_modes) : n_qubits_(n_qubits), n_modes_(n_modes) {}

    [[nodiscard]] int n_qubits() const { return n_qubits_; }
    [[nodiscard]] int n_modes() const { return n_modes_; }
    [[nodiscard]] const std::vector<OperatorTerm>& terms() const { return terms_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] bool empty() const { return terms_.empty(); }

    void add(OperatorTerm t) {
        t.normalize();
        for (const auto& [q, p] : t.paulis)
            if (q < 0 || q >= n_qubits_) throw ValidationError("operator term qubit out of range");
        for (const auto& l : t.ladders)
            if (l.mode < 0 || l.mode >= n_modes_) throw ValidationError("operator term mode out of range");
        terms_.push_back(std::move(t));
    }

    OperatorSum& operator+=(const OperatorSum& o) {
        n_qubits_ = std::max(n_qubits_, o.n_qubits_);
        n_modes_ = std::max(n_modes_, o.n_modes_);
        for (const auto& t : o.terms_) add(t);
        return *this;
    }
    friend OperatorSum operator+(OperatorSum a, const OperatorSum& b) { return a += b; }

    friend OperatorSum operator*(cplx s, OperatorSum a) {
        for (auto& t : a.terms_) t.coeff *= s;
        return a;
    }

    [[nodiscard]] OperatorSum dagger() const {
        OperatorSum out(n_qubits_, n_modes_);
        for (const auto& t : terms_) out.add(t.dagger());
        return out;
    }

    /// Merges identical (paulis, ladders) keys, drops |coeff| <= tol, sorts by key.
    [[nodiscard]] OperatorSum canonical(double tol = 1e-13) const {
        std::map<OperatorTerm::Key, cplx> merged;
        for (const auto& t : terms_) merged[t.key()] += t.coeff;
        OperatorSum out(n_qubits_, n_modes_);
        for (auto& [k, c] : merged) {
            if (std::abs(c) <= tol) continue;
            OperatorTerm t;
            t.coeff = c;
            t.paulis = k.first;
            t.ladders = k.second;
            out.terms_.push_back(std::move(t));
        }
        return out;
    }

    /// Coefficient of an exact (paulis, ladders) key in the canonical form.
    [[nodiscard]] cplx coefficient(const OperatorTerm& pattern) const {
        OperatorTerm p = pattern;
        p.normalize();
        cplx c = 0.0;
        for (const auto& t : terms_)
            if (t.paulis == p.paulis && t.ladders == p.ladders) c += t.coeff;
        return c;
    }

    /// Largest coefficient deviation between the canonical forms of two sums.
    friend double max_coefficient_deviation(const OperatorSum& a, const OperatorSum& b) {
        std::map<OperatorTerm::Key, cplx> diff;
        for (const auto& t : a.terms_) diff[t.key()] += t.coeff;
        for (const auto& t : b.terms_) diff[t.key()] -= t.coeff;
        double m = 0.0;
        for (const auto& [k, c] : diff) m = std::max(m, std::abs(c));
        return m;
    }

private:
    int n_qubits_ = 0;
    int n_modes_ = 0;
    std::vector<OperatorTerm> terms_;
};

inline OperatorSum operator*(const OperatorSum& a, const OperatorSum& b) {
    OperatorSum out(std::max(a.n_qubits(), b.n_qubits()), std::max(a.n_modes(), b.n_modes()));
    for (const auto& x : a.terms())
        for (const auto& y : b.terms()) out.add(x * y);
    return out;
}

// ---------------------------------------------------------------------------
// text dump:  (<re>,<im>) | Z0 X1 | a0^ a1 n3
// An empty Pauli or ladder section is written as '-'.

inline std::string format_term(const OperatorTerm& t) {
    std::ostringstream os;
    os << std::setprecision(15) << '(' << t.coeff.real() << ',' << t.coeff.imag() << ") |";
    if (t.paulis.empty()) os << " -";
    for (const auto& [q, p] : t.paulis) os << ' ' << static_cast<char>(p) << q;
    os << " |";
    if (t.ladders.empty()) os << " -";
    for (const auto& l : t.ladders) {
        if (l.kind == LadderKind::Number) os << " n" << l.mode;
        else os << " a" << l.mode << (l.kind == LadderKind::Creation ? "^" : "");
    }
    return os.str();
}

inline void write_operator_sum(std::ostream& os, const OperatorSum& s) {
    os << "# n_qubits=" << s.n_qubits() << " n_modes=" << s.n_modes() << '\n';
    for (const auto& t : s.terms()) os << format_term(t) << '\n';
}

inline OperatorSum read_operator_sum(std::istream& in) {
    std::string line;
    int nq = -1, nm = -1;
    std::vector<OperatorTerm> parsed;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto a = line.find("n_qubits=");
            const auto b = line.find("n_modes=");
            if (a != std::string::npos) nq = std::stoi(line.substr(a + 9));
            if (b != std::string::npos) nm = std::stoi(line.substr(b + 8));
            continue;
        }
        std::stringstream ss(line);
        std::string coeff, paulis, ladders;
        if (!std::getline(ss, coeff, '|') || !std::getline(ss, paulis, '|') || !std::getline(ss, ladders))
            throw ValidationError("operator dump: malformed line: " + line);
        OperatorTerm t;
        {
            std::stringstream cs(coeff);
            char lp = 0, comma = 0, rp = 0;
            double re = 0, im = 0;
            if (!(cs >> lp >> re >> comma >> im >> rp) || lp != '(' || comma != ',' || rp != ')')
                throw ValidationError("operator dump: bad coefficient: " + coeff);
            t.coeff = {re, im};
        }
        {
            std::stringstream ps(paulis);
            std::string tok;
            while (ps >> tok) {
                if (tok == "-") continue;
                const char k = tok[0];
                if (k != 'X' && k != 'Y' && k != 'Z') throw ValidationError("operator dump: bad Pauli " + tok);
                t.paulis[std::stoi(tok.substr(1))] = static_cast<Pauli>(k);
            }
        }
        {
            std::stringstream ls(ladders);
            std::string tok;
            while (ls >> tok) {
                if (tok == "-") continue;
                if (tok[0] == 'n') {
                    t.ladders.push_back({std::stoi(tok.substr(1)), LadderKind::Number});
                } else if (tok[0] == 'a') {
                    const bool dag = tok.back() == '^';
                    t.ladders.push_back({std::stoi(tok.substr(1, tok.size() - 1 - (dag ? 1 : 0))),
                                         dag ? LadderKind::Creation : LadderKind::Annihilation});
                } else {
                    throw ValidationError("operator dump: bad ladder token " + tok);
                }
            }
        }
        parsed.push_back(std::move(t));
    }
    if (nq < 0 || nm < 0) {
        nq = std::max(nq, 0);
        nm = std::max(nm, 0);
        for (const auto& t : parsed) {
            for (const auto& [q, p] : t.paulis) nq = std::max(nq, q + 1);
            for (const auto& l : t.ladders) nm = std::max(nm, l.mode + 1);
        }
    }
    OperatorSum out(nq, nm);
    for (auto& t : parsed) out.add(std::move(t));
    return out;
}

}  // namespace hybridsim
