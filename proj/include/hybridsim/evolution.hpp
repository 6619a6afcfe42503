#pragma once

// Continuous evolution exp(-iHt)|psi> (dense eigendecomposition or Lanczos
// propagation), Trotter-circuit execution with snapshots, cutoff sweeps.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hybridsim/hybrid_state.hpp"
#include "hybridsim/observables.hpp"
#include "hybridsim/realize.hpp"
#include "hybridsim/trotter.hpp"

namespace hybridsim {

struct EvolveOptions {
    std::size_t dense_limit = 1024;  // eigendecomposition up to this dimension, Lanczos above
    int krylov_max_dim = 60;
    double tolerance = 1e-10;
    bool force_krylov = false;
};

namespace detail {

/// One Lanczos step: approximates exp(-i dt H) v. Returns nullopt when the
/// a-posteriori error estimate is not met within max_dim vectors; `residual`
/// then holds the last estimate.
inline std::optional<Vector> lanczos_step(const SparseMatrix& h, const Vector& v, double dt, int max_dim, double tol,
                                          double& residual) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) return Vector::Zero(v.size());
    const auto n = v.size();
    const int m_cap = static_cast<int>(std::min<Eigen::Index>(max_dim, n));
    Eigen::MatrixXcd basis(n, m_cap + 1);
    std::vector<double> alpha, beta;
    basis.col(0) = v / beta0;
    for (int j = 0; j < m_cap; ++j) {
        Vector w = h * basis.col(j);
        alpha.push_back(basis.col(j).dot(w).real());
        // full reorthogonalization (twice is enough)
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) w -= basis.col(i) * basis.col(i).dot(w);
        const double b = w.norm();
        const int m = j + 1;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) t(i, i) = alpha[static_cast<std::size_t>(i)];
        for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        const Eigen::VectorXcd ph = (cplx{0.0, -dt} * es.eigenvalues().cast<cplx>()).array().exp();
        const Eigen::VectorXcd y =
            es.eigenvectors().cast<cplx>() * (ph.asDiagonal() * es.eigenvectors().row(0).transpose().cast<cplx>());
        residual = beta0 * b * std::abs(y(m - 1));
        const bool invariant = b < 1e-13 * std::max(1.0, std::abs(alpha.back()));
        if (residual < tol || invariant || m == n) return beta0 * (basis.leftCols(m) * y);
        beta.push_back(b);
        basis.col(j + 1) = w / b;
    }
    return std::nullopt;
}

}  // namespace detail

/// exp(-i H t) v by Lanczos with adaptive substeps (halved on failure).
inline Vector krylov_expm(const SparseMatrix& h, const Vector& v, double t, const EvolveOptions& opt = {}) {
    Vector cur = v;
    double remaining = t;
    double step = t;
    int substeps = 0;
    const double per_step_tol = opt.tolerance;
    while (std::abs(remaining) > 0.0) {
        if (std::abs(step) > std::abs(remaining)) step = remaining;
        double residual = 0.0;
        auto next = detail::lanczos_step(h, cur, step, opt.krylov_max_dim, per_step_tol, residual);
        if (!next) {
            step /= 2;
            if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(t))) {
                std::ostringstream os;
                os << "krylov propagation did not converge (residual " << residual << ")";
                throw NumericalError(os.str());
            }
            continue;
        }
        cur = std::move(*next);
        remaining -= step;
        if (++substeps > 1'000'000) throw NumericalError("krylov propagation: too many substeps");
        step *= 1.5;  // let the step grow back after a successful substep
    }
    return cur;
}

/// exp(-iHt) on a fixed Hamiltonian; the dense path diagonalizes once and
/// reuses the eigenbasis for every time.
class ExactPropagator {
public:
    explicit ExactPropagator(SparseMatrix h, EvolveOptions opt = {}) : h_(std::move(h)), opt_(opt) {
        if (h_.rows() != h_.cols()) throw ValidationError("evolve_exact: Hamiltonian must be square");
        const double scale = std::max(1.0, max_abs(h_));
        if (hermiticity_defect(h_) > 1e-10 * scale) throw ValidationError("evolve_exact: Hamiltonian is not Hermitian");
        dense_ = !opt_.force_krylov && static_cast<std::size_t>(h_.rows()) <= opt_.dense_limit;
        if (dense_) {
            Eigen::SelfAdjointEigenSolver<DenseMatrix> es{DenseMatrix(h_)};
            if (es.info() != Eigen::Success) throw NumericalError("evolve_exact: eigendecomposition failed");
            vecs_ = es.eigenvectors();
            vals_ = es.eigenvalues();
        }
    }

    [[nodiscard]] bool dense() const { return dense_; }
    [[nodiscard]] const SparseMatrix& hamiltonian() const { return h_; }

    [[nodiscard]] Vector evolve(const Vector& v, double t) const {
        if (v.size() != h_.rows()) throw ValidationError("evolve_exact: state dimension does not match Hamiltonian");
        if (t == 0.0) return v;
        if (dense_) {
            const Eigen::VectorXcd ph = (cplx{0.0, -t} * vals_.cast<cplx>()).array().exp();
            return vecs_ * (ph.asDiagonal() * (vecs_.adjoint() * v));
        }
        return krylov_expm(h_, v, t, opt_);
    }

    [[nodiscard]] HybridState evolve(const HybridState& s, double t) const {
        return HybridState(s.layout(), evolve(s.amplitudes(), t));
    }

private:
    SparseMatrix h_;
    EvolveOptions opt_;
    bool dense_ = false;
    DenseMatrix vecs_;
    Eigen::VectorXd vals_;
};

inline HybridState evolve_exact(const SparseMatrix& h, const HybridState& initial, double t, const EvolveOptions& opt = {}) {
    return ExactPropagator(h, opt).evolve(initial, t);
}

inline HybridState evolve_exact(const OperatorSum& h, const HybridState& initial, double t, const EvolveOptions& opt = {}) {
    return evolve_exact(realize_matrix(h, initial.layout()), initial, t, opt);
}

/// States at each of `times`, propagated incrementally from the previous time.
inline std::vector<HybridState> exact_series(const SparseMatrix& h, const HybridState& initial,
                                             const std::vector<double>& times, const EvolveOptions& opt = {}) {
    ExactPropagator prop(h, opt);
    std::vector<HybridState> out;
    HybridState cur = initial;
    double tcur = 0.0;
    for (double t : times) {
        cur = prop.dense() ? prop.evolve(initial, t) : prop.evolve(cur, t - tcur);
        tcur = t;
        out.push_back(cur);
    }
    return out;
}

inline double energy_expectation(const SparseMatrix& h, const HybridState& s) {
    const cplx e = s.amplitudes().dot(h * s.amplitudes());
    const double scale = std::max(1.0, std::abs(e));
    if (std::abs(e.imag()) > 1e-10 * scale) throw NumericalError("energy_expectation: complex expectation value");
    return e.real();
}

inline double energy_expectation(const OperatorSum& h, const HybridState& s) {
    return energy_expectation(realize_matrix(h, s.layout()), s);
}

// ---------------------------------------------------------------------------
// Trotter execution

struct TrotterRun {
    std::vector<int> steps;
    std::vector<double> times;
    std::vector<HybridState> snapshots;
    std::vector<std::vector<double>> leakage;  // per snapshot, per layout mode
    std::vector<std::string> warnings;
    Circuit circuit;  // the executed circuit for the last recorded step (logical gates)
};

/// Layout for running `plan` (system qubits, optional ancilla, plan modes).
inline Layout plan_layout(const TrotterPlan& plan, const std::vector<int>& cutoffs_by_mode,
                          std::size_t capacity = kDefaultCapacity) {
    std::vector<int> cut;
    for (int m : plan.modes) {
        if (m < 0 || m >= static_cast<int>(cutoffs_by_mode.size())) throw ValidationError("plan_layout: no cutoff for mode");
        cut.push_back(cutoffs_by_mode[static_cast<std::size_t>(m)]);
    }
    return Layout(plan.total_qubits(), cut, plan.modes, capacity);
}

namespace detail {

inline void record(TrotterRun& run, const TrotterPlan& plan, int step, HybridState s, double threshold) {
    run.steps.push_back(step);
    run.times.push_back(plan.dt * step);
    auto lk = leakage(s);
    for (std::size_t k = 0; k < lk.size(); ++k)
        if (lk[k] > threshold) {
            std::ostringstream os;
            os << "step " << step << ": mode " << s.layout().mode_labels()[k] << " top-level population " << lk[k]
               << " exceeds " << threshold;
            run.warnings.push_back(os.str());
        }
    if (std::abs(s.norm() - 1.0) > 1e-9) throw NumericalError("run_trotter: norm drift detected");
    run.leakage.push_back(std::move(lk));
    run.snapshots.push_back(std::move(s));
}

}  // namespace detail

/// Executes the plan's circuit from `initial`, recording states after the
/// steps in `record_steps` (all steps 0..plan.steps if empty).
///
/// With phase-frame compilation the pending mode phases are applied to each
/// snapshot, so snapshots are the true states. With compression the k-step
/// circuit is compressed and executed separately for every recorded k; such
/// snapshots are only faithful for the declared measurement.
inline TrotterRun run_trotter(const TrotterPlan& plan, const HybridState& initial, std::vector<int> record_steps = {},
                              double leakage_threshold = 1e-3) {
    const auto& l = initial.layout();
    if (l.n_qubits() != plan.total_qubits()) throw ValidationError("run_trotter: state qubit count does not match plan");
    for (int m : plan.modes)
        if (!l.has_mode(m)) throw ValidationError("run_trotter: state does not hold mode " + std::to_string(m));
    if (record_steps.empty())
        for (int k = 0; k <= plan.steps; ++k) record_steps.push_back(k);
    std::sort(record_steps.begin(), record_steps.end());
    for (int k : record_steps)
        if (k < 0 || k > plan.steps) throw ValidationError("run_trotter: record step out of range");

    TrotterRun run;
    if (plan.compression) {
        for (int k : record_steps) {
            Circuit c = plan_circuit(plan, k);
            std::map<int, double> residual;
            if (plan.compile_phases) {
                auto cc = compile_mode_phases(c);
                c = std::move(cc.circuit);
                residual = std::move(cc.residual);
            }
            c = compress(c, *plan.compression);
            HybridState s = initial;
            apply_circuit(c, s);
            for (const auto& [m, th] : residual) apply_gate(mode_phase(m, th), s);
            detail::record(run, plan, k, std::move(s), leakage_threshold);
            run.circuit = std::move(c);
        }
        return run;
    }

    const Circuit one = plan_circuit(plan, 1);
    HybridState s = initial;
    PhaseFrame frame;
    std::size_t next = 0;
    Circuit executed;
    executed.n_qubits = one.n_qubits;
    executed.modes = one.modes;
    for (int k = 0; k <= plan.steps && next < record_steps.size(); ++k) {
        if (k > 0)
            for (GateOp g : one.ops) {
                g.step = k - 1;
                if (plan.compile_phases) {
                    auto kept = frame.absorb(g);
                    if (!kept) continue;
                    g = std::move(*kept);
                }
                apply_gate(g, s);
                executed.ops.push_back(std::move(g));
            }
        while (next < record_steps.size() && record_steps[next] == k) {
            HybridState snap = s;
            if (plan.compile_phases) frame.restore(snap);
            detail::record(run, plan, k, std::move(snap), leakage_threshold);
            ++next;
        }
    }
    run.circuit = std::move(executed);
    return run;
}

// ---------------------------------------------------------------------------
// cutoff convergence

struct ConvergenceRow {
    int cutoff = 0;
    std::vector<double> mean_occupation;  // per mode, in mode-label order
    double max_rel_deviation = 0.0;       // vs the previous row (0 for the first)
};

struct ConvergenceTable {
    std::vector<int> modes;
    double time = 0.0;
    std::vector<ConvergenceRow> rows;

    [[nodiscard]] double final_deviation() const { return rows.empty() ? 0.0 : rows.back().max_rel_deviation; }
};

/// Relative deviation |a - b| / max(|a|, |b|), 0 when both vanish.
inline double relative_deviation(double a, double b) {
    const double d = std::max(std::abs(a), std::abs(b));
    return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

/// Continuous evolution of the reduced Hamiltonian from the vacuum to time t
/// for each cutoff (uniform over modes), recording per-mode <a^dag a>.
inline ConvergenceTable cutoff_sweep(const OperatorSum& reduced, const std::vector<int>& cutoffs, double t,
                                     const EvolveOptions& opt = {}, std::size_t capacity = kDefaultCapacity) {
    if (cutoffs.empty()) throw ValidationError("cutoff_sweep: empty cutoff list");
    for (std::size_t k = 1; k < cutoffs.size(); ++k)
        if (cutoffs[k] <= cutoffs[k - 1]) throw ValidationError("cutoff_sweep: cutoffs must be ascending");
    ConvergenceTable table;
    table.time = t;
    for (int m = 0; m < reduced.n_modes(); ++m) table.modes.push_back(m);
    for (int cut : cutoffs) {
        const Layout l(reduced.n_qubits(), std::vector<int>(static_cast<std::size_t>(reduced.n_modes()), cut), {}, capacity);
        const auto s = evolve_exact(realize_matrix(reduced, l), vacuum_state(l), t, opt);
        ConvergenceRow row;
        row.cutoff = cut;
        for (int m : table.modes) row.mean_occupation.push_back(mean_occupation(s, m));
        if (!table.rows.empty()) {
            const auto& prev = table.rows.back().mean_occupation;
            for (std::size_t k = 0; k < prev.size(); ++k)
                row.max_rel_deviation = std::max(row.max_rel_deviation, relative_deviation(row.mean_occupation[k], prev[k]));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// CSV

/// `t,<columns>` with 12 significant digits.
inline void write_series_csv(std::ostream& os, const std::vector<std::string>& columns, const std::vector<double>& times,
                             const std::vector<std::vector<double>>& rows) {
    if (times.size() != rows.size()) throw ValidationError("write_series_csv: row count mismatch");
    os << "t";
    for (const auto& c : columns) os << ',' << c;
    os << '\n' << std::setprecision(12);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != columns.size()) throw ValidationError("write_series_csv: column count mismatch");
        os << times[r];
        for (double v : rows[r]) os << ',' << v;
        os << '\n';
    }
}

}  // namespace hybridsim
