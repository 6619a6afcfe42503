#pragma once

// Red-sideband phonon readout: signal synthesis, shot sampling, constrained
// population fit and parametric bootstrap.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hybridsim/errors.hpp"

namespace hybridsim {

struct SidebandModel {
    double omega1 = 1.0;   // Rabi angular frequency of |0>|1> <-> |1>|0>
    double gamma1 = 0.01;  // decay, same for every n
    int n_max = 6;

    [[nodiscard]] double omega(int n) const { return std::sqrt(static_cast<double>(n)) * omega1; }
    [[nodiscard]] double gamma(int /*n*/) const { return gamma1; }

    void validate() const {
        if (!(omega1 > 0.0) || !std::isfinite(omega1)) throw ValidationError("sideband model: omega1 must be > 0");
        if (!(gamma1 >= 0.0) || !std::isfinite(gamma1)) throw ValidationError("sideband model: gamma1 must be >= 0");
        if (n_max < 1) throw ValidationError("sideband model: n_max must be >= 1");
    }
};

struct ReadoutDataset {
    std::vector<double> times;
    int shots = 1000;
    std::vector<double> excited;  // fraction of shots found in |1>
    std::uint64_t seed = 0;

    void validate() const {
        if (times.size() != excited.size()) throw ValidationError("readout dataset: times/fractions length mismatch");
        if (times.empty()) throw ValidationError("readout dataset: empty");
        if (shots < 1) throw ValidationError("readout dataset: shots must be positive");
        for (double f : excited)
            if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("readout dataset: fraction outside [0,1]");
        for (double t : times)
            if (!std::isfinite(t) || t < 0.0) throw ValidationError("readout dataset: bad probe time");
    }
};

/// `points` uniform times over [0, periods * 2pi / omega1].
inline std::vector<double> default_probe_times(const SidebandModel& m, int points = 120, double periods = 6.0) {
    m.validate();
    if (points < 2) throw ValidationError("probe grid needs at least 2 points");
    const double tmax = periods * 2.0 * std::numbers::pi / m.omega1;
    std::vector<double> t(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) t[static_cast<std::size_t>(k)] = tmax * k / (points - 1);
    return t;
}

inline double sideband_term(const SidebandModel& m, int n, double t) {
    const double s = std::sin(m.omega(n) * t / 2.0);
    return s * s * std::exp(-m.gamma(n) * t);
}

/// Columns n = 1..n_max.
inline Eigen::MatrixXd design_matrix(const SidebandModel& m, const std::vector<double>& times) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(times.size()), m.n_max);
    for (std::size_t i = 0; i < times.size(); ++i)
        for (int n = 1; n <= m.n_max; ++n) a(static_cast<Eigen::Index>(i), n - 1) = sideband_term(m, n, times[i]);
    return a;
}

/// P[n] for n = 0, 1, ...; every supplied level contributes, regardless of n_max.
inline std::vector<double> synthesize_signal(const std::vector<double>& p, const SidebandModel& m,
                                             const std::vector<double>& times) {
    m.validate();
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw ValidationError("synthesize_signal: negative population");
        total += x;
    }
    if (total > 1.0 + 1e-9) throw ValidationError("synthesize_signal: populations sum above 1");
    std::vector<double> out(times.size(), 0.0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        double v = 0.0;
        for (std::size_t n = 1; n < p.size(); ++n)
            if (p[n] != 0.0) v += p[n] * sideband_term(m, static_cast<int>(n), times[i]);
        out[i] = v;
    }
    return out;
}

/// Independent stream per (seed, index); lets resamples run in any order.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

namespace detail {

inline ReadoutDataset draw(const std::vector<double>& curve, const std::vector<double>& times, int shots,
                           std::mt19937_64& rng) {
    ReadoutDataset d;
    d.times = times;
    d.shots = shots;
    d.excited.resize(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double p = std::clamp(curve[i], 0.0, 1.0);
        std::binomial_distribution<int> b(shots, p);
        d.excited[i] = static_cast<double>(b(rng)) / shots;
    }
    return d;
}

}  // namespace detail

inline ReadoutDataset sample_shots(const std::vector<double>& curve, const std::vector<double>& times, int shots,
                                   std::uint64_t seed) {
    if (curve.size() != times.size()) throw ValidationError("sample_shots: curve/times length mismatch");
    if (shots < 1) throw ValidationError("sample_shots: shots must be positive");
    for (double c : curve)
        if (!(c >= -1e-12 && c <= 1.0 + 1e-12)) throw ValidationError("sample_shots: curve value outside [0,1]");
    auto rng = stream_rng(seed, 0);
    auto d = detail::draw(curve, times, shots, rng);
    d.seed = seed;
    return d;
}

struct FitOptions {
    bool weighted = false;  // binomial-variance weights
    double tolerance = 1e-10;
    int max_iterations = 1000;
};

struct FitResult {
    std::vector<double> populations;  // n = 0..n_max, P0 = 1 - sum
    double residual_norm = 0.0;
    double condition = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool cap_active = false;
    bool weighted = false;
};

namespace detail {

struct QpSolution {
    Eigen::VectorXd x;
    int iterations = 0;
    double kkt = 0.0;
    bool cap = false;
};

// Primal active-set method for  min 1/2 x'Hx - c'x  with x >= 0 and sum(x) <= 1.
// H is positive semidefinite; equality subproblems use a rank-revealing solve.
inline QpSolution capped_nonneg_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& c, double tol, int max_iter) {
    const Eigen::Index n = c.size();
    const double scale = std::max({1.0, h.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff()});
    const double tol_s = tol * scale;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> bound(static_cast<std::size_t>(n), true);
    bool cap = false;

    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd g = h * x - c;
        std::vector<Eigen::Index> f;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!bound[static_cast<std::size_t>(i)]) f.push_back(i);
        const auto k = static_cast<Eigen::Index>(f.size());

        Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
        if (k > 0) {
            const Eigen::Index m = k + (cap ? 1 : 0);
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m, m);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
            for (Eigen::Index a = 0; a < k; ++a) {
                rhs(a) = -g(f[static_cast<std::size_t>(a)]);
                for (Eigen::Index b = 0; b < k; ++b)
                    kkt(a, b) = h(f[static_cast<std::size_t>(a)], f[static_cast<std::size_t>(b)]);
                if (cap) kkt(a, k) = kkt(k, a) = 1.0;
            }
            const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            for (Eigen::Index a = 0; a < k; ++a) p(f[static_cast<std::size_t>(a)]) = sol(a);
        }

        if (p.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
            double mu = 0.0;  // multiplier of the cap
            if (cap) {
                for (auto i : f) mu -= g(i);
                mu /= static_cast<double>(k);
            }
            double worst = 0.0, stationarity = 0.0;
            Eigen::Index release = -1;
            bool release_cap = false;
            for (auto i : f) stationarity = std::max(stationarity, std::abs(g(i) + mu));
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!bound[static_cast<std::size_t>(i)]) continue;
                const double lam = g(i) + mu;
                if (lam < worst) worst = lam, release = i, release_cap = false;
            }
            if (cap && mu < worst) worst = mu, release = -1, release_cap = true;
            if (worst >= -tol_s) return {x, it + 1, std::max(stationarity, -worst) / scale, cap};
            if (release_cap)
                cap = false;
            else
                bound[static_cast<std::size_t>(release)] = false;
            continue;
        }

        double alpha = 1.0;
        Eigen::Index block = -1;
        bool block_cap = false;
        for (auto i : f) {
            if (p(i) < 0.0) {
                const double a = -x(i) / p(i);
                if (a < alpha) alpha = a, block = i, block_cap = false;
            }
        }
        if (!cap) {
            const double ps = p.sum();
            if (ps > 0.0) {
                const double a = std::max(0.0, 1.0 - x.sum()) / ps;
                if (a < alpha) alpha = a, block = -1, block_cap = true;
            }
        }
        x += alpha * p;
        if (block >= 0) {
            bound[static_cast<std::size_t>(block)] = true;
            x(block) = 0.0;
        } else if (block_cap) {
            cap = true;
        }
        for (Eigen::Index i = 0; i < n; ++i)
            if (x(i) < 0.0) x(i) = 0.0;
    }
    throw NumericalError("population fit: active-set solver did not converge");
}

inline Eigen::VectorXd shot_weights(const ReadoutDataset& d) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(d.excited.size()));
    for (std::size_t i = 0; i < d.excited.size(); ++i) {
        // shrunk estimate keeps the variance positive at 0 and 1
        const double p = (d.excited[i] * d.shots + 0.5) / (d.shots + 1.0);
        w(static_cast<Eigen::Index>(i)) = d.shots / (p * (1.0 - p));
    }
    return w / w.maxCoeff();
}

}  // namespace detail

/// min sum_t w_t (model(t) - data(t))^2 over P_1..P_nmax with P_n >= 0, sum <= 1.
inline FitResult fit_populations(const ReadoutDataset& d, const SidebandModel& m, const FitOptions& opt = {}) {
    d.validate();
    m.validate();
    if (d.times.size() < static_cast<std::size_t>(m.n_max))
        throw ValidationError("fit_populations: fewer probe times than fitted populations");
    const Eigen::MatrixXd a = design_matrix(m, d.times);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.excited.data(), static_cast<Eigen::Index>(d.excited.size()));
    Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
    if (opt.weighted) w = detail::shot_weights(d);
    const Eigen::MatrixXd aw = w.cwiseSqrt().asDiagonal() * a;
    const Eigen::VectorXd yw = w.cwiseSqrt().cwiseProduct(y);

    const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(aw).singularValues();
    const double smin = sv(sv.size() - 1);

    const auto qp = detail::capped_nonneg_qp(aw.transpose() * aw, aw.transpose() * yw, opt.tolerance, opt.max_iterations);

    FitResult r;
    r.populations.assign(static_cast<std::size_t>(m.n_max) + 1, 0.0);
    double s = 0.0;
    for (int n = 1; n <= m.n_max; ++n) {
        r.populations[static_cast<std::size_t>(n)] = qp.x(n - 1);
        s += qp.x(n - 1);
    }
    if (s > 1.0) {  // rounding on the cap
        for (int n = 1; n <= m.n_max; ++n) r.populations[static_cast<std::size_t>(n)] /= s;
        s = 1.0;
    }
    r.populations[0] = 1.0 - s;
    r.residual_norm = (aw * qp.x - yw).norm();
    r.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    r.kkt_residual = qp.kkt;
    r.iterations = qp.iterations;
    r.cap_active = qp.cap;
    r.weighted = opt.weighted;
    return r;
}

struct BootstrapResult {
    std::vector<double> mean, stddev, p16, p84;  // per n = 0..n_max
    int resamples = 0;
    bool degenerate = false;
    std::vector<std::string> diagnostics;
};

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw ValidationError("percentile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Parametric binomial bootstrap: shots are redrawn from the fitted curve, then refit.
inline BootstrapResult bootstrap(const ReadoutDataset& d, const SidebandModel& m, int resamples, std::uint64_t seed,
                                 const FitOptions& opt = {}) {
    if (resamples < 1) throw ValidationError("bootstrap: resamples must be >= 1");
    const auto base = fit_populations(d, m, opt);
    auto curve = synthesize_signal(base.populations, m, d.times);

    const std::size_t nc = base.populations.size();
    std::vector<std::vector<double>> samples(nc, std::vector<double>(static_cast<std::size_t>(resamples)));
    for (int r = 0; r < resamples; ++r) {
        auto rng = stream_rng(seed, static_cast<std::uint64_t>(r) + 1);
        const auto fit = fit_populations(detail::draw(curve, d.times, d.shots, rng), m, opt);
        for (std::size_t n = 0; n < nc; ++n) samples[n][static_cast<std::size_t>(r)] = fit.populations[n];
    }

    BootstrapResult b;
    b.resamples = resamples;
    for (std::size_t n = 0; n < nc; ++n) {
        const auto& v = samples[n];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= resamples;
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        b.mean.push_back(mean);
        b.stddev.push_back(resamples > 1 ? std::sqrt(var / (resamples - 1)) : 0.0);
        b.p16.push_back(percentile(v, 0.16));
        b.p84.push_back(percentile(v, 0.84));
    }
    if (resamples == 1) {
        b.degenerate = true;
        b.diagnostics.emplace_back("single resample: intervals have zero width");
    }
    return b;
}

/// Smallest n_max whose tail P(n > n_max) is below `tail`.
inline int choose_n_max(const std::vector<double>& p, double tail = 1e-3) {
    double rest = 0.0;
    for (double x : p) rest += x;
    for (std::size_t n = 0; n < p.size(); ++n) {
        rest -= p[n];
        if (n >= 1 && rest < tail) return static_cast<int>(n);
    }
    return std::max<int>(1, static_cast<int>(p.size()) - 1);
}

inline void write_dataset_csv(std::ostream& os, const ReadoutDataset& d) {
    d.validate();
    os << "t,excited_fraction,shots\n" << std::setprecision(17);
    for (std::size_t i = 0; i < d.times.size(); ++i) os << d.times[i] << ',' << d.excited[i] << ',' << d.shots << '\n';
}

inline ReadoutDataset read_dataset_csv(std::istream& is) {
    ReadoutDataset d;
    d.shots = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("t,", 0) == 0) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
            throw ValidationError("dataset csv line " + std::to_string(lineno) + ": expected t,excited_fraction,shots");
        try {
            d.times.push_back(std::stod(a));
            d.excited.push_back(std::stod(b));
            const int s = std::stoi(c);
            if (d.shots != 0 && s != d.shots)
                throw ValidationError("dataset csv line " + std::to_string(lineno) + ": shots differ between rows");
            d.shots = s;
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const ValidationError*>(&e)) throw;
            throw ValidationError("dataset csv line " + std::to_string(lineno) + ": not a number");
        }
    }
    d.validate();
    return d;
}

/// Rows n,P_n,sigma_n; sigma is the bootstrap standard deviation when given, else 0.
inline void write_fit_csv(std::ostream& os, const FitResult& f, const BootstrapResult* b = nullptr) {
    os << "n,P_n,sigma_n\n" << std::setprecision(12);
    for (std::size_t n = 0; n < f.populations.size(); ++n)
        os << n << ',' << f.populations[n] << ',' << (b ? b->stddev.at(n) : 0.0) << '\n';
}

}  // namespace hybridsim
