// Sideband readout of a simulated Fock distribution: synthesize, sample, fit, bootstrap.

#include <cstdio>

#include "hybridsim/readout.hpp"

using namespace hybridsim;

int main() {
    // thermal-like distribution with mean ~1.2
    std::vector<double> p;
    const double r = 1.2 / 2.2;
    for (int n = 0; n <= 12; ++n) p.push_back((1 - r) * std::pow(r, n));

    SidebandModel m;
    m.n_max = choose_n_max(p);
    const auto t = default_probe_times(m);
    const auto data = sample_shots(synthesize_signal(p, m, t), t, 1000, 2024);
    const auto fit = fit_populations(data, m);
    const auto boot = bootstrap(data, m, 200, 7);

    std::printf("n_max=%d  residual=%.4f  condition=%.2f\n", m.n_max, fit.residual_norm, fit.condition);
    std::printf(" n   true     fit      sigma\n");
    for (int n = 0; n <= m.n_max; ++n)
        std::printf("%2d  %.4f  %.4f  %.4f\n", n, p[static_cast<std::size_t>(n)], fit.populations[static_cast<std::size_t>(n)],
                    boot.stddev[static_cast<std::size_t>(n)]);
}
