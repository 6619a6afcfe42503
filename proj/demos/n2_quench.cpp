// N=2 quench: Trotter circuit vs continuous evolution, mode-1 Fock populations.

#include <cstdio>

#include "hybridsim/evolution.hpp"

using namespace hybridsim;

int main() {
    ModelParams p;
    p.n_sites = 2;
    p.boson_mass = 1.5;
    p.coupling = 4.0;
    p.cutoffs = {15, 15};
    p.trotter_dt = 0.5;
    p.trotter_steps = 12;

    const auto plan = plan_n2(p);
    const auto run = run_trotter(plan, vacuum_state(plan_layout(plan, p.cutoffs)));
    const auto reduced = project_to_sector(build_full_hamiltonian(p), SectorMap::standard(p));
    const Layout l(1, p.cutoffs);
    ExactPropagator exact(realize_matrix(reduced, l));

    std::printf("   t   <N1> trotter  <N1> exact   P1(8) trotter  P1(8) exact\n");
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        const auto s = exact.evolve(vacuum_state(l), run.times[k]);
        std::printf("%5.1f  %12.5f  %10.5f  %13.2e  %11.2e\n", run.times[k], mean_occupation(run.snapshots[k], 1),
                    mean_occupation(s, 1), mode_marginal(run.snapshots[k], 1)[8], mode_marginal(s, 1)[8]);
    }
    for (const auto& w : run.warnings) std::printf("warning: %s\n", w.c_str());
}
