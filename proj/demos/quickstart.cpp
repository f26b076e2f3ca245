// Minimal tour: integrate the benchmark flow, look at the timescale split,
// and solve the fast-equilibrium map at one point.
#include <iostream>

#include "cogflow/experiments.hpp"

int main() {
    using namespace cogflow;

    const Potential potential = cubic_benchmark();
    const double epsilon = 0.2;

    FlowSystem system{potential, BlockAnisotropicMetric{epsilon, potential.partition}};
    State start;
    start.coords = (Eigen::VectorXd(2) << 1.5, -1.0).finished();

    IntegratorConfig config;
    config.t_end = 20.0;
    Trajectory traj = integrate(system, start, config);

    const BlockSpeeds speeds = mean_speed_by_block(traj, potential.partition);
    std::cout << "final state: h=" << traj.states.back()[0]
              << " c=" << traj.states.back()[1] << "\n";
    std::cout << "mean |dh/dt| = " << speeds.mean_fast
              << ", mean |dc/dt| = " << speeds.mean_slow << "\n";

    const auto eq = solve_fast_equilibrium(potential, traj.states.back().tail(1),
                                           traj.states.back().head(1));
    std::cout << "fast equilibrium at c=" << eq.slow[0] << ": h*=" << eq.h_star[0]
              << " (stability margin " << eq.stability_margin << ")\n";

    const ScalingResult scaling = run_timescale_scaling();
    std::cout << "slow-speed scaling exponent: " << scaling.slow_slope << "\n";
    return 0;
}
