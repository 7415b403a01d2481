"""Tour of the three dynamical phases of the driven collective spin.

The magnetization of N collectively-decaying spins obeys a closed set of
mean-field equations in the large-N limit.  Depending on the drive-to-
decay ratio omega/kappa the flow either relaxes to a stationary point
(omega < kappa), sits at the critical point (omega = kappa), or settles
onto a persistent orbit -- the boundary time crystal (omega > kappa).

Run:  python demos/01_meanfield_phases.py
"""

import numpy as np

from btckur import meanfield


def main():
    kappa, tau = 1.0, 50.0
    for omega in (0.5, 1.0, 1.5):
        p = meanfield.ModelParams(omega=omega, kappa=kappa, n_spins=2,
                                  tau=tau, dt=1e-3)
        traj = meanfield.integrate_mean_field([0.0, 0.0, 1.0], p)
        m_end = traj.m[-1]
        drift = np.max(np.abs(np.linalg.norm(traj.m, axis=1) - 1.0))
        print(f"omega/kappa = {omega:g}")
        print(f"  final magnetization m = ({m_end[0]:+.4f}, {m_end[1]:+.4f}, "
              f"{m_end[2]:+.4f}),  |m| drift over the run: {drift:.1e}")
        if omega < kappa:
            target = (0.0, omega / kappa, -np.sqrt(1 - (omega / kappa) ** 2))
            err = np.linalg.norm(m_end - target)
            print(f"  stationary phase: distance to the analytical fixed point "
                  f"(0, {target[1]:g}, {target[2]:.4f}) is {err:.2e}")
        else:
            period = meanfield.find_period(traj)
            if period:
                print(f"  persistent oscillation with period {period:.3f} "
                      "(boundary time crystal)" if omega > kappa else
                      f"  marginal oscillation with period {period:.3f} "
                      "(critical point)")
            else:
                print("  no recurrence detected")
        print()


if __name__ == "__main__":
    main()
