"""
Marching the invariant heat scheme on an evolving mesh.

Both closed-form lattice solutions (exponential and source type) are
reproduced by the explicit update to rounding error when the time step stays
inside the explicit stability range. A step of tau/h^2 = 1 on the same data
shows how quickly rounding is amplified beyond it.
"""
import numpy as np

from _plot import figure, save
from symm import schemes as S
from symm.solvers import BoundaryPolicy, interior_residuals, march_heat


def run(sol, tau, n_steps, n_nodes=50):
    layer = sol.sample(np.zeros(n_nodes, dtype=int), np.arange(n_nodes))
    res = march_heat(layer[:, 0], layer[:, 2], layer[0, 1], tau, n_steps, BoundaryPolicy.trace(sol))
    exact = sol.grid(np.arange(n_steps + 1), np.arange(n_nodes)).coords
    return res.grid, float(np.max(np.abs(res.grid.coords - exact)))


def main():
    scheme = S.heat_scheme()
    for tau in (0.004, 0.01):
        for name, make in (("exponential", S.heat_exponential_solution), ("source", S.heat_source_solution)):
            sol = make(h=0.1, tau=tau, x0=-2.5)
            try:
                grid, err = run(sol, tau, 30)
                r = float(np.max(np.abs(interior_residuals(scheme, grid))))
                print(f"tau={tau:<6} {name:<12} max error {err:.2e}  max residual {r:.2e}")
            except Exception as exc:  # noqa: BLE001
                print(f"tau={tau:<6} {name:<12} {type(exc).__name__}: {exc}")

    grid, _ = run(S.heat_source_solution(h=0.1, tau=0.004, x0=-2.5), 0.004, 50)
    fig, ax = figure("heat_mesh")
    if ax is not None:
        c = grid.coords
        for n in range(0, c.shape[1], 2):
            ax.plot(c[:, n, 0], c[:, n, 1], lw=0.6, color="k")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        ax.set_title("node trajectories of the source-type solution")
        save(fig, "heat_mesh.png")


if __name__ == "__main__":
    main()
