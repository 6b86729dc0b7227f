"""Sanity run on three unit edges with q = 0.

Everything is known in closed form: lambda_1 = (pi/2)^2, the Dirichlet-Dirichlet
roots are k pi, the Dirichlet-Neumann roots (k - 1/2) pi, omega = 0, and the
recovered potentials vanish.  Equal edge lengths make most eigenvalues
multiple, which exercises the degenerate branch of the direct solver.
"""

import math

import numpy as np

from stargraph_isp import generate_spectral_data, make_demo_graph, run_inverse_pipeline


def main():
    graph = make_demo_graph("zero")
    data = generate_spectral_data(graph, 100)
    print(f"lambda_1 = {data.lam[0]:.15f}, (pi/2)^2 = {(math.pi / 2) ** 2:.15f}")
    print(f"degenerate data: {data.degenerate}")
    result = run_inverse_pipeline(data, graph.lengths)
    k = np.arange(1, 11)
    for i, (rec, ts) in enumerate(zip(result.potentials, result.spectra)):
        print(f"edge {i + 1}: |mu - k pi| {np.max(np.abs(ts.mu[:10] - k * math.pi)):.1e}, "
              f"|nu - (k-1/2) pi| {np.max(np.abs(ts.nu[:10] - (k - 0.5) * math.pi)):.1e}, "
              f"omega {ts.omega:.1e}, max |q| {np.max(np.abs(rec.q.values)):.1e}")


if __name__ == "__main__":
    main()
