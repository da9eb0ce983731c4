"""Balancing density and geometric distortion.

On a cube with region-weighted populations, the pure density flow equalizes
volume at the cost of badly sheared tets; the combined flow adds a geometric
descent term and a per-tet ratio cap, trading a slightly looser density for a
far tighter anisotropy distribution.
"""

import volball as vb
from volball.synthetic import cube_mesh, octant_population

mesh = cube_mesh(8)
config = vb.SolverConfig(eps=5e-3, n_max=150)

print(f"cube: {len(mesh.tets)} tets; four dense and four sparse octants (4:1)")
print("seed   method   var(rho)    mean K    sd K   folds")
for seed in range(3):
    population = octant_population(mesh, seed=seed, low=1.0, high=4.0)
    for method in ("3ddem", "3ddeq"):
        final = vb.run_method(method, mesh, population, config).report.final
        print(f"{seed:4d}   {method}   {final['var_rho']:.6f}   "
              f"{final['mean_K']:8.3f}   {final['sd_K']:6.2f}   {final['folds']}")

print()
print("the combined flow keeps sd(K) small where the pure flow lets a few")
print("tets shear freely; both equalize the density variance below 1e-2")
