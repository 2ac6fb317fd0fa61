"""Assemble the cycle Hamiltonian and inspect its zero mode.

H = H_C + H_L + L_E: a vertex penalty counting degree violations, a
plaquette penalty for contractible local loops, and the Laplacian of the
local-move graph.  The sum is frustration free, so the unique ground
state is the uniform superposition over Hamiltonian cycles at energy
exactly zero, and every single term annihilates it on its own.
"""

import numpy as np

from gridcycles import LatticeShape, enumerate_cycles, ground_state, sector_spectra
from gridcycles.exact import assemble_hhc, iter_local_terms


def main():
    shape = LatticeShape(4, 4)
    h = assemble_hhc(shape)
    print(f"{shape}: dim {h.dim}, {h.matrix.nnz} stored entries")

    evals, evecs = ground_state(h, k=4)
    print("lowest eigenvalues:", np.array2string(evals, precision=6))
    vec = evecs[:, 0]
    vec *= np.sign(vec.sum())

    cycles = list(enumerate_cycles(shape))
    print(f"|X| = {len(cycles)} cycles, 1/sqrt(|X|) = {1 / np.sqrt(len(cycles)):.8f}")
    print("ground amplitudes on the cycle set:",
          np.array2string(vec[cycles], precision=8))

    worst = max(np.linalg.norm(term.matrix @ vec)
                for _, term in iter_local_terms(shape))
    print(f"worst per-term residual on the ground state: {worst:.2e}")

    # Sector-resolved guarantees: every move-connected class is checked
    # against its spectral bound, and violating classes sit at >= 1.
    report = sector_spectra(shape)
    print(f"\n{len(report.sectors)} move-connected sectors, "
          f"gap {report.gap:.4f} >= bound {report.global_gap_bound:.6f}")
    for s in report.sectors[:6]:
        print(f"  {s.label:<28s} size {s.size:>3d}  min eig {s.min_eig:.4f}")
    print("  ...")


if __name__ == "__main__":
    main()
