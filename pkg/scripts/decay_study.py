"""Per-layer energy decay of the multiscale basis and the spectral gap, for several contrasts."""

import argparse

import numpy as np

from msexpint.cem import build_basis
from msexpint.grid import build_grids
from msexpint.problems import paper_field
from msexpint.spectral import build_auxiliary


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-fine", type=int, default=64)
    ap.add_argument("--coarse", type=int, default=8)
    ap.add_argument("--layers", type=int, default=4)
    ap.add_argument("--basis", type=int, default=4)
    args = ap.parse_args()
    fine, coarse, pou = build_grids(args.n_fine, args.coarse)
    for contrast in (1e2, 1e4, 1e6):
        kappa = paper_field(1, fine, contrast)
        aux = build_auxiliary(fine, coarse, pou, kappa, args.basis)
        b = build_basis(fine, coarse, aux, kappa, args.layers)
        worst = b.decay.max(axis=0)
        print(f"contrast {contrast:.0e}: gap {aux.gap:.3f}, max ratio {np.nanmax(b.decay_ratios()):.3e}")
        print("   max energy fraction outside K_l: " + " ".join(f"{v:.2e}" for v in worst))


if __name__ == "__main__":
    main()
