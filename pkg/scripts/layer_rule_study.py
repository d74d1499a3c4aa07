"""Energy error of the coarse-mesh sweep under the two layer-rounding rules.

With the floor rule H = 1/4 and H = 1/8 both get two layers; the nearly global
patches at H = 1/4 then beat the localized ones at H = 1/8 and the sweep is not
monotone.  The ceiling rule adds one layer and restores the trend.
"""

import argparse

from msexpint.config import ExperimentConfig
from msexpint.experiment import Experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-fine", type=int, default=128)
    ap.add_argument("--contrast", type=float, default=100.0)
    args = ap.parse_args()
    coarse = [2, 4, 8, 16]
    cfg = ExperimentConfig(example=1, n_fine=args.n_fine, coarse=coarse, contrast=args.contrast,
                           nt=[200], nt_ref=1000).validate()
    exp = Experiment(cfg)
    for rounding in ("floor", "ceil"):
        exp.cfg.layer_rounding = rounding
        cells = []
        for N in coarse:
            m = exp.layers_for(N)[0]
            row = exp.run_row(N, m, "EIRK1", 200)[0]
            cells.append(f"1/{N}(m={m}) {row.eps_a:.3e}")
        print(f"{rounding:>5}: " + "  ".join(cells))


if __name__ == "__main__":
    main()
