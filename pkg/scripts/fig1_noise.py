"""Echo scatter under slow field noise for Hahn, CDD2-XYXY and CDD4-XYXY.

Writes one CSV block per sequence to stdout.

    python3 scripts/fig1_noise.py --shots 200 > noise.csv
"""
import argparse
import sys

import numpy as np

from ddsim import sequences as seqs
from ddsim.noise import NoiseParams, decay_scan, rows_to_csv
from ddsim.pulses import paper_config

SEQUENCES = (("CPMG", "periodic", 1), ("XYXY", "concatenated", 2), ("XYXY", "concatenated", 4))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=200)
    ap.add_argument("--amplitude-nt", type=float, default=50.0, help="nT/sqrt(Hz) at 10 Hz")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--pulse-errors", action="store_true")
    args = ap.parse_args()

    cfg = paper_config() if args.pulse_errors else paper_config().with_zero_errors()
    rng = np.random.default_rng(args.seed)
    totals = [0.25e-3, 0.5e-3, 1e-3, 2e-3, 4e-3, 8e-3]
    for fam, con, size in SEQUENCES:
        probe = seqs.build(fam, con, size, 1.0)
        n_p, n_d = seqs.pulse_count(probe), seqs.delay_count(probe)
        taus = [(t - n_p * cfg.t_pulse) / n_d for t in totals if t > n_p * cfg.t_pulse]
        rows = decay_scan(fam, con, size, taus, NoiseParams(1e-9 * args.amplitude_nt),
                          args.shots, cfg, rng)
        sys.stdout.write(rows_to_csv(rows, f"# sequence={fam}:{con}:{size}\n"))


if __name__ == "__main__":
    main()
