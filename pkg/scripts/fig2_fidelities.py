"""Fidelity versus sequence length for XZXZ and XYXY, periodic and concatenated.

    python3 scripts/fig2_fidelities.py --samples 20000 --seed 42
"""
import argparse

from ddsim import sequences as seqs
from ddsim.engine import ensemble_fidelity
from ddsim.pulses import paper_config
from ddsim.su2 import CARDINAL_STATES


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--max-size", type=int, default=4)
    args = ap.parse_args()

    cfg = paper_config()
    print(f"{'family':6} {'construction':13} {'size':>4} {'pulses':>6}  "
          + "  ".join(f"{s:>7}" for s in CARDINAL_STATES))
    for family in seqs.FAMILIES:
        for construction in ("periodic", "concatenated"):
            for size in range(1, args.max_size + 1):
                prog = seqs.build(family, construction, size, cfg.tau)
                row = [ensemble_fidelity(prog, cfg, s, args.samples, args.seed).normalized_fidelity
                       for s in CARDINAL_STATES.values()]
                print(f"{family:6} {construction:13} {size:>4} {seqs.pulse_count(prog):>6}  "
                      + "  ".join(f"{f:7.4f}" for f in row))
    prog = seqs.cancel_adjacent_identical(seqs.build_concatenated("XYXY", args.max_size, cfg.tau))
    f = ensemble_fidelity(prog, cfg, CARDINAL_STATES["SZ"], args.samples, args.seed)
    print(f"CDD-XYXY{args.max_size} with adjacent pulses cancelled ({seqs.pulse_count(prog)} pulses): "
          f"S_Z {f.normalized_fidelity:.4f}")


if __name__ == "__main__":
    main()
