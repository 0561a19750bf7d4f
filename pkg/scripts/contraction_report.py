"""Per-detector Fubini-Study distance ratios d(F r, F s) / d(r, s).

    python scripts/contraction_report.py --solid tetrahedron --epsilon 0.5

Ratios above 1 show that no single map is a contraction everywhere.
"""
import argparse

from qfractal import analysis, detectors


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--solid", default="tetrahedron", choices=detectors.BUILTIN_NAMES)
    ap.add_argument("--epsilon", type=float, default=None)
    ap.add_argument("--samples", type=int, default=10 ** 5)
    ap.add_argument("--max-separation", type=float, default=0.05,
                    help="radians between paired states; 0 for independent pairs")
    args = ap.parse_args()
    cfg = detectors.builtin(args.solid)
    eps = cfg.default_epsilon if args.epsilon is None else args.epsilon
    stats = analysis.contraction_statistics(cfg, eps, args.samples,
                                            max_separation=args.max_separation or None)
    print(f"{cfg.name} eps={eps} pairs={stats.ratios.shape[1]}")
    print("detector      min   median      max  frac>1")
    for i, lo, med, hi, frac in stats.summary():
        print(f"{i:8d} {lo:8.4f} {med:8.4f} {hi:8.4f} {frac:7.3f}")
    print(f"expands somewhere: {stats.expands_somewhere}  contracts somewhere: "
          f"{stats.contracts_somewhere}")


if __name__ == "__main__":
    main()
