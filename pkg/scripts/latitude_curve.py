"""Tabulate the latitude map theta -> theta' for jumps toward the north pole,
and the colatitude where meridians switch from shrinking to stretching.

    python scripts/latitude_curve.py --epsilon 0.95 > curve.csv
"""
import argparse
import math

import numpy as np

from qfractal.geometry import equilibrium_latitude, latitude_shift


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=0.95)
    ap.add_argument("--samples", type=int, default=181)
    args = ap.parse_args()
    theta = np.linspace(0.0, math.pi, args.samples)
    shifted = latitude_shift(args.epsilon, theta)
    print("theta_deg,theta_prime_deg,difference_deg")
    for t, s in zip(np.degrees(theta), np.degrees(shifted)):
        print(f"{t:.3f},{s:.6f},{t - s:.6f}")
    eq = equilibrium_latitude(args.epsilon)
    print(f"# largest pull at {math.degrees(eq):.3f} deg (z = -{args.epsilon})")


if __name__ == "__main__":
    main()
