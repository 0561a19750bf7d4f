"""Render every built-in solid at its default fuzziness.

    python scripts/render_gallery.py --out gallery --iterations 1e7

Writes ``<solid>.pgm`` plus a manifest per image; each image can be
regenerated bit for bit with ``qfractal render --from-manifest``.
"""
import argparse
from pathlib import Path

from qfractal import cli, detectors


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("gallery"))
    ap.add_argument("--iterations", default="1e7")
    ap.add_argument("--size", default="1024")
    ap.add_argument("--projection", default="ortho_north")
    ap.add_argument("--tonemap", default="log")
    ap.add_argument("--seed", default="0")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in detectors.BUILTIN_NAMES:
        code = cli.main(["render", "--solid", name, "--iterations", args.iterations,
                         "--width", args.size, "--height", args.size,
                         "--projection", args.projection, "--tonemap", args.tonemap,
                         "--seed", args.seed, "-o", str(args.out / f"{name}.pgm")])
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
