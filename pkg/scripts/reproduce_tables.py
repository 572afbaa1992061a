"""Run every adapter over the bundled corpus (plus any extra files) and write
the comparison CSV and byte histograms.

    python3 scripts/reproduce_tables.py --out results/ [extra files ...]
"""

import argparse
import time
from pathlib import Path

from pct.adapters import ADAPTERS, get_adapter
from pct.metrics import analyze, append_reports_csv
from pct.rng import RandomSource

CORPUS = Path(__file__).resolve().parents[1] / "src" / "pct" / "corpus"
DEFAULT_ADAPTERS = [a for a in ("pct", "tdes", "aes", "ideal") if a in ADAPTERS]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="*", type=Path)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--adapters", nargs="+", default=DEFAULT_ADAPTERS)
    ap.add_argument("--trials", type=int, default=128)
    ap.add_argument("--pairs", type=int, default=10_000)
    ap.add_argument("--repetitions", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    files = sorted(CORPUS.iterdir()) + args.files
    args.out.mkdir(parents=True, exist_ok=True)
    hist_dir = args.out / "histograms"
    hist_dir.mkdir(exist_ok=True)
    csv_path = args.out / "metrics.csv"
    csv_path.unlink(missing_ok=True)

    t0 = time.perf_counter()
    for path in files:
        data = path.read_bytes()
        for name in args.adapters:
            rep = analyze(get_adapter(name), data, file_name=path.name, trials=args.trials,
                          pair_sample=args.pairs, repetitions=args.repetitions,
                          rng=RandomSource(args.seed))
            append_reports_csv([rep], csv_path)
            rep.extra["cipher_hist"].to_csv(hist_dir / f"{path.name}.{name}.csv")
            r = rep.row()
            print(f"{path.name:16s} {name:6s} ava {r['avalanche']} sac {r['strict_avalanche']} "
                  f"bic {r['bit_independence']} chi2 {r['chi_square']:>14s} "
                  f"enc {r['encrypt_mb_s']} MB/s")
        byte_src = rep.extra["source_hist"]
        byte_src.to_csv(hist_dir / f"{path.name}.source.csv")
    print(f"wrote {csv_path} in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
