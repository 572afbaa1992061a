"""Command line entry point: ``pct keygen|encrypt|decrypt|analyze|inspect``."""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .adapters import ADAPTERS, get_adapter
from .errors import (CorruptContainer, CorruptKey, EmptyInput, FormatError, KeyFileMismatch,
                     UnknownFormat)
from .keygen import KEY_MAGIC, SessionKey, generate_session_key, sequence_mass
from .metrics import DEFAULT_PAIRS, analyze, append_reports_csv
from .rng import RandomSource, seed_from_hex
from .stream_codec import CONTAINER_MAGIC, HEADER_SIZE, decrypt_stream, encrypt_stream, parse_header

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_KEY_MISMATCH = 3
EXIT_CORRUPT = 4
EXIT_UNKNOWN_FORMAT = 5
EXIT_EMPTY = 6
EXIT_IO = 7


class UsageError(Exception):
    pass


def _readable_file(path: str) -> Path:
    p = Path(path)
    if p.is_dir():
        raise UsageError(f"{path}: is a directory, expected a file")
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return p


def _rng(args) -> RandomSource:
    return RandomSource(args.seed) if args.seed is not None else RandomSource()


@contextmanager
def _atomic_output(path: str):
    """Yield a binary handle whose contents replace ``path`` only on success."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            yield fh
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _summary(key: SessionKey) -> str:
    parts = [f"{count}x{1 << (e - 1)}B" for e, count in sorted(key.histogram().items())]
    return " ".join(parts)


def cmd_keygen(args) -> int:
    src = _readable_file(args.input)
    length = src.stat().st_size
    if length == 0:
        raise EmptyInput(f"{args.input}: empty file, nothing to key")
    key = generate_session_key(length, _rng(args))
    with _atomic_output(args.out) as fh:
        fh.write(key.to_bytes())
    print(f"key: {args.out}  length: {length} bytes  blocks: {len(key)}")
    print(f"partition: {_summary(key)}")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    src = _readable_file(args.input)
    key = SessionKey.load(_readable_file(args.key))
    length = src.stat().st_size
    t0 = time.perf_counter()
    with open(src, "rb") as fin, _atomic_output(args.out) as fout:
        encrypt_stream(fin, fout, key, pad=args.pad, length=length)
    dt = time.perf_counter() - t0
    print(f"encrypted {length} bytes in {dt:.3f} s -> {args.out}")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    src = _readable_file(args.input)
    key = SessionKey.load(_readable_file(args.key))
    t0 = time.perf_counter()
    with open(src, "rb") as fin, _atomic_output(args.out) as fout:
        n = decrypt_stream(fin, fout, key)
    dt = time.perf_counter() - t0
    print(f"decrypted {n} bytes in {dt:.3f} s -> {args.out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        adapter = get_adapter(args.adapter)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    paths = [_readable_file(p) for p in args.inputs]
    if args.histograms:
        Path(args.histograms).mkdir(parents=True, exist_ok=True)
    rng = _rng(args)
    reports = []
    for path in paths:
        data = path.read_bytes()
        if not data:
            raise EmptyInput(f"{path}: empty file")
        rep = analyze(adapter, data, file_name=path.name, trials=args.trials,
                      pair_sample=args.pairs, repetitions=args.repetitions, rng=rng,
                      fresh_keys=False if args.fixed_key else None)
        reports.append(rep)
        row = rep.row()
        print(f"{row['file_name']} ({row['file_size']} B) [{row['adapter']}, {row['key_policy']} keys] "
              f"enc {row['encrypt_s']}s dec {row['decrypt_s']}s "
              f"avalanche {row['avalanche']} sac {row['strict_avalanche']} "
              f"bic {row['bit_independence']} chi2 {row['chi_square']}")
        if args.histograms:
            stem = Path(args.histograms) / f"{path.name}.{adapter.name}"
            rep.extra["source_hist"].to_csv(f"{stem}.source.csv")
            rep.extra["cipher_hist"].to_csv(f"{stem}.cipher.csv")
    if args.csv:
        append_reports_csv(reports, args.csv)
    return EXIT_OK


def cmd_inspect(args) -> int:
    data = _readable_file(args.path).read_bytes()
    magic = data[:4]
    if magic == KEY_MAGIC:
        key = SessionKey.from_bytes(data)
        mass = sequence_mass(key.exponents)
        print("format: PCTK key, version 1")
        print(f"original_len: {key.original_len}")
        print(f"blocks: {len(key)}")
        for e, count in sorted(key.histogram().items()):
            print(f"  exponent {e:2d} ({1 << (e - 1)} B): {count}")
        status = "OK" if mass == key.original_len else "MISMATCH"
        print(f"mass {status}: sum 2^(e-1) = {mass}")
        print(f"digest: {key.digest.hex()}")
        return EXIT_OK if status == "OK" else EXIT_CORRUPT
    if magic == CONTAINER_MAGIC:
        length = parse_header(data[:HEADER_SIZE])
        print("format: PCTC container, version 1")
        print(f"original_len: {length}")
        print(f"payload: {len(data) - HEADER_SIZE}")
        return EXIT_OK
    raise UnknownFormat(f"{args.path}: unrecognised magic {magic!r}", offset=0)


def _seed(text: str) -> bytes:
    try:
        return seed_from_hex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pct", description="Permutated Cipher Technique tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a session key for a file")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="key file to write")
    p.add_argument("--seed", type=_seed, help="hex seed (up to 32 bytes) for reproducible keys")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", help="encrypt a file into a PCTC container")
    p.add_argument("input")
    p.add_argument("--key", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pad", action="store_true", help="zero-pad when the key covers more than the file")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt a PCTC container")
    p.add_argument("input")
    p.add_argument("--key", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("analyze", help="avalanche/SAC/BIC/chi-square/timing report")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--adapter", default="pct", help=f"one of: {', '.join(sorted(ADAPTERS))}")
    p.add_argument("--trials", type=int, default=128)
    p.add_argument("--pairs", type=int, default=DEFAULT_PAIRS)
    p.add_argument("--repetitions", type=int, default=3, help="timing repetitions (median)")
    p.add_argument("--csv", help="append one row per file to this CSV")
    p.add_argument("--histograms", metavar="DIR", help="write byte histogram CSVs here")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--fixed-key", action="store_true",
                   help="hold one key for all trials instead of the adapter's default")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("inspect", help="describe a key file or container")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "analyze" and (args.trials < 2 or args.pairs < 1 or args.repetitions < 1):
        parser.error("--trials must be >= 2, --pairs and --repetitions >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pct {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyFileMismatch as exc:
        print(f"pct: key mismatch: {exc}", file=sys.stderr)
        return EXIT_KEY_MISMATCH
    except UnknownFormat as exc:
        print(f"pct: unknown format: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_FORMAT
    except (CorruptContainer, CorruptKey, FormatError) as exc:
        print(f"pct: corrupt input: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except EmptyInput as exc:
        print(f"pct: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except OSError as exc:
        print(f"pct: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
