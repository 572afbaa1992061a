"""Avalanche, strict avalanche, bit independence, chi-square and timing.

All estimators share one trial loop: encrypt the plaintext once, then for
each trial flip one random plaintext bit, encrypt again and record which
ciphertext bits changed.  Ciphers flagged ``session_keys`` get a freshly
generated key for every encryption (their intended use); pass
``fresh_keys=False`` to hold one key for the whole run instead.

Estimator choices, also recorded in every report:

* strict avalanche looks at the first ``window_bytes`` (64 KiB) of the
  ciphertext, and subtracts the binomial sampling variance of each flip
  frequency so a perfect cipher scores 1 regardless of the trial count;
* bit independence averages the absolute Pearson correlation of change
  indicators over ``pair_sample`` random bit pairs from the same window;
* chi-square skips byte values that never occur in the source.
"""

from __future__ import annotations

import csv
import math
import os
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adapters import CipherAdapter
from .errors import EmptyInput
from .rng import RandomSource

WINDOW_BYTES = 64 * 1024
DEFAULT_PAIRS = 10_000
CHI2_CRITICAL_DF255 = 293.25  # alpha = 0.05

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def hamming_distance(a: bytes, b: bytes) -> int:
    """Differing bits over the common prefix of ``a`` and ``b``."""
    n = min(len(a), len(b))
    x = np.frombuffer(a, dtype=np.uint8, count=n) ^ np.frombuffer(b, dtype=np.uint8, count=n)
    return int(_POPCOUNT[x].sum())


def flip_bit(data: bytes, index: int) -> bytes:
    """Copy of ``data`` with bit ``index`` (0 = MSB of byte 0) inverted."""
    out = bytearray(data)
    out[index >> 3] ^= 0x80 >> (index & 7)
    return bytes(out)


@dataclass
class TrialRun:
    """Raw outcome of the shared trial loop."""

    distances: np.ndarray       # Hamming distance to the baseline, per trial
    cipher_bits: int            # bits in the baseline ciphertext
    changes: np.ndarray         # packed change bits, trials x window bytes
    fresh_keys: bool

    @property
    def trials(self) -> int:
        return int(self.distances.size)

    @property
    def window_bits(self) -> int:
        return self.changes.shape[1] * 8


def run_trials(
    adapter: CipherAdapter,
    plaintext: bytes,
    trials: int,
    rng: RandomSource,
    *,
    window_bytes: int = WINDOW_BYTES,
    fresh_keys: bool | None = None,
) -> TrialRun:
    if not plaintext:
        raise EmptyInput("metrics need a non-empty plaintext")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if fresh_keys is None:
        fresh_keys = adapter.session_keys
    n = len(plaintext)
    key = adapter.keygen(n, rng)
    base = adapter.encrypt(plaintext, key)
    window = min(len(base), window_bytes)
    base_arr = np.frombuffer(base, dtype=np.uint8)

    distances = np.empty(trials, dtype=np.int64)
    changes = np.empty((trials, window), dtype=np.uint8)
    for t in range(trials):
        flipped = flip_bit(plaintext, rng.randbelow(8 * n))
        if fresh_keys:
            key = adapter.keygen(n, rng)
        ct = np.frombuffer(adapter.encrypt(flipped, key), dtype=np.uint8)
        m = min(ct.size, base_arr.size)
        x = base_arr[:m] ^ ct[:m]
        distances[t] = _POPCOUNT[x].sum()
        changes[t, :] = 0
        changes[t, :min(window, m)] = x[:window]
    return TrialRun(distances, 8 * len(base), changes, fresh_keys)


def avalanche_from(run: TrialRun) -> float:
    mu = run.cipher_bits / 2
    if mu == 0:
        return 0.0
    sigma = math.sqrt(float(np.mean((run.distances - mu) ** 2)))
    return max(0.0, 1.0 - sigma / mu)


def strict_avalanche_from(run: TrialRun, corrected: bool = True) -> float:
    """1 - sd(p_j around 0.5) / 0.5 over the window bits.

    With ``corrected`` each squared deviation has the binomial sampling term
    ``p(1-p)/(T-1)`` removed, giving an unbiased estimate of the cipher's own
    departure from 1/2 rather than of trial noise.
    """
    t = run.trials
    if t < 2:
        raise ValueError("strict avalanche needs at least 2 trials")
    counts = np.unpackbits(run.changes, axis=1).sum(axis=0, dtype=np.int64)
    p = counts / t
    dev = (p - 0.5) ** 2
    if corrected:
        dev = dev - p * (1 - p) / (t - 1)
    var = max(0.0, float(dev.mean()))
    return max(0.0, 1.0 - math.sqrt(var) / 0.5)


def _sample_pairs(nbits: int, count: int, rng: RandomSource) -> np.ndarray:
    total = nbits * (nbits - 1) // 2
    count = min(count, total)
    seen: set[tuple[int, int]] = set()
    while len(seen) < count:
        need = count - len(seen)
        js = rng.below_many(np.full(need, nbits, dtype=np.uint64)).tolist()
        ks = rng.below_many(np.full(need, nbits, dtype=np.uint64)).tolist()
        for j, k in zip(js, ks):
            if j != k:
                seen.add((min(j, k), max(j, k)))
                if len(seen) == count:
                    break
    return np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)


def _bit_columns(changes: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return (changes[:, idx >> 3] >> (7 - (idx & 7)).astype(np.uint8)) & 1


def bit_independence_from(run: TrialRun, pair_sample: int, rng: RandomSource) -> float:
    if run.trials < 2:
        raise ValueError("bit independence needs at least 2 trials")
    if pair_sample < 1:
        raise ValueError("pair_sample must be at least 1")
    if run.window_bits < 2:
        return 0.0
    pairs = _sample_pairs(run.window_bits, pair_sample, rng)
    a = _bit_columns(run.changes, pairs[:, 0]).astype(np.float64)
    b = _bit_columns(run.changes, pairs[:, 1]).astype(np.float64)
    a -= a.mean(axis=0)
    b -= b.mean(axis=0)
    va = (a * a).sum(axis=0)
    vb = (b * b).sum(axis=0)
    cov = (a * b).sum(axis=0)
    degenerate = (va == 0) | (vb == 0)
    corr = np.ones(pairs.shape[0])
    ok = ~degenerate
    corr[ok] = np.abs(cov[ok] / np.sqrt(va[ok] * vb[ok]))
    return max(0.0, 1.0 - float(corr.mean()))


def avalanche(adapter, plaintext, trials, rng, *, fresh_keys=None) -> float:
    return avalanche_from(run_trials(adapter, plaintext, trials, rng, fresh_keys=fresh_keys))


def strict_avalanche(adapter, plaintext, trials, rng, *, fresh_keys=None,
                     window_bytes=WINDOW_BYTES, corrected=True) -> float:
    run = run_trials(adapter, plaintext, trials, rng,
                     window_bytes=window_bytes, fresh_keys=fresh_keys)
    return strict_avalanche_from(run, corrected)


def bit_independence(adapter, plaintext, trials, pair_sample, rng, *, fresh_keys=None,
                     window_bytes=WINDOW_BYTES) -> float:
    run = run_trials(adapter, plaintext, trials, rng,
                     window_bytes=window_bytes, fresh_keys=fresh_keys)
    return bit_independence_from(run, pair_sample, rng)


@dataclass(frozen=True)
class Histogram:
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def to_csv(self, path) -> None:
        with _atomic_text(path) as fh:
            w = csv.writer(fh)
            w.writerow(["byte_value", "count"])
            w.writerows(enumerate(self.counts))


def byte_histogram(data: bytes) -> Histogram:
    counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
    return Histogram(tuple(int(c) for c in counts))


def chi_square(source: Histogram, encrypted: Histogram) -> float:
    """Chi-square of encrypted byte counts (rescaled) against source counts."""
    if source.total == 0 or encrypted.total == 0:
        raise EmptyInput("chi-square needs two non-empty histograms")
    exp = np.asarray(source.counts, dtype=np.float64)
    obs = np.asarray(encrypted.counts, dtype=np.float64) * (source.total / encrypted.total)
    seen = exp > 0
    return float((((obs[seen] - exp[seen]) ** 2) / exp[seen]).sum())


def shannon_entropy(hist: Histogram) -> float:
    """Bits per byte."""
    c = np.asarray(hist.counts, dtype=np.float64)
    if c.sum() == 0:
        return 0.0
    p = c[c > 0] / c.sum()
    return float(-(p * np.log2(p)).sum())


def timing_bench(
    adapter: CipherAdapter,
    source,
    repetitions: int = 3,
    rng: RandomSource | None = None,
) -> tuple[float, float]:
    """Median wall-clock (encrypt, decrypt) seconds for the whole file.

    ``source`` is a path or the file contents; the file is read before the
    clock starts and the key is generated outside the timed region.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    data = source if isinstance(source, (bytes, bytearray)) else Path(source).read_bytes()
    data = bytes(data)
    rng = rng or RandomSource()
    key = adapter.keygen(len(data), rng)
    enc_times, dec_times = [], []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        ct = adapter.encrypt_file(data, key)
        t1 = time.perf_counter()
        pt = adapter.decrypt_file(ct, key)
        t2 = time.perf_counter()
        if pt != data:
            raise RuntimeError(f"{adapter.name} failed to round-trip during timing")
        enc_times.append(t1 - t0)
        dec_times.append(t2 - t1)
    return statistics.median(enc_times), statistics.median(dec_times)


REPORT_FIELDS = [
    "file_name", "file_size", "adapter", "encrypt_s", "decrypt_s",
    "avalanche", "strict_avalanche", "bit_independence", "chi_square",
    "encrypt_mb_s", "decrypt_mb_s", "trials", "window_bytes", "pair_sample", "key_policy",
]


@dataclass(frozen=True)
class MetricsReport:
    file_name: str
    file_size: int
    adapter: str
    encrypt_s: float
    decrypt_s: float
    avalanche: float
    strict_avalanche: float
    bit_independence: float
    chi_square: float
    trials: int
    window_bytes: int = WINDOW_BYTES
    pair_sample: int = DEFAULT_PAIRS
    key_policy: str = "fixed"
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    @staticmethod
    def _rate(size, seconds):
        return size / 1e6 / seconds if seconds and seconds > 0 else float("nan")

    def row(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        for k in ("avalanche", "strict_avalanche", "bit_independence"):
            d[k] = f"{d[k]:.5f}"
        d["chi_square"] = f"{self.chi_square:.2f}"
        d["encrypt_s"] = f"{self.encrypt_s:.6f}"
        d["decrypt_s"] = f"{self.decrypt_s:.6f}"
        d["encrypt_mb_s"] = f"{self._rate(self.file_size, self.encrypt_s):.3f}"
        d["decrypt_mb_s"] = f"{self._rate(self.file_size, self.decrypt_s):.3f}"
        return {k: d[k] for k in REPORT_FIELDS}


def analyze(
    adapter: CipherAdapter,
    data: bytes,
    *,
    file_name: str = "<memory>",
    trials: int = 128,
    pair_sample: int = DEFAULT_PAIRS,
    repetitions: int = 3,
    rng: RandomSource | None = None,
    fresh_keys: bool | None = None,
) -> MetricsReport:
    """Full report for one (adapter, file) pair."""
    rng = rng or RandomSource()
    if fresh_keys is None:
        fresh_keys = adapter.session_keys
    run = run_trials(adapter, data, trials, rng, fresh_keys=fresh_keys)
    key = adapter.keygen(len(data), rng)
    ciphertext = adapter.encrypt(data, key)
    src_hist, enc_hist = byte_histogram(data), byte_histogram(ciphertext)
    enc_s, dec_s = timing_bench(adapter, data, repetitions, rng)
    return MetricsReport(
        file_name=file_name,
        file_size=len(data),
        adapter=adapter.name,
        encrypt_s=enc_s,
        decrypt_s=dec_s,
        avalanche=avalanche_from(run),
        strict_avalanche=strict_avalanche_from(run) if trials >= 2 else float("nan"),
        bit_independence=bit_independence_from(run, pair_sample, rng) if trials >= 2 else float("nan"),
        chi_square=chi_square(src_hist, enc_hist),
        trials=trials,
        pair_sample=pair_sample,
        key_policy="per-encryption" if fresh_keys else "fixed",
        extra={"source_hist": src_hist, "cipher_hist": enc_hist},
    )


class _atomic_text:
    """Write a text file through a temporary sibling, renamed on success."""

    def __init__(self, path, mode="w"):
        self.path = Path(path)
        self.tmp = self.path.with_name(f".{self.path.name}.tmp{os.getpid()}")
        self.mode = mode

    def __enter__(self):
        if self.mode == "a" and self.path.exists():
            self.tmp.write_bytes(self.path.read_bytes())
        self.fh = open(self.tmp, self.mode, newline="")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            self.tmp.unlink(missing_ok=True)
        return False


def append_reports_csv(reports, path) -> None:
    """Append report rows to ``path``, writing the header if the file is new."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with _atomic_text(path, "a") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        if new:
            w.writeheader()
        for r in reports:
            w.writerow(r.row())
