"""Write the golden key/container pair pinned by tests/test_golden.py.

Run only when the on-disk formats change on purpose; the files are checked in.
"""

from pathlib import Path

from pct.keygen import generate_session_key
from pct.rng import RandomSource
from pct.stream_codec import encrypt_bytes

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"
LENGTH = 330


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    plain = RandomSource(1).bytes(LENGTH)
    key = generate_session_key(LENGTH, RandomSource(0))
    (OUT / "golden.plain").write_bytes(plain)
    (OUT / "golden.pctk").write_bytes(key.to_bytes())
    (OUT / "golden.pctc").write_bytes(encrypt_bytes(plain, key))
    print("blocks", len(key), "digest", key.digest.hex()[:32])


if __name__ == "__main__":
    main()
