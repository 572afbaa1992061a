"""Regenerate the bundled mini-corpus under src/pct/corpus/.

english.txt   verbatim licence texts shipped with Debian (plain English prose)
random.bin    ChaCha20 output from a fixed seed (stands in for zip/rar data)
repetitive.bin  a small record table repeated, like padded binary formats
"""

import struct
from pathlib import Path

from pct.rng import RandomSource

OUT = Path(__file__).resolve().parents[1] / "src" / "pct" / "corpus"
LICENSES = Path("/usr/share/common-licenses")
TEXTS = ["Apache-2.0", "GPL-2", "GPL-3", "LGPL-2.1", "MPL-2.0"]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    text = b"\n".join((LICENSES / name).read_bytes() for name in TEXTS)
    (OUT / "english.txt").write_bytes(text)
    (OUT / "random.bin").write_bytes(RandomSource(0x5EED).bytes(96 * 1024))
    records = b"".join(struct.pack("<IHH8s", i, i % 7, 0, b"REC\0\0\0\0\0") for i in range(64))
    (OUT / "repetitive.bin").write_bytes((records * 64)[:64 * 1024])
    for p in sorted(OUT.iterdir()):
        print(p.name, p.stat().st_size)


if __name__ == "__main__":
    main()
