#!/usr/bin/env python3
"""Export the Riemenschneider Bach chorale harmonizations bundled with
music21 to Standard MIDI Files, one file per chorale.

Usage: python3 scripts/export_bach_chorales.py OUT_DIR
"""
import sys
from pathlib import Path

from music21 import corpus


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    it = corpus.chorales.Iterator(numberingSystem="riemenschneider", returnType="stream")
    written = 0
    for index, score in enumerate(it, start=1):
        score = score.stripTies()
        score.write("midi", fp=str(out / f"chorale{index:03d}.mid"))
        written += 1
    print(f"wrote {written} files to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
