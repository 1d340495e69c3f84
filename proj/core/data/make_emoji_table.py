#!/usr/bin/env python3
"""Regenerates emoji_table.tsv from the Python unicodedata name table."""
import sys
import unicodedata

RANGES = [
    (0x1F1E6, 0x1F1FF),  # regional indicators
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x1FA70, 0x1FAFF),
    (0x2600, 0x27BF),
]


def slug(name):
    out = []
    for ch in name.lower():
        out.append(ch if ch.isalnum() else "_")
    return "_".join(part for part in "".join(out).split("_") if part)


def main(path):
    with open(path, "w", encoding="utf-8") as f:
        f.write("# codepoint\tname\n")
        for lo, hi in sorted(RANGES):
            for cp in range(lo, hi + 1):
                try:
                    name = unicodedata.name(chr(cp))
                except ValueError:
                    continue
                f.write(f"{cp:04X}\t{slug(name)}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "emoji_table.tsv")
