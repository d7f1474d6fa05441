#!/usr/bin/env python3
"""Prepend the license header to C/C++ sources that lack it."""
import argparse
import pathlib

ROOTS = ("include", "src", "tools", "tests")
SUFFIXES = {".h", ".hpp", ".cpp"}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("header", type=pathlib.Path)
    ap.add_argument("--repo", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent)
    args = ap.parse_args()
    header = args.header.read_text().rstrip("\n") + "\n\n"
    marker = header.splitlines()[1]
    changed = 0
    for root in ROOTS:
        for path in sorted((args.repo / root).rglob("*")):
            if path.suffix not in SUFFIXES or not path.is_file():
                continue
            text = path.read_text()
            if marker in text.split("\n", 3)[1:2]:
                continue
            path.write_text(header + text)
            changed += 1
    print(f"{changed} files updated")


if __name__ == "__main__":
    main()
