"""Stub model that always fails: exercises the indeterminate verdict path."""

import argparse
import sys


def main() -> None:
    parser = argparse.ArgumentParser(description="crashing stub model")
    parser.add_argument("--input", required=True)
    parser.add_argument("--output", required=True)
    parser.parse_args()
    print("synthetic failure", file=sys.stderr)
    sys.exit(3)


if __name__ == "__main__":
    main()
