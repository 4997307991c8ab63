"""Acausal stub model: each frame's labels come from five frames ahead.

The lookahead index is clamped to the last available frame, so on a growing
prefix the final frame always uses itself; on the full input it reaches into
the future wherever five more frames exist.
"""

import importlib.util
import os

_spec = importlib.util.spec_from_file_location(
    "stub_proto", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_proto.py")
)
proto = importlib.util.module_from_spec(_spec)
_spec.loader.exec_module(proto)

LOOKAHEAD_FRAMES = 5


def lookahead_labels(rows):
    base = proto.frame_local_labels(rows)
    n = len(base)
    return [base[min(i + LOOKAHEAD_FRAMES, n - 1)] for i in range(n)]


def main() -> None:
    args = proto.parse_args("lookahead stub model")
    rows = proto.read_kinematics(args.input)
    proto.write_prediction(lookahead_labels(rows), args.output)


if __name__ == "__main__":
    main()
