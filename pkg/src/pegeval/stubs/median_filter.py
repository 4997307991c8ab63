"""Stub model with a causal core but centered median-filter post-processing.

The filter window extends two frames into the future, so the complete
pipeline is not causal even though the per-frame core is.
"""

import importlib.util
import os

_spec = importlib.util.spec_from_file_location(
    "stub_proto", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_proto.py")
)
proto = importlib.util.module_from_spec(_spec)
_spec.loader.exec_module(proto)

HALF_WINDOW = 2


def filtered_labels(rows):
    base_names = proto.frame_local_labels(rows)
    n = len(base_names)
    out = []
    for i in range(n):
        labels = []
        for t, (_col, _scale, table) in enumerate(proto.TRACKS):
            window = [
                table.index(base_names[min(max(j, 0), n - 1)][t])
                for j in range(i - HALF_WINDOW, i + HALF_WINDOW + 1)
            ]
            labels.append(table[sorted(window)[HALF_WINDOW]])
        out.append(labels)
    return out


def main() -> None:
    args = proto.parse_args("median-filter stub model")
    rows = proto.read_kinematics(args.input)
    proto.write_prediction(filtered_labels(rows), args.output)


if __name__ == "__main__":
    main()
