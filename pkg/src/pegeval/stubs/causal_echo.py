"""Causal stub model: frame labels depend only on the input seen so far."""

import importlib.util
import os

# file-path import keeps the stub runnable as a bare script without pulling
# in the parent package (cold-launch cost matters here)
_spec = importlib.util.spec_from_file_location(
    "stub_proto", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_proto.py")
)
proto = importlib.util.module_from_spec(_spec)
_spec.loader.exec_module(proto)


def main() -> None:
    args = proto.parse_args("causal stub model")
    rows = proto.read_kinematics(args.input)
    proto.write_prediction(proto.history_labels(rows), args.output)


if __name__ == "__main__":
    main()
