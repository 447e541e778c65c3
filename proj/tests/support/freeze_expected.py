"""Runs the curated programs under CPython and writes their results to expected.json."""

import json
import pathlib
import sys


def reference_value(source):
    env = {}
    exec(compile(source, "<program>", "exec"), env)
    value = env["solution"]()
    if isinstance(value, (list, tuple)) and len(value) == 1:
        value = value[0]
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return {"kind": "int", "repr": repr(value)}
    if isinstance(value, float):
        return {"kind": "float", "repr": repr(value)}
    raise TypeError(f"non-numeric result {value!r}")


def main():
    args = [a for a in sys.argv[1:] if a != "--check"]
    check = "--check" in sys.argv[1:]
    default_root = pathlib.Path(__file__).parent.parent / "data" / "programs"
    root = pathlib.Path(args[0]) if args else default_root
    expected = {p.stem: reference_value(p.read_text()) for p in sorted(root.glob("*.py"))}
    text = json.dumps(expected, indent=2, sort_keys=True) + "\n"
    target = root / "expected.json"
    if check:
        if target.read_text() != text:
            print("expected.json is stale; rerun freeze_expected.py")
            return 1
        print(f"{len(expected)} frozen results match CPython")
        return 0
    target.write_text(text)
    print(f"froze {len(expected)} programs")
    return 0


if __name__ == "__main__":
    sys.exit(main())
