#!/usr/bin/env python3
"""Validates fixtures and generated files against the JSON schemas.

usage: check_schemas.py SCHEMA_DIR FIXTURE_DIR BTRISK_EXE
"""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def main() -> int:
    schema_dir, fixture_dir, exe = (pathlib.Path(a) for a in sys.argv[1:4])
    schemas = {p.name: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(s)) for name, s in schemas.items())

    def validator(name):
        cls = jsonschema.validators.validator_for(schemas[name])
        cls.check_schema(schemas[name])
        return cls(schemas[name], registry=registry)

    btd, episode, truth = (validator(n) for n in
                           ("btd.schema.json", "episode.schema.json", "truth.schema.json"))
    failures = 0

    def check(v, doc, label):
        nonlocal failures
        errors = sorted(v.iter_errors(doc), key=lambda e: list(e.path))
        for e in errors:
            print(f"FAIL {label}: {'/'.join(map(str, e.path))}: {e.message}")
        failures += bool(errors)
        if not errors:
            print(f"ok   {label}")

    models = [fixture_dir / "roadway.btd.json", *sorted((fixture_dir / "invalid").glob("*.json"))]
    for p in models:
        check(btd, json.loads(p.read_text()), p.name)
    check(truth, json.loads((fixture_dir / "truth.json").read_text()), "truth.json")

    # Documents the schemas must reject.
    roadway = json.loads((fixture_dir / "roadway.btd.json").read_text())
    bad = [
        (btd, {k: v for k, v in roadway.items() if k != "nodes"}, "model without nodes"),
        (btd, {**roadway, "functions": {"B1": {"kind": "barrier_probability", "base": -1, "factors": []}}},
         "negative base"),
        (episode, {"scene_id": "0", "duration": 0, "state": {}, "threats": {}, "top": 0, "consequences": {}},
         "zero duration"),
        (episode, {"scene_id": "0", "duration": 1, "state": {}, "threats": {"T1": -1}, "top": 0,
                   "consequences": {}}, "negative count"),
    ]
    for v, doc, label in bad:
        if v.is_valid(doc):
            print(f"FAIL {label}: accepted")
            failures += 1
        else:
            print(f"ok   rejects {label}")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        model = str(fixture_dir / "roadway.btd.json")
        logs = []
        for name, extra in (("T1", ["--isolate", "T1"]), ("T2", ["--isolate", "T2"]), ("all", [])):
            logs.append(tmp / f"{name}.ndjson")
            subprocess.run([str(exe), "--seed", "5", "simulate", str(fixture_dir / "truth.json"), model,
                            "--episodes", "1000", "--out", str(logs[-1]), *extra],
                           check=True, stderr=subprocess.DEVNULL)
        for i, line in enumerate(logs[0].read_text().splitlines()[:50]):
            check(episode, json.loads(line), f"episode log line {i + 1}")
        fitted = tmp / "fitted.btd.json"
        subprocess.run([str(exe), "fit", model, *map(str, logs), "--out", str(fitted)],
                       check=True, stderr=subprocess.DEVNULL)
        check(btd, json.loads(fitted.read_text()), "fitted model")

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
