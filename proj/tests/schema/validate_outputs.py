"""Run every CLI command on a small dataset and validate its JSON outputs."""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def load(path):
    with open(path) as f:
        return json.load(f)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--schemas", required=True, type=pathlib.Path)
    args = parser.parse_args()

    schemas = {p.name.split(".")[0]: load(p) for p in args.schemas.glob("*.schema.json")}
    for name, schema in schemas.items():
        jsonschema.Draft202012Validator.check_schema(schema)

    with tempfile.TemporaryDirectory() as tmp:
        work = pathlib.Path(tmp)

        def run(*argv):
            subprocess.run([args.cli, *map(str, argv)], check=True, stdout=subprocess.DEVNULL)

        run("synth", "--out", work / "train", "--seed", 21, "--worlds", 3, "--frames", 45,
            "--template", "single-box,y-junction,random")
        run("synth", "--out", work / "test", "--seed", 22, "--worlds", 1, "--frames", 40, "--template", "single-box")
        run("train", "--data", work / "train", "--out", work / "db.egdb")
        seq = work / "test" / "seq_0000"
        run("predict", "--db", work / "db.egdb", "--depth", seq / "depth_00003.egod", "--poses", seq / "poses.json",
            "--frame", 3, "--k", 10, "--out", work / "predict")
        run("eval", "--db", work / "db.egdb", "--train-data", work / "train", "--test-data", work / "test",
            "--k-values", "5,10", "--max-iters", 10, "--oracle", "--out", work / "eval")
        run("bases", "--data", work / "train", "--out", work / "bases")

        checks = [
            ("prediction", work / "predict" / "predictions.json"),
            ("detections", work / "predict" / "detections.json"),
            ("dataset", work / "train" / "dataset.json"),
            ("report", work / "eval" / "report.json"),
            ("manifest", work / "train" / "manifest.json"),
            ("manifest", work / "db.egdb.manifest.json"),
            ("manifest", work / "predict" / "manifest.json"),
            ("manifest", work / "eval" / "manifest.json"),
            ("manifest", work / "bases" / "manifest.json"),
        ]
        checks += [("poses", p) for p in (work / "train").glob("seq_*/poses.json")]
        checks += [("world", p) for p in (work / "train").glob("worlds/*.json")]

        failures = 0
        for name, path in checks:
            try:
                jsonschema.validate(load(path), schemas[name], cls=jsonschema.Draft202012Validator)
                print(f"ok   {name:<10} {path.relative_to(work)}")
            except jsonschema.ValidationError as e:
                failures += 1
                print(f"FAIL {name:<10} {path.relative_to(work)}: {e.message} at {list(e.absolute_path)}")
        return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
