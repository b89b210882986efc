"""Generates one report per command and validates it against the shipped schemas."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def run(*args):
    result = subprocess.run(args, capture_output=True, text=True)
    if result.returncode != 0:
        sys.exit(f"command failed ({result.returncode}): {' '.join(args)}\n{result.stderr}")


def main():
    appeval, schema_dir, data_dir = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    schemas = {p.name: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(s)) for name, s in schemas.items())

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        run(appeval, "synth", "ctds", "--config", str(data_dir / "ctds_truth.json"), "--out", str(tmp / "survey"))
        run(appeval, "ctds", "--config", str(tmp / "survey" / "config.json"), "--replicates", "0",
            "--out", str(tmp / "reports"))
        run(appeval, "ctds", "--config", str(tmp / "survey" / "config.json"), "--replicates", "100",
            "--keyfns", "hn", "--scenarios", "manual,auto", "--out", str(tmp / "boot"))
        run(appeval, "synth", "rig", "--config", str(data_dir / "rig.json"), "--out", str(tmp / "rig"))
        run(appeval, "pose", "--calibration", str(tmp / "rig" / "calibration.json"),
            "--pred2d", str(tmp / "rig" / "keypoints2d.csv"), "--gt", str(tmp / "rig" / "keypoints3d.csv"),
            "--out", str(tmp / "reports"))
        (tmp / "predictions.csv").write_text(
            "item_id,true_label,score_present,score_absent\n"
            "a,present,0.9,0.1\nb,absent,0.4,0.6\nc,present,0.35,0.65\nd,absent,0.2,0.8\n")
        run(appeval, "clsmetrics", str(tmp / "predictions.csv"), "--out", str(tmp / "reports"))

        checks = [(tmp / "reports" / "ctds_report.json", "ctds_report.schema.json"),
                  (tmp / "boot" / "ctds_report.json", "ctds_report.schema.json"),
                  (tmp / "reports" / "pose_report.json", "pose_report.schema.json"),
                  (tmp / "reports" / "clsmetrics_report.json", "clsmetrics_report.schema.json")]
        for report, schema in checks:
            validator = jsonschema.Draft202012Validator(schemas[schema], registry=registry)
            errors = sorted(validator.iter_errors(json.loads(report.read_text())), key=str)
            for e in errors:
                print(f"{report.name}: {e.json_path}: {e.message}")
            if errors:
                sys.exit(1)
            print(f"{report.parent.name}/{report.name}: valid against {schema}")


if __name__ == "__main__":
    main()
