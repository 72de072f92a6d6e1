"""Write tests/golden/example_report.json from the bundled example project.

Run once after a verified change to the pipeline or the example data; the
acceptance suite compares against this file byte for byte.
"""
from importlib import resources
from pathlib import Path

from formval.config import load_config
from formval.report import generate_report
from formval.workflow import run_project

EXAMPLE = Path(resources.files("formval") / "data" / "example_project")
GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden" / "example_report.json"


def main():
    run = run_project(EXAMPLE / "spec.yaml", EXAMPLE / "pilot.csv", [EXAMPLE / "sme.csv"],
                      load_config(EXAMPLE / "config.yaml"), iteration_id="pilot-1")
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(generate_report(run, "structured"), encoding="utf-8")
    print(GOLDEN)


if __name__ == "__main__":
    main()
