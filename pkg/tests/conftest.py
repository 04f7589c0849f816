import os
import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
CASES = FIXTURES / "simara_cases"

# Released IOB2 labels/predictions, laid out as <root>/<dataset>/{labels,predictions}/
DATA_ENV = "IEMETRICS_DATA_DIR"
DATASETS = ("iam", "simara", "esposalles", "popp")

_criteria: dict[int, list[tuple[str, str]]] = defaultdict(list)
_titles: dict[int, str] = {}


def released_dataset(name: str) -> Path:
    root = os.environ.get(DATA_ENV)
    base = Path(root) / name if root else None
    if base is None or not (base / "labels").is_dir() or not (base / "predictions").is_dir():
        pytest.fail(
            f"released {name} data not found: set {DATA_ENV} to a directory holding "
            f"{name}/labels and {name}/predictions",
            pytrace=False,
        )
    return base


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if len(marker.args) > 1:
        _titles[n] = marker.args[1]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _criteria[n].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        results = _criteria[n]
        ok = all(o == "passed" for _, o in results)
        failed = [name for name, o in results if o != "passed"]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {_titles.get(n, '')}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        tr.write_line(line)
