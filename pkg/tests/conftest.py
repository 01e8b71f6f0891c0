from pathlib import Path

import pytest

from boxfusion.io import write_fused
from boxfusion.synthetic import synthetic_scene

_acceptance: list[tuple[str, str]] = []


def pytest_runtest_makereport(item, call):
    if call.when != "call" or item.get_closest_marker("criterion") is None:
        return
    name = item.get_closest_marker("criterion").args[0]
    outcome = "PASS" if call.excinfo is None else "FAIL"
    _acceptance.append((outcome, name))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for outcome, name in _acceptance:
        terminalreporter.write_line(f"[{outcome}] {name}")


def write_scene(directory: Path, n_images: int = 100, seed: int = 0):
    """Write a synthetic ground truth plus two model prediction files."""
    gts, preds = synthetic_scene(n_images, seed)
    gt_path = directory / "gt.csv"
    lines = ["# image_id,xmin,ymin,xmax,ymax"]
    for image_id in sorted(gts):
        for g in gts[image_id]:
            lines.append(",".join([image_id, *(format(v, ".9g") for v in g.box.as_tuple())]))
    gt_path.write_text("\n".join(lines) + "\n")
    model_paths = []
    for m in range(2):
        p = directory / f"model{m}.csv"
        write_fused({k: v[m] for k, v in preds.items()}, p)
        model_paths.append(p)
    return gt_path, model_paths


@pytest.fixture
def scene(tmp_path):
    return write_scene(tmp_path)
