import pytest

from mural.data import Detection
from mural.geometry import BBox

ACCEPTANCE_LINES: list[str] = []


def det(x, y, w, h, conf=0.5, cls=0, image_id=1, gt=None):
    return Detection(image_id, BBox(x, y, w, h), cls, conf, gt)


@pytest.fixture
def make_det():
    return det


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
