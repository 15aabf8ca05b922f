from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from crtk.pipeline import PipelineConfig, run


@pytest.fixture(scope="session")
def toy_dir() -> Path:
    return Path(str(resources.files("crtk").joinpath("data", "toy")))


@pytest.fixture(scope="session")
def toy_run(toy_dir, tmp_path_factory):
    """One full single-worker pipeline run on the bundled toy corpus."""
    out = tmp_path_factory.mktemp("toy_run")
    config = PipelineConfig.load(toy_dir / "config.json", [(["output"], str(out))])
    result = run("all", config, echo=lambda *_: None)
    return out, result


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; printed now and again in the session summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        lines.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
