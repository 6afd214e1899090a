import pytest

from levyerg.modelfile import BUNDLED_MODELS, bundled_model_path, load_model


@pytest.fixture(scope="session")
def bundled():
    """Mapping name -> (ModelSpec, LyapunovParams) for every shipped model file."""
    return {name: load_model(bundled_model_path(name)) for name in BUNDLED_MODELS}


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one ``CRITERION n: PASS/FAIL detail`` line per acceptance criterion."""

    def record(n: int, ok: bool, detail: str) -> None:
        line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
