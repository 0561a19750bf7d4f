import numpy as np
import pytest
from hypothesis import strategies as st

# criterion -> list of (ok, detail); ok is None for a part that cannot be measured
ACCEPTANCE: dict[str, list[tuple[bool | None, str]]] = {}


@st.composite
def unit_vectors(draw):
    v = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3)
             .filter(lambda v: np.linalg.norm(v) > 1e-3))
    v = np.array(v)
    return v / np.linalg.norm(v)


epsilons = st.floats(0.0, 0.999, allow_nan=False)


def random_units(rng, m):
    v = rng.standard_normal((m, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def record():
    def _record(criterion: str, ok, detail: str = ""):
        ok = None if ok is None else bool(ok)
        ACCEPTANCE.setdefault(criterion, []).append((ok, detail))
        print(f"{_label(ok)}  {criterion}  {detail}")
        return ok
    return _record


def _label(ok):
    return "SKIP" if ok is None else ("PASS" if ok else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[name]
        measured = [ok for ok, _ in parts if ok is not None]
        ok = None if not measured else all(measured)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"{_label(ok)}  {name}  {detail}")
