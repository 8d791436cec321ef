import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# experimental self-testing numbers, used across modules
F_EXP = (0.9931, 0.9897, 0.9979)
CHSH_EXP = (2.8241, 2.8211, 2.8189)


def random_density(rng: np.random.Generator, d: int = 4, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + g.conj().T) / 2


def random_unit_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


DATA = __import__("pathlib").Path(__file__).parent / "data"


def load_realizations():
    """Two-qubit realizations at the experimental CHSH values, as (record, rho, bob, charlie)."""
    import json

    from disteer.quantum import SX, SY, SZ

    d = json.loads((DATA / "realizations.json").read_text())
    out = []
    for r in d["realizations"]:
        rho = np.array(r["rho_real"]) + 1j * np.array(r["rho_imag"])
        bob = [v[0] * SX + v[1] * SY + v[2] * SZ for v in r["bob_bloch"]]
        charlie = [v[0] * SX + v[1] * SY + v[2] * SZ for v in r["charlie_bloch"]]
        out.append((r, rho, bob, charlie))
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])
