"""Cached analyses shared across test modules (each sweep is computed once per session)."""

from functools import lru_cache

from qagap.hamiltonian import DriverSpec, SystemHamiltonian
from qagap.pipeline import analyze
from qagap.reproduce import chain5, chain7


@lru_cache(maxsize=None)
def chain5_analysis(w4: float, J: float, driver: str = "X", alpha: float = 1.0):
    m = chain5(w4, J)
    drv = DriverSpec.x() if driver == "X" else DriverSpec.xx(m.edges, -1.0)
    return analyze(m, drv, alpha)


@lru_cache(maxsize=None)
def chain7_analysis(J: float):
    return analyze(chain7(J))


def system(w4: float, J: float, alpha: float = 1.0) -> SystemHamiltonian:
    return SystemHamiltonian(chain5(w4, J), DriverSpec.x(), alpha)
