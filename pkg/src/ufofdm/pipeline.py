"""End-to-end filter design: LP assembly, solve, nonnegativity repair, factorization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignLP, DesignSpec, assemble_lp, expected_spectrum, power_vector, \
    shift_carriers
from .errors import SolverError
from .lp import LpSolution, solve_lp
from .spectral import Autocorrelation, FirFilter, autocorrelation, factorize, \
    repair_nonnegativity, spectrum_minimum

DESIGN_TOL = 1e-10


@dataclass
class DesignResult:
    spec: DesignSpec
    lp: DesignLP
    solution: LpSolution
    g_raw: Autocorrelation
    g: Autocorrelation
    filter: FirFilter

    @property
    def t1(self) -> float:
        return float(self.solution.x[self.spec.N])

    @property
    def t2(self) -> float:
        return float(self.solution.x[self.spec.N + 1])

    @property
    def repaired(self) -> bool:
        return not np.array_equal(self.g_raw.g, self.g.g)

    def diagnostics(self) -> dict:
        spec = self.spec
        b = power_vector(spec, shift_carriers(spec))
        g_f = autocorrelation(self.filter).g
        return {
            "status": self.solution.status,
            "iterations": self.solution.iterations,
            "objective": self.solution.objective,
            "t1": self.t1,
            "t2": self.t2,
            "primal_residual": self.solution.primal_residual,
            "dual_residual": self.solution.dual_residual,
            "gap": self.solution.gap,
            "repaired": self.repaired,
            "min_power_response": spectrum_minimum(self.g.g)[0],
            "power_equality_error": float(abs(b @ self.g.g - spec.power_target)),
            "roundtrip_error": float(np.abs(g_f - self.g.g).max()),
            "stopband_max_db": stopband_max_db(self.filter, spec),
        }


def stopband_max_db(f: FirFilter, spec: DesignSpec, points: int = 2 ** 14) -> float:
    """Largest |F|^2 E|X|^2 on the stopband, in dB relative to its peak over [0, pi]."""
    w = np.linspace(0.0, np.pi, points)
    psd = np.abs(f.response(w)) ** 2 * expected_spectrum(spec, shift_carriers(spec), w)
    return float(10 * np.log10(psd[w >= spec.stopband_start].max() / psd.max()))


def design_filter(spec: DesignSpec, tol: float = DESIGN_TOL, max_iters: int = 200,
                  allow_overlap: bool = False) -> DesignResult:
    carriers = shift_carriers(spec)
    lp = assemble_lp(spec, carriers, allow_overlap=allow_overlap)
    sol = solve_lp(lp, tol=tol, max_iters=max_iters)
    if sol.status != "optimal":
        raise SolverError(f"design LP ended with status {sol.status}", sol)
    g_raw = Autocorrelation(sol.x[: spec.N], spec.M, spec.carriers)
    g = repair_nonnegativity(g_raw, spec)
    f = factorize(g, params={"lambda": spec.lam})
    f.M, f.carriers = spec.M, spec.carriers
    return DesignResult(spec, lp, sol, g_raw, g, f)
