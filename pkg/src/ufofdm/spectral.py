"""Filters, autocorrelations and minimum-phase spectral factorization."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from . import __version__
from .design import DesignSpec, power_response, power_vector, shift_carriers
from .errors import FactorizationError, ParameterError
from .numerics import poly_roots

log = logging.getLogger(__name__)

VERIFY_GRID = 2 ** 14
ON_CIRCLE_TOL = 1e-6
PAIR_TOL = 1e-6
CLUSTER_TOL = 5e-2
MAX_REFINE = 8
CENTROID_TOL = 1e-6

PROVENANCES = ("designed", "dolph_chebyshev", "identity", "external")


@dataclass
class FirFilter:
    """Real FIR filter ``f_0 .. f_{N-1}`` with ``f_0 > 0`` and a nonzero last tap.

    ``M`` and ``carriers`` record the design context when known; ``params``
    holds provenance details such as ``lambda`` or ``attenuation_db``.
    """

    coefficients: np.ndarray
    provenance: str = "external"
    params: dict = field(default_factory=dict)
    M: int | None = None
    carriers: tuple | None = None

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if f.ndim != 1 or f.size == 0:
            raise ParameterError("filter must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(f)):
            raise ParameterError("filter coefficients must be finite")
        if f[0] == 0 or f[-1] == 0:
            raise ParameterError("first and last filter taps must be nonzero")
        if f[0] < 0:
            f = -f
        self.coefficients = f
        if self.provenance not in PROVENANCES:
            raise ParameterError(f"unknown provenance {self.provenance!r}")
        if self.carriers is not None:
            self.carriers = tuple(int(k) for k in self.carriers)

    @property
    def N(self) -> int:
        return self.coefficients.size

    def response(self, omega) -> np.ndarray:
        """F(w) = sum_n f_n exp(-j n w)."""
        omega = np.asarray(omega, dtype=float)
        n = np.arange(self.N)
        return np.exp(-1j * omega[..., None] * n) @ self.coefficients

    def scaled(self, factor: float) -> "FirFilter":
        return FirFilter(self.coefficients * factor, self.provenance, dict(self.params),
                         self.M, self.carriers)

    def to_json(self) -> str:
        doc = {
            "M": self.M,
            "N": self.N,
            "carriers": list(self.carriers) if self.carriers is not None else None,
        }
        if "lambda" in self.params:
            doc["lambda"] = self.params["lambda"]
        doc["coefficients"] = [float(v) for v in self.coefficients]
        doc["g"] = [float(v) for v in autocorrelation(self).g]
        doc["provenance"] = self.provenance
        extra = {k: v for k, v in self.params.items() if k != "lambda"}
        if extra:
            doc["params"] = extra
        doc["created_by_version"] = __version__
        # json writes floats with repr(), the shortest string that round-trips exactly.
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FirFilter":
        doc = json.loads(text)
        params = dict(doc.get("params") or {})
        if doc.get("lambda") is not None:
            params["lambda"] = doc["lambda"]
        return cls(np.array(doc["coefficients"], dtype=float), doc.get("provenance", "external"),
                   params, doc.get("M"), doc.get("carriers"))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "FirFilter":
        return cls.from_json(Path(path).read_text())


@dataclass
class Autocorrelation:
    """One-sided autocorrelation; ``g_{-n} = g_n`` is implied."""

    g: np.ndarray
    M: int | None = None
    carriers: tuple | None = None

    def __post_init__(self):
        self.g = np.atleast_1d(np.asarray(self.g, dtype=float))

    @property
    def N(self) -> int:
        return self.g.size

    def response(self, omega) -> np.ndarray:
        return power_response(self.g, omega)


def autocorrelation(f: FirFilter) -> Autocorrelation:
    c = f.coefficients
    g = np.correlate(c, c, mode="full")[c.size - 1:]
    return Autocorrelation(g, f.M, f.carriers)


def _verify_grid():
    return np.linspace(0.0, np.pi, VERIFY_GRID)


def spectrum_minimum(g) -> tuple[float, float]:
    """Minimum of F_g over [0, pi]: dense grid scan plus local refinement."""
    g = np.asarray(g, dtype=float)
    w = _verify_grid()
    vals = power_response(g, w)
    idx = int(np.argmin(vals))
    best_w, best = w[idx], float(vals[idx])
    # Refine around every grid-local minimum that is close to the global one.
    interior = np.flatnonzero((vals[1:-1] < vals[:-2]) & (vals[1:-1] <= vals[2:])) + 1
    spread = max(abs(best), 1e-12 * abs(g[0])) * 10
    step = w[1] - w[0]
    candidates = interior[vals[interior] <= best + spread]
    candidates = candidates[np.argsort(vals[candidates], kind="stable")][:MAX_REFINE]
    for i in candidates:
        res = minimize_scalar(lambda t: float(power_response(g, t)),
                              bounds=(w[i] - step, w[i] + step), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < best:
            best_w, best = float(res.x), float(res.fun)
    return best, best_w


def repair_nonnegativity(g: Autocorrelation, spec: DesignSpec) -> Autocorrelation:
    """Lift ``g_0`` until F_g >= 0, then rescale to restore power conservation."""
    fmin, _ = spectrum_minimum(g.g)
    if fmin >= 0:
        return g
    delta = -fmin
    lifted = g.g.copy()
    lifted[0] += delta * (1 + 1e-3)
    b = power_vector(spec, shift_carriers(spec))
    lifted *= spec.power_target / (b @ lifted)
    log.info("nonnegativity repair: min F_g was %.3e, g_0 lifted by %.3e", fmin, delta)
    return Autocorrelation(lifted, g.M, g.carriers)


def _pair_circle_roots(roots: np.ndarray) -> np.ndarray:
    """Merge near-unit-circle roots into double roots; return one of each pair."""
    if roots.size % 2:
        raise FactorizationError("odd number of roots on the unit circle")
    if roots.size == 0:
        return roots
    ordered = roots[np.argsort(np.angle(roots))]
    # Two ways to pair a cyclic list; choose the one with smaller angular spread.
    best = None
    for offset in (0, 1):
        rolled = np.roll(ordered, -offset)
        a, b = rolled[0::2], rolled[1::2]
        spread = np.abs(np.angle(a * np.conj(b))).sum()
        if best is None or spread < best[0]:
            best = (spread, a, b)
    _, a, b = best
    mid = a * np.exp(0.5j * np.angle(b * np.conj(a)))
    return mid / np.abs(mid)


def _refine_multiple(coeffs: np.ndarray, z: complex, m: int, iters: int = 30) -> complex:
    """Newton on the (m-1)th derivative, where an m-fold zero is simple."""
    d = P.polyder(coeffs, m - 1)
    dd = P.polyder(d)
    for _ in range(iters):
        den = P.polyval(z, dd)
        if den == 0:
            break
        step = P.polyval(z, d) / den
        z = z - step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    return z


def _merge_circle_clusters(roots: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse clusters of nearby roots sitting on the unit circle.

    A zero of multiplicity m on the circle comes back from the root finder
    scattered by about eps**(1/m); Newton on the (m-1)th derivative, started
    at the cluster centroid, recovers it.
    Returns (one representative per zero pair, remaining roots).
    """
    n = roots.size
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    close = np.abs(roots[:, None] - roots[None, :]) < CLUSTER_TOL
    for i, j in zip(*np.nonzero(np.triu(close, 1))):
        parent[find(i)] = find(j)
    labels = np.array([find(i) for i in range(n)])
    circle, rest = [], []
    for lab in np.unique(labels):
        members = roots[labels == lab]
        c = members.mean()
        if members.size >= 2:
            c = _refine_multiple(coeffs, c, members.size)
        is_zero = abs(P.polyval(c, coeffs)) <= 1e-9 * np.abs(coeffs).sum()
        if members.size >= 2 and members.size % 2 == 0 and is_zero \
                and abs(abs(c) - 1) < CENTROID_TOL:
            circle.extend([c / abs(c)] * (members.size // 2))
        else:
            rest.extend(members)
    return np.array(circle, dtype=complex), np.array(rest, dtype=complex)


def _jacobian(f: np.ndarray) -> np.ndarray:
    """d g_n / d f_k = f_{k-n} + f_{k+n} (out-of-range taps are zero)."""
    N = f.size
    n, k = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    padded = np.concatenate([f, np.zeros(2 * N)])  # index -1.. wraps into the zero tail
    return padded[k - n] + padded[k + n]


def _polish(f: np.ndarray, g: np.ndarray, iters: int = 8) -> np.ndarray:
    """Newton refinement of ``autocorrelation(f) == g`` (least-squares steps)."""
    N = f.size

    def resid(v):
        return np.correlate(v, v, mode="full")[N - 1:] - g

    r = resid(f)
    for _ in range(iters):
        J = _jacobian(f)
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        trial = f + step
        rt = resid(trial)
        if np.abs(rt).max() >= np.abs(r).max():
            break
        f, r = trial, rt
    return f


def factorize(g: Autocorrelation, tol: float = 1e-9, provenance: str = "designed",
              params: dict | None = None) -> FirFilter:
    """Minimum-phase ``f`` with ``autocorrelation(f) == g``.

    Zeros of the Laurent polynomial sum_n g_|n| z^n come in reciprocal pairs;
    the one inside the unit circle is kept, and roots on the circle (double
    for a nonnegative spectrum) are split evenly.
    """
    gv = g.g.copy()
    if gv[0] <= 0:
        raise FactorizationError("g_0 must be positive")
    fmin, w_at = spectrum_minimum(gv)
    if fmin < -tol * gv[0]:
        raise FactorizationError(
            f"F_g reaches {fmin:.3e} at w={w_at:.6f}; repair nonnegativity before factorizing")
    nz = np.flatnonzero(np.abs(gv) > 0)
    gv = gv[: nz[-1] + 1]
    N = gv.size
    if N == 1:
        return FirFilter([np.sqrt(gv[0])], provenance, params or {}, g.M, g.carriers)

    laurent = np.concatenate([gv[:0:-1], gv])  # ascending powers z^0 .. z^{2N-2}
    merged, roots = _merge_circle_clusters(poly_roots(laurent), laurent)
    mag = np.abs(roots)
    on = np.abs(mag - 1) < ON_CIRCLE_TOL
    inside = roots[(mag < 1) & ~on]
    outside = roots[(mag > 1) & ~on]
    if inside.size != outside.size:
        raise FactorizationError("zeros do not split into reciprocal pairs")
    if inside.size:
        partners = 1.0 / np.conj(outside)
        dist = np.abs(inside[:, None] - partners[None, :]).min(axis=1)
        if np.any(dist > PAIR_TOL * np.maximum(1.0, np.abs(inside)) * 1e3):
            raise FactorizationError("reciprocal zero pairing failed")
    circle = np.concatenate([merged, _pair_circle_roots(roots[on])])
    if circle.size:
        log.warning("%d double zero(s) on the unit circle split between f and its reverse",
                    circle.size)
    keep = np.concatenate([inside, circle])
    f = np.real(np.poly(keep)) if keep.size else np.ones(1)
    ghat = np.correlate(f, f, mode="full")[N - 1:]
    f = f * np.sqrt((ghat @ gv) / (ghat @ ghat))
    f = _polish(f, gv)
    if f[0] < 0:
        f = -f
    err = np.abs(np.correlate(f, f, mode="full")[N - 1:] - gv).max()
    if err > 1e-8 * gv[0]:
        raise FactorizationError(f"round-trip autocorrelation error {err:.3e} exceeds 1e-8 g_0")
    return FirFilter(f, provenance, params or {}, g.M, g.carriers)
