"""Design parameters and the discretized filter-design linear program.

The decision variable is the one-sided autocorrelation ``g_0 .. g_{N-1}`` of a
real filter, whose power response is the cosine series

    F_g(w) = g_0 + 2 sum_{n>=1} g_n cos(n w) = |F(w)|^2.

Carrier frequencies are shifted so the used band is symmetric about w = 0,
which makes a real filter sufficient.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParameterError
from .lp import LinearProgram

log = logging.getLogger(__name__)

# Removable singularity of the Dirichlet kernel is treated inside this band.
ALPHA_GUARD = 1e-9

DEFAULT_STOPBAND_START = 17 * math.pi / 64


def parse_angle(text) -> float:
    """Parse an angle in radians; accepts rational multiples of pi like ``"17pi/64"``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    m = re.fullmatch(r"([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\*?pi(?:/((?:\d+(?:\.\d*)?|\.\d+)))?", s)
    if m:
        num, den = m.groups()
        coef = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
        return coef * math.pi / (float(den) if den else 1.0)
    try:
        return float(s)
    except ValueError:
        raise ParameterError(f"cannot parse angle {text!r}") from None


def format_angle(value: float) -> str:
    """Inverse of :func:`parse_angle`; emits ``p pi/q`` when that is exact."""
    frac = Fraction(value / math.pi).limit_denominator(4096)
    if frac.numerator and frac.numerator * math.pi / frac.denominator == value:
        num = "" if frac.numerator == 1 else "-" if frac.numerator == -1 else str(frac.numerator)
        return f"{num}pi" if frac.denominator == 1 else f"{num}pi/{frac.denominator}"
    return repr(float(value))


def parse_carriers(text: str, M: int | None = None) -> tuple[int, ...]:
    """``"4:19"`` -> (4, ..., 19). A descending range wraps modulo ``M``."""
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":"))
            if hi >= lo:
                return tuple(range(lo, hi + 1))
            if M is None:
                raise ParameterError("wrapping carrier range needs M")
            return tuple(k % M for k in range(lo, hi + M + 1))
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise ParameterError(f"cannot parse carrier set {text!r}") from None


def carrier_start(carriers, M: int) -> int:
    """First index ``k0`` such that carriers == {k0, k0+1, ...} modulo M."""
    ks = sorted({int(k) % M for k in carriers})
    if len(ks) != len(carriers) or not ks:
        raise ParameterError("carrier set must be non-empty without duplicates")
    if any(k < 0 or k >= M for k in carriers):
        raise ParameterError(f"carriers must lie in [0, {M - 1}]")
    K = len(ks)
    if K == M:
        return 0
    members = set(ks)
    for k0 in ks:
        if (k0 - 1) % M not in members:
            if all((k0 + i) % M in members for i in range(K)):
                return k0
            break
    raise ParameterError(f"carriers {tuple(carriers)} are not consecutive modulo {M}")


@dataclass(frozen=True)
class DesignSpec:
    M: int = 128
    N: int = 16
    carriers: tuple = tuple(range(4, 20))
    lam: float = 1e-4
    stopband_start: float = DEFAULT_STOPBAND_START
    stopband_grid_S: int | None = None
    nonneg_grid_G: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "carriers", tuple(int(k) for k in self.carriers))
        if self.stopband_grid_S is None:
            object.__setattr__(self, "stopband_grid_S", 15 * self.N)
        if self.nonneg_grid_G is None:
            object.__setattr__(self, "nonneg_grid_G", 16 * self.N)
        if not (1 <= self.N <= self.M):
            raise ParameterError(f"need 1 <= N <= M, got N={self.N}, M={self.M}")
        carrier_start(self.carriers, self.M)
        if not (0.0 < self.stopband_start < math.pi):
            raise ParameterError("stopband start must lie in (0, pi)")
        if not self.lam > 0:
            raise ParameterError("lambda must be positive")
        if self.stopband_grid_S < self.N or self.nonneg_grid_G < self.N:
            raise ParameterError("grid sizes S and G must be at least N")

    @property
    def K(self) -> int:
        return len(self.carriers)

    @property
    def power_target(self) -> float:
        """Right-hand side K(M+N-1) of the power-conservation equality."""
        return float(self.K * (self.M + self.N - 1))

    def to_config(self) -> str:
        lo = carrier_start(self.carriers, self.M)
        hi = (lo + self.K - 1) % self.M
        lines = [
            f"M = {self.M}",
            f"N = {self.N}",
            f"carriers = {lo}:{hi}",
            f"lambda = {self.lam!r}",
            f"stopband_start = {format_angle(self.stopband_start)}",
            f"grid_S = {self.stopband_grid_S}",
            f"grid_G = {self.nonneg_grid_G}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config(cls, text: str) -> "DesignSpec":
        kv = read_config(text)
        M = int(kv.get("M", 128))
        kwargs = {"M": M}
        if "N" in kv:
            kwargs["N"] = int(kv["N"])
        if "carriers" in kv:
            kwargs["carriers"] = parse_carriers(kv["carriers"], M)
        if "lambda" in kv:
            kwargs["lam"] = float(kv["lambda"])
        if "stopband_start" in kv:
            kwargs["stopband_start"] = parse_angle(kv["stopband_start"])
        if "grid_S" in kv:
            kwargs["stopband_grid_S"] = int(kv["grid_S"])
        if "grid_G" in kv:
            kwargs["nonneg_grid_G"] = int(kv["grid_G"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "DesignSpec":
        return cls.from_config(Path(path).read_text())


def read_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key] = value
    return out


@dataclass(frozen=True)
class CarrierFrequencies:
    """Shifted carrier frequencies; ``omega_c`` holds the nonnegative half."""

    omega_c: np.ndarray
    M: int
    K: int
    shift: float = 0.0

    @property
    def full(self) -> np.ndarray:
        """The complete set, symmetric about zero."""
        w = self.omega_c
        if self.K % 2:
            return np.concatenate((-w[:0:-1], w))
        return np.concatenate((-w[::-1], w))


def shift_carriers(spec: DesignSpec) -> CarrierFrequencies:
    k0 = carrier_start(spec.carriers, spec.M)
    s = k0 + (spec.K - 1) / 2.0
    offsets = np.arange(spec.K) + k0 - s
    half = offsets[offsets >= 0]
    return CarrierFrequencies(2 * np.pi * half / spec.M, spec.M, spec.K, s)


def dirichlet_sq(d, M: int):
    """alpha(d)^2 with alpha(d) = sin(M d/2) / sin(d/2) and alpha(2 pi n) = M."""
    d = np.asarray(d, dtype=float)
    wrapped = np.mod(d + np.pi, 2 * np.pi) - np.pi
    singular = np.abs(wrapped) < ALPHA_GUARD
    safe = np.where(singular, 1.0, wrapped)
    val = np.sin(M * safe / 2) / np.sin(safe / 2)
    return np.where(singular, float(M * M), val * val)


def expected_spectrum(spec: DesignSpec, carriers: CarrierFrequencies, omega):
    """E|X(w)|^2 of the unfiltered OFDM block with unit-energy symbols."""
    omega = np.asarray(omega, dtype=float)
    wc = carriers.full
    vals = dirichlet_sq(wc[:, None] - omega.reshape(-1)[None, :], spec.M).sum(axis=0) / spec.M
    return vals.reshape(omega.shape)


def cosine_matrix(N: int, omega) -> np.ndarray:
    """Rows ``[1, 2cos(w), ..., 2cos((N-1)w)]`` so that ``F_g(w) = row @ g``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    C = 2.0 * np.cos(np.outer(omega, np.arange(N)))
    C[:, 0] = 1.0
    return C


def power_response(g, omega):
    """F_g(w) = g_0 + 2 sum g_n cos(n w)."""
    g = np.asarray(g, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return (cosine_matrix(len(g), omega.reshape(-1)) @ g).reshape(omega.shape)


def power_vector(spec: DesignSpec, carriers: CarrierFrequencies) -> np.ndarray:
    """b_c such that the power-conservation equality reads ``b_c @ g == K(M+N-1)``."""
    M, N = spec.M, spec.N
    if N > M:
        raise ParameterError("filter length N exceeds M")
    n = np.arange(1, N)
    b = np.empty(N)
    b[0] = spec.K * M
    b[1:] = 2.0 * (M - n) * np.cos(np.outer(n, carriers.full)).sum(axis=1)
    return b


def stopband_grid(spec: DesignSpec) -> np.ndarray:
    return np.linspace(spec.stopband_start, np.pi, spec.stopband_grid_S)


def nonneg_grid(spec: DesignSpec) -> np.ndarray:
    return np.linspace(0.0, np.pi, spec.nonneg_grid_G)


@dataclass
class DesignLP(LinearProgram):
    """The design LP plus the frequency grids it was built from."""

    stopband_omega: np.ndarray = field(default_factory=lambda: np.empty(0))
    nonneg_omega: np.ndarray = field(default_factory=lambda: np.empty(0))
    carrier_omega: np.ndarray = field(default_factory=lambda: np.empty(0))


def assemble_lp(spec: DesignSpec, carriers: CarrierFrequencies | None = None,
                allow_overlap: bool = False) -> DesignLP:
    """Build ``min t1 - lam t2`` over ``x = (g_0..g_{N-1}, t1, t2)``.

    Rows of the inequality system, in order: stopband side-lobe bounds,
    carrier gain bounds, nonnegativity of F_g on a uniform grid.
    """
    if carriers is None:
        carriers = shift_carriers(spec)
    N, M = spec.N, spec.M
    wc = carriers.omega_c
    if wc.max() >= spec.stopband_start and not allow_overlap:
        raise ConfigurationError(
            f"stopband starting at {spec.stopband_start:.6f} rad contains carriers "
            f"(outermost at {wc.max():.6f} rad); side-lobe and gain constraints contradict")

    w_s = stopband_grid(spec)
    guard = 2 * np.pi / (8 * M)
    near = np.any(np.abs(w_s[:, None] - wc[None, :]) <= guard, axis=1)
    if near.any():
        log.warning("dropping %d stopband grid points within %.3g rad of a carrier",
                    int(near.sum()), guard)
        w_s = w_s[~near]
    w_g = nonneg_grid(spec)

    E = expected_spectrum(spec, carriers, w_s)
    side = np.hstack([E[:, None] * cosine_matrix(N, w_s), -np.ones((len(w_s), 1)),
                      np.zeros((len(w_s), 1))])
    gain = np.hstack([-cosine_matrix(N, wc), np.zeros((len(wc), 1)), np.ones((len(wc), 1))])
    nonneg = np.hstack([-cosine_matrix(N, w_g), np.zeros((len(w_g), 2))])
    A_ub = np.vstack([side, gain, nonneg])
    b_ub = np.zeros(A_ub.shape[0])

    A_eq = np.hstack([power_vector(spec, carriers), [0.0, 0.0]])[None, :]
    b_eq = np.array([spec.power_target])

    c = np.zeros(N + 2)
    c[N] = 1.0
    c[N + 1] = -spec.lam
    lower = np.full(N + 2, -np.inf)
    lower[N:] = 0.0
    names = [f"g{n}" for n in range(N)] + ["t1", "t2"]
    return DesignLP(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lower_bounds=lower,
                    names=names, stopband_omega=w_s, nonneg_omega=w_g, carrier_omega=wc)
