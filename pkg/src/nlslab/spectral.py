"""Periodic Cartesian grids on [-L, L)^n with FFT-based operators and quadrature."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class Grid:
    n: int
    N: int
    L: float

    def __post_init__(self) -> None:
        if self.n not in (1, 2, 3):
            raise ValueError("spectral grids support n = 1, 2, 3")
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError("points per axis must be a power of two >= 16")
        if not self.L > 0:
            raise ValueError("half-length L must be positive")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def xi(self) -> np.ndarray:
        """Angular wavenumbers (pi/L) * m with the Nyquist mode at m = -N/2."""
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x] * self.n), indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        return sum(c * c for c in self.coords)

    @cached_property
    def ksq(self) -> np.ndarray:
        ks = np.meshgrid(*([self.xi] * self.n), indexing="ij")
        return sum(k * k for k in ks)

    @cached_property
    def _k_odd(self) -> tuple[np.ndarray, ...]:
        xi = self.xi.copy()
        xi[self.N // 2] = 0.0  # odd derivatives drop the Nyquist mode
        return tuple(np.meshgrid(*([xi] * self.n), indexing="ij"))

    # -- operators ---------------------------------------------------------
    def fft(self, a: np.ndarray) -> np.ndarray:
        return sfft.fftn(a)

    def ifft(self, a: np.ndarray) -> np.ndarray:
        return sfft.ifftn(a)

    def _check(self, a: np.ndarray) -> None:
        if np.shape(a) != self.shape:
            raise ValueError(f"field shape {np.shape(a)} does not match grid {self.shape}")

    def laplacian(self, a: np.ndarray) -> np.ndarray:
        self._check(a)
        out = self.ifft(-self.ksq * self.fft(a))
        return out.real if np.isrealobj(a) else out

    def gradient(self, a: np.ndarray) -> list[np.ndarray]:
        self._check(a)
        ah = self.fft(a)
        out = [self.ifft(1j * k * ah) for k in self._k_odd]
        return [g.real for g in out] if np.isrealobj(a) else out

    def integrate(self, a: np.ndarray) -> float:
        self._check(a)
        return float(np.real(np.sum(a)) * self.cell_volume)

    def gradient_norm_sq(self, a: np.ndarray) -> float:
        """∫|∇a|² via Parseval: h^n N^{-n} Σ |ξ|² |DFT a|²."""
        self._check(a)
        ah = self.fft(a)
        return float(np.sum(self.ksq * (ah.real ** 2 + ah.imag ** 2)) * self.cell_volume / self.N ** self.n)

    def solve_helmholtz(self, rhs: np.ndarray, gamma: float, b: float) -> np.ndarray:
        """Solve (-gamma Δ + b) u = rhs."""
        out = self.ifft(self.fft(rhs) / (gamma * self.ksq + b))
        return out.real if np.isrealobj(rhs) else out

    def helmholtz(self, u: np.ndarray, gamma: float, b: float) -> np.ndarray:
        return -gamma * self.laplacian(u) + b * u

    def boundary_fraction(self, density: np.ndarray, width: float = 0.1) -> float:
        """Share of ∫density lying in the outer band |x_i| > (1 - width) L."""
        edge = np.zeros(self.shape, dtype=bool)
        for c in self.coords:
            edge |= np.abs(c) > (1.0 - width) * self.L
        total = float(np.sum(density))
        return float(np.sum(density[edge]) / total) if total > 0 else 0.0

    def boundary_sup(self, a: np.ndarray) -> float:
        """Largest |a| on the outermost grid layer."""
        idx = [slice(None)] * self.n
        vals = []
        for ax in range(self.n):
            sl = list(idx)
            sl[ax] = 0
            vals.append(np.max(np.abs(a[tuple(sl)])))
        return float(max(vals))

    # -- resampling ----------------------------------------------------------
    def _interp_matrix(self, pts: np.ndarray) -> np.ndarray:
        phase = np.outer(pts + self.L, self.xi)
        E = np.exp(1j * phase)
        E[:, self.N // 2] = np.cos(phase[:, self.N // 2])
        return E / self.N

    def dilate(self, a: np.ndarray, scale: float) -> np.ndarray:
        """Sample x -> a(x / scale) on this grid by trigonometric interpolation.

        Points with x/scale outside the box are set to zero, so ``a`` must have
        decayed at the boundary.
        """
        self._check(a)
        if scale == 1.0:
            return np.array(a, copy=True)
        pts = self.x / scale
        inside = np.abs(pts) < self.L
        E = self._interp_matrix(pts)
        E[~inside] = 0.0
        coef = self.fft(a)
        for ax in range(self.n):
            coef = np.moveaxis(np.tensordot(E, coef, axes=([1], [ax])), 0, ax)
        return coef.real if np.isrealobj(a) else coef

    def rescaled(self, scale: float) -> "Grid":
        """Grid on which the same samples represent x -> a(x / scale)."""
        return Grid(self.n, self.N, self.L * scale)

    def sample_line(self, line: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Evaluate the trigonometric interpolant of one grid line at ``pts``."""
        E = self._interp_matrix(np.asarray(pts, dtype=float))
        return E @ sfft.fft(line)


@dataclass(frozen=True)
class FieldState:
    grid: object
    components: tuple[np.ndarray, ...]
    t: float = 0.0

    def __post_init__(self) -> None:
        comps = tuple(np.asarray(c) for c in self.components)
        shape = self.grid.shape
        for c in comps:
            if c.shape != shape:
                raise ValueError(f"component shape {c.shape} != grid shape {shape}")
        object.__setattr__(self, "components", comps)

    @property
    def l(self) -> int:
        return len(self.components)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(c)) for c in self.components)

    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(c)) for c in self.components))

    def scaled(self, a: float) -> "FieldState":
        return FieldState(self.grid, tuple(a * c for c in self.components), self.t)


def zero_state(grid, l: int, t: float = 0.0) -> FieldState:
    return FieldState(grid, tuple(np.zeros(grid.shape, dtype=complex) for _ in range(l)), t)


def gaussian_state(grid: Grid, amplitudes: Sequence[complex], width: float = 1.0) -> FieldState:
    g = np.exp(-grid.r2 / width ** 2)
    return FieldState(grid, tuple(complex(a) * g for a in amplitudes))


# --------------------------------------------------------------------------
# .nlsfld snapshots: little-endian header (n:u64, N:u64, L:f64, l:u64, t:f64),
# then l * N^n complex values as (re, im) f64 pairs, row-major.

_HEADER = struct.Struct("<QQdQd")


def write_field(path: str | Path, state: FieldState) -> None:
    grid = state.grid
    if not isinstance(grid, Grid):
        raise TypeError(".nlsfld snapshots store Cartesian grids only")
    data = np.stack([np.asarray(c, dtype="<c16") for c in state.components])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(grid.n, grid.N, grid.L, state.l, float(state.t)))
        fh.write(np.ascontiguousarray(data).tobytes(order="C"))
    tmp.replace(path)


def read_field(path: str | Path) -> FieldState:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated .nlsfld header")
    n, N, L, l, t = _HEADER.unpack_from(raw)
    grid = Grid(int(n), int(N), L)
    count = int(l) * N ** n
    body = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if body.size != count:
        raise ValueError(f"expected {count} complex values, found {body.size}")
    arr = body.reshape((int(l),) + grid.shape).astype(complex)
    return FieldState(grid, tuple(arr[k] for k in range(int(l))), t)
