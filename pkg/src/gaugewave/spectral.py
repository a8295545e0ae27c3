"""Fourier-side field representation and multiplier calculus on periodic boxes.

Conventions
-----------
* The domain is the periodic box ``[0, L)^dim`` sampled on a uniform lattice
  of ``n`` points per axis, ``dim`` in {2, 3}; wavenumbers live on
  ``(2*pi/L) * Z^dim``.
* A field is stored by its Fourier coefficients with the forward transform
  normalized by ``1/n^dim``, so ``f(x) = sum_k c_k exp(i k.x)`` holds exactly
  on the lattice and Parseval reads ``int |f|^2 dx = L^dim * sum |c_k|^2``.
* The unpaired Nyquist modes (index ``n/2`` on any axis) are kept identically
  zero.  This makes the retained mode set symmetric under negation, so real
  fields have exactly Hermitian coefficient arrays and odd multipliers
  (derivatives, Riesz transforms) preserve reality.
* Products of fields are never formed on the bare lattice.  They are
  evaluated on a ``3n/2`` zero-padded lattice and truncated back, which makes
  every retained mode of a quadratic product an exact convolution value.
  Cubic and quartic expressions are built as nested quadratics with a
  truncation between stages; the evolution and energy code rely on that exact
  nesting discipline.
* ``inv_laplacian`` and ``inv_modulus`` annihilate the zero mode; the
  Helmholtz split assigns the mean of a vector field to its divergence-free
  part.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from ._fft import fftn, ifftn

_HERMITIAN_RTOL = 1e-13


class Grid:
    """Uniform periodic lattice with cached spectral multipliers.

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    n : int
        Points per axis; even and at least 8.
    box_length : float
        Side length L of the periodic box.
    """

    def __init__(self, dim: int, n: int, box_length: float):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        if n < 8 or n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {n}")
        if not (box_length > 0):
            raise ValueError(f"box_length must be positive, got {box_length}")
        self.dim = int(dim)
        self.n = int(n)
        self.box_length = float(box_length)

    # -- basic geometry -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def npad(self) -> int:
        """Padded lattice size for dealiased products (3/2 rule)."""
        return (3 * self.n) // 2

    @property
    def pad_shape(self) -> tuple:
        return (self.npad,) * self.dim

    @property
    def cell_volume(self) -> float:
        return (self.box_length / self.n) ** self.dim

    @property
    def pad_cell_volume(self) -> float:
        return (self.box_length / self.npad) ** self.dim

    @property
    def volume(self) -> float:
        return self.box_length ** self.dim

    def axis_points(self) -> np.ndarray:
        return np.arange(self.n) * (self.box_length / self.n)

    def meshgrid(self, pad: bool = False) -> list:
        """Physical coordinates per axis, shaped for broadcasting."""
        m = self.npad if pad else self.n
        x = np.arange(m) * (self.box_length / m)
        return list(np.meshgrid(*([x] * self.dim), indexing="ij"))

    # -- spectral lattice ------------------------------------------------

    @cached_property
    def k(self) -> list:
        """Wavenumber array per axis, each broadcast to the full shape."""
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.box_length / self.n)
        return list(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(ki * ki for ki in self.k)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def active(self) -> np.ndarray:
        """Mask of retained modes (unpaired Nyquist planes excluded)."""
        idx = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        keep1 = np.abs(idx) != self.n // 2
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            mask &= keep1.reshape(shape)
        return mask

    @cached_property
    def inv_lap(self) -> np.ndarray:
        """Multiplier of the zero-mean inverse Laplacian, -1/|k|^2."""
        k2 = self.k2.copy()
        k2[(0,) * self.dim] = 1.0
        out = -1.0 / k2
        out[(0,) * self.dim] = 0.0
        return out

    @cached_property
    def inv_abs(self) -> np.ndarray:
        """Multiplier 1/|k| with the zero mode annihilated."""
        ka = self.kabs.copy()
        ka[(0,) * self.dim] = 1.0
        out = 1.0 / ka
        out[(0,) * self.dim] = 0.0
        return out

    @cached_property
    def kmax(self) -> float:
        """Largest |k| over retained modes (CFL bound)."""
        kmax1 = (2.0 * np.pi / self.box_length) * (self.n // 2 - 1)
        return float(kmax1 * np.sqrt(self.dim))

    @cached_property
    def _reflect_index(self) -> tuple:
        rev = (-np.arange(self.n)) % self.n
        return np.ix_(*([rev] * self.dim))

    @cached_property
    def _pad_scatter(self) -> tuple:
        """Index arrays embedding retained modes into the padded lattice."""
        n, m = self.n, self.npad
        src = np.r_[0 : n // 2, n // 2 + 1 : n]
        dst = np.r_[0 : n // 2, m - n // 2 + 1 : m]
        return np.ix_(*([src] * self.dim)), np.ix_(*([dst] * self.dim))

    # -- identity --------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Grid)
            and self.dim == other.dim
            and self.n == other.n
            and self.box_length == other.box_length
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.n, self.box_length))

    def __repr__(self) -> str:
        return f"Grid(dim={self.dim}, n={self.n}, box_length={self.box_length})"


# ---------------------------------------------------------------------------
# raw coefficient-array helpers (shared by the physics modules)
# ---------------------------------------------------------------------------


def _project_active(grid: Grid, c: np.ndarray) -> np.ndarray:
    out = np.where(grid.active, c, 0.0 + 0.0j)
    return np.ascontiguousarray(out)


def _deriv(grid: Grid, c: np.ndarray, axis: int) -> np.ndarray:
    return c * (1j * grid.k[axis])


def _div(grid: Grid, comps: Sequence[np.ndarray]) -> np.ndarray:
    acc = _deriv(grid, comps[0], 0)
    for ax in range(1, grid.dim):
        acc += _deriv(grid, comps[ax], ax)
    return acc


def _pad_phys(grid: Grid, c: np.ndarray, real: bool) -> np.ndarray:
    """Physical samples of a band-limited field on the padded lattice."""
    src, dst = grid._pad_scatter
    buf = np.zeros(grid.pad_shape, dtype=complex)
    buf[dst] = c[src]
    vals = ifftn(buf)
    vals *= grid.npad ** grid.dim
    return vals.real.copy() if real else vals


def _band(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Truncate padded-lattice samples back to retained-band coefficients."""
    src, dst = grid._pad_scatter
    spec = fftn(values)
    spec *= 1.0 / grid.npad ** grid.dim
    out = np.zeros(grid.shape, dtype=complex)
    out[src] = spec[dst]
    return out


def _phys(grid: Grid, c: np.ndarray, real: bool) -> np.ndarray:
    """Physical samples on the bare lattice."""
    vals = ifftn(c) * (grid.n ** grid.dim)
    return vals.real.copy() if real else vals


def _spec(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Coefficients from bare-lattice samples, Nyquist modes dropped."""
    c = fftn(values) * (1.0 / grid.n ** grid.dim)
    return _project_active(grid, c)


def _hermitian_defect(grid: Grid, c: np.ndarray) -> float:
    refl = np.conj(c[grid._reflect_index])
    scale = max(1.0, float(np.abs(c).max(initial=0.0)))
    return float(np.abs(c - refl).max(initial=0.0)) / scale


# ---------------------------------------------------------------------------
# field containers
# ---------------------------------------------------------------------------


@dataclass
class SpectralField:
    """Band-limited scalar field stored by Fourier coefficients.

    ``real=True`` asserts Hermitian coefficient symmetry; operators preserve
    the flag where the calculus guarantees it.
    """

    grid: Grid
    coeffs: np.ndarray
    real: bool = False

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs: np.ndarray, real: bool = False) -> "SpectralField":
        c = np.asarray(coeffs, dtype=complex)
        if c.shape != grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {grid.shape}")
        c = _project_active(grid, c)
        if real and _hermitian_defect(grid, c) > _HERMITIAN_RTOL:
            raise ValueError("coefficients of a real field must be Hermitian-symmetric")
        return cls(grid, c, real)

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, real: bool | None = None) -> "SpectralField":
        v = np.asarray(values)
        if v.shape != grid.shape:
            raise ValueError(f"sample shape {v.shape} does not match grid {grid.shape}")
        if real is None:
            real = not np.iscomplexobj(v)
        return cls(grid, _spec(grid, v.astype(complex)), real)

    @classmethod
    def zero(cls, grid: Grid, real: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex), real)

    def values(self, pad: bool = False) -> np.ndarray:
        """Physical samples; ``pad=True`` evaluates on the 3/2 lattice."""
        if pad:
            return _pad_phys(self.grid, self.coeffs, self.real)
        return _phys(self.grid, self.coeffs, self.real)

    def mean(self) -> complex | float:
        m = self.coeffs[(0,) * self.grid.dim]
        return float(m.real) if self.real else complex(m)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.real)

    # arithmetic (linear operations only; products must be dealiased)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_mate(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_mate(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def __mul__(self, scalar) -> "SpectralField":
        if isinstance(scalar, SpectralField):
            raise TypeError("use dealiased_product for field*field products")
        s = complex(scalar)
        real = self.real and s.imag == 0.0
        return SpectralField(self.grid, self.coeffs * s, real)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs, self.real)

    def conj(self) -> "SpectralField":
        return SpectralField(self.grid, np.conj(self.coeffs[self.grid._reflect_index]), self.real)

    def _check_mate(self, other: "SpectralField") -> None:
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")


@dataclass
class VectorField:
    """Tuple of scalar fields sharing one grid (one per spatial axis)."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("vector field needs at least one component")
        g = comps[0].grid
        if len(comps) != g.dim:
            raise ValueError(f"expected {g.dim} components, got {len(comps)}")
        for c in comps[1:]:
            if c.grid != g:
                raise ValueError("components live on different grids")
        self.components = comps

    @classmethod
    def zero(cls, grid: Grid, real: bool = True) -> "VectorField":
        return cls(tuple(SpectralField.zero(grid, real) for _ in range(grid.dim)))

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    def __getitem__(self, i: int) -> SpectralField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar) -> "VectorField":
        return VectorField(tuple(c * scalar for c in self.components))

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(tuple(-c for c in self.components))

    def copy(self) -> "VectorField":
        return VectorField(tuple(c.copy() for c in self.components))


# ---------------------------------------------------------------------------
# multiplier operators
# ---------------------------------------------------------------------------


def partial_deriv(f: SpectralField, axis: int) -> SpectralField:
    """Spectral partial derivative along ``axis`` (multiplier i*k_axis)."""
    g = f.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for dim {g.dim}")
    return SpectralField(g, _deriv(g, f.coeffs, axis), f.real)


def gradient(f: SpectralField) -> VectorField:
    return VectorField(tuple(partial_deriv(f, ax) for ax in range(f.grid.dim)))


def divergence(A: VectorField) -> SpectralField:
    g = A.grid
    real = all(c.real for c in A)
    return SpectralField(g, _div(g, [c.coeffs for c in A]), real)


def curl(A: VectorField):
    """Curl: returns a scalar field in 2D, a vector field in 3D."""
    g = A.grid
    real = all(c.real for c in A)
    cs = [c.coeffs for c in A]
    if g.dim == 2:
        return SpectralField(g, _deriv(g, cs[1], 0) - _deriv(g, cs[0], 1), real)
    comps = (
        SpectralField(g, _deriv(g, cs[2], 1) - _deriv(g, cs[1], 2), real),
        SpectralField(g, _deriv(g, cs[0], 2) - _deriv(g, cs[2], 0), real),
        SpectralField(g, _deriv(g, cs[1], 0) - _deriv(g, cs[0], 1), real),
    )
    return VectorField(comps)


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs, f.real)


def inv_laplacian(f: SpectralField) -> SpectralField:
    """Solve ``lap u = f`` on zero-mean data; the zero mode maps to 0."""
    return SpectralField(f.grid, f.grid.inv_lap * f.coeffs, f.real)


def inv_modulus(f: SpectralField) -> SpectralField:
    """Order ``-1`` smoothing ``|D|^{-1}``; the zero mode maps to 0."""
    return SpectralField(f.grid, f.grid.inv_abs * f.coeffs, f.real)


def riesz(f: SpectralField, axis: int) -> SpectralField:
    """Riesz transform, multiplier ``i k_axis / |k|`` (0 on the zero mode)."""
    g = f.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for dim {g.dim}")
    return SpectralField(g, (1j * g.k[axis]) * g.inv_abs * f.coeffs, f.real)


def helmholtz_split(A: VectorField) -> tuple:
    """Split ``A = A_df + A_cf`` (divergence-free, curl-free).

    The mean of ``A`` is assigned to the divergence-free part, so the
    curl-free part always has zero mean.
    """
    g = A.grid
    d = _div(g, [c.coeffs for c in A])
    pot = g.inv_lap * d  # inverse-Laplacian of div A
    cf, df = [], []
    for ax in range(g.dim):
        cf_c = _deriv(g, pot, ax)
        cf.append(SpectralField(g, cf_c, A[ax].real))
        df.append(SpectralField(g, A[ax].coeffs - cf_c, A[ax].real))
    return VectorField(tuple(df)), VectorField(tuple(cf))


def project_df(A: VectorField) -> VectorField:
    """Divergence-free (Leray) projection in 3D; zero mode passes through."""
    if A.grid.dim != 3:
        raise ValueError("project_df is the 3D projector; use helmholtz_split in 2D")
    df, _ = helmholtz_split(A)
    return df


# ---------------------------------------------------------------------------
# dealiased products and null forms
# ---------------------------------------------------------------------------


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product via the zero-padded lattice (alias-free band)."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    gr = f.grid
    fv = _pad_phys(gr, f.coeffs, f.real)
    gv = _pad_phys(gr, g.coeffs, g.real)
    return SpectralField(gr, _band(gr, fv * gv), f.real and g.real)


def null_form(u: SpectralField, v: SpectralField, i: int, j: int) -> SpectralField:
    """Antisymmetric derivative bilinear ``du_i dv_j - du_j dv_i``, dealiased."""
    g = u.grid
    if not (0 <= i < g.dim and 0 <= j < g.dim):
        raise ValueError(f"axes ({i}, {j}) out of range for dim {g.dim}")
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    ui = _pad_phys(g, _deriv(g, u.coeffs, i), u.real)
    uj = _pad_phys(g, _deriv(g, u.coeffs, j), u.real)
    vi = _pad_phys(g, _deriv(g, v.coeffs, i), v.real)
    vj = _pad_phys(g, _deriv(g, v.coeffs, j), v.real)
    return SpectralField(g, _band(g, ui * vj - uj * vi), u.real and v.real)


# ---------------------------------------------------------------------------
# pairings and norms
# ---------------------------------------------------------------------------


def inner(f: SpectralField, g: SpectralField) -> complex:
    """L2 pairing ``int f conj(g) dx`` via Parseval."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return complex(f.grid.volume * np.vdot(g.coeffs, f.coeffs))


def integral(f: SpectralField) -> complex | float:
    out = f.grid.volume * f.coeffs[(0,) * f.grid.dim]
    return float(out.real) if f.real else complex(out)


def l2_norm(f) -> float:
    """L2 norm of a scalar or vector field."""
    if isinstance(f, VectorField):
        return float(np.sqrt(sum(l2_norm(c) ** 2 for c in f)))
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2)))


def h1dot_norm(f) -> float:
    """Homogeneous H^1 seminorm, ``|| |k| c ||`` in L2 scaling."""
    if isinstance(f, VectorField):
        return float(np.sqrt(sum(h1dot_norm(c) ** 2 for c in f)))
    g = f.grid
    return float(np.sqrt(g.volume * np.sum(g.k2 * np.abs(f.coeffs) ** 2)))


def grad_norm(A: VectorField) -> float:
    """Full gradient norm ``(sum_ij ||d_i A_j||^2)^(1/2)``."""
    return float(np.sqrt(sum(h1dot_norm(c) ** 2 for c in A)))


def zero_mean(f: SpectralField) -> SpectralField:
    c = f.coeffs.copy()
    c[(0,) * f.grid.dim] = 0.0
    return SpectralField(f.grid, c, f.real)


# ---------------------------------------------------------------------------
# bilinear structure identities
# ---------------------------------------------------------------------------


@dataclass
class IdentityReport:
    """Outcome of a bilinear identity check.

    ``alpha`` is the least-squares scalar fitting LHS = alpha * RHS; the
    residual is relative to the LHS norm after calibration.  ``raw_residual``
    compares the two sides without calibration.
    """

    name: str
    alpha: float
    residual: float
    raw_residual: float
    lhs_norm: float
    rhs_norm: float
    lhs: object
    rhs: object

    def summary(self) -> str:
        return (
            f"{self.name}: alpha={self.alpha:+.12f} residual={self.residual:.3e} "
            f"(raw {self.raw_residual:.3e})"
        )


def _alpha_fit(lhs_arrays: list, rhs_arrays: list) -> tuple:
    num = 0.0
    den = 0.0
    l2l = 0.0
    l2r = 0.0
    for lc, rc in zip(lhs_arrays, rhs_arrays):
        num += float(np.real(np.vdot(rc, lc)))
        den += float(np.real(np.vdot(rc, rc)))
        l2l += float(np.real(np.vdot(lc, lc)))
        l2r += float(np.real(np.vdot(rc, rc)))
    alpha = num / den if den > 0 else 0.0
    resid2 = 0.0
    raw2 = 0.0
    for lc, rc in zip(lhs_arrays, rhs_arrays):
        resid2 += float(np.sum(np.abs(lc - alpha * rc) ** 2))
        raw2 += float(np.sum(np.abs(lc - rc) ** 2))
    scale = np.sqrt(l2l) if l2l > 0 else 1.0
    return alpha, float(np.sqrt(resid2)) / scale, float(np.sqrt(raw2)) / scale, np.sqrt(l2l), np.sqrt(l2r)


def check_gradient_coupling_identity(A_df: VectorField, phi: SpectralField) -> IdentityReport:
    """Express ``2 A.grad(phi)`` (A divergence-free) through null forms.

    For zero-mean divergence-free A the combination
    ``sum_ij Q_ij(phi, |D|^{-1}(R_i A_j - R_j A_i))`` reproduces
    ``2 sum_i A_i d_i phi`` exactly; the report carries the calibration
    scalar (expected +1) and the relative residual.
    """
    g = A_df.grid
    if g.dim != 3:
        raise ValueError("identity check requires dim = 3")
    if phi.grid != g:
        raise ValueError("fields live on different grids")
    div_rel = l2_norm(divergence(A_df)) / max(l2_norm(A_df), 1e-300)
    if div_rel > 1e-10:
        raise ValueError(f"input must be divergence-free (relative residual {div_rel:.2e})")
    mean_scale = max(abs(c.coeffs[(0,) * g.dim]) for c in A_df)
    if mean_scale > 1e-12 * max(l2_norm(A_df), 1.0):
        raise ValueError("input must have zero mean")

    phiv = _pad_phys(g, phi.coeffs, phi.real)
    lhs_vals = np.zeros_like(phiv)
    for ax in range(g.dim):
        av = _pad_phys(g, A_df[ax].coeffs, A_df[ax].real)
        dv = _pad_phys(g, _deriv(g, phi.coeffs, ax), phi.real)
        lhs_vals += av * dv
    lhs = SpectralField(g, _band(g, 2.0 * lhs_vals), False)

    rhs_c = np.zeros(g.shape, dtype=complex)
    for i in range(g.dim):
        for j in range(i + 1, g.dim):
            bij = (1j * g.k[i]) * g.inv_abs * A_df[j].coeffs - (1j * g.k[j]) * g.inv_abs * A_df[i].coeffs
            psi = SpectralField(g, g.inv_abs * bij, A_df[i].real)
            rhs_c += 2.0 * null_form(phi, psi, i, j).coeffs
    rhs = SpectralField(g, rhs_c, False)

    alpha, resid, raw, ln, rn = _alpha_fit([lhs.coeffs], [rhs.coeffs])
    return IdentityReport("gradient-coupling", alpha, resid, raw, ln, rn, lhs, rhs)


def check_current_projection_identity(phi: SpectralField) -> IdentityReport:
    """Express the projected current of ``phi`` through null forms.

    The divergence-free projection of ``Im(phi conj(grad phi))`` equals, on
    nonzero modes, ``-2 R_j |D|^{-1} Q_ij(Re phi, Im phi)`` summed over j.
    Both sides are compared with the zero mode removed; the calibration
    scalar is expected to sit at -1 with the literal ordering used here
    (conjugating the other factor flips it to +1).
    """
    g = phi.grid
    if g.dim != 3:
        raise ValueError("identity check requires dim = 3")
    u = SpectralField(g, 0.5 * (phi.coeffs + np.conj(phi.coeffs[g._reflect_index])), True)
    v = SpectralField(g, -0.5j * (phi.coeffs - np.conj(phi.coeffs[g._reflect_index])), True)

    phiv = _pad_phys(g, phi.coeffs, phi.real)
    current = []
    for ax in range(g.dim):
        dv = _pad_phys(g, _deriv(g, phi.coeffs, ax), phi.real)
        current.append(_band(g, np.imag(phiv * np.conj(dv))))
    # divergence-free projection, zero mode dropped on both sides
    d = _div(g, current)
    pot = g.inv_lap * d
    lhs_comps = []
    for ax in range(g.dim):
        c = current[ax] - _deriv(g, pot, ax)
        c[(0,) * g.dim] = 0.0
        lhs_comps.append(SpectralField(g, c, True))

    rhs_comps = []
    for i in range(g.dim):
        acc = np.zeros(g.shape, dtype=complex)
        for j in range(g.dim):
            if j == i:
                continue
            q = null_form(u, v, i, j)
            acc += 2.0 * (1j * g.k[j]) * g.inv_abs * g.inv_abs * q.coeffs
        rhs_comps.append(SpectralField(g, acc, True))

    alpha, resid, raw, ln, rn = _alpha_fit(
        [c.coeffs for c in lhs_comps], [c.coeffs for c in rhs_comps]
    )
    lhs = VectorField(tuple(lhs_comps))
    rhs = VectorField(tuple(rhs_comps))
    return IdentityReport("current-projection", alpha, resid, raw, ln, rn, lhs, rhs)
