"""Time integration, run records, and twin-run cross validation.

Integrators
-----------
Both schemes advance the second-order systems in first-order form.  The
``leapfrog`` scheme is a symmetric kick-drift-kick step, one force evaluation
per step once the cache is warm, time reversible and symplectic in the
kick-drift sense:

* unsplit 3D: plain kick-drift-kick;
* split 3D: the curl-free potential drifts with the constraint velocity,
  which is exactly constant along a drift (the charge density is invariant
  under ``phi -> phi + s dphi``);
* unsplit 2D: the magnetic force ``kappa J dA`` is linear in the velocity, so
  each half kick solves the centered implicit relation
  ``(I - b J) v' = (I + b J) v + (dt/2) F`` with ``b = dt kappa / 4``; ``J``
  is the quarter-turn ``(v1, v2) -> (-v2, v1)`` and the inverse is
  ``(I + b J)/(1 + b^2)``, applied mode by mode;
* split 2D: the same centered kick with the projected rotation ``P J``, whose
  square vanishes off the zero mode so the inverse is ``I + b P J`` there and
  ``(I + b J)/(1 + b^2)`` at the zero mode.  Kicks are ordered scalar-gauge
  before the drift and gauge-scalar after it, and the constraint velocity
  entering a gauge kick is frozen from the neighboring scalar stage; the
  composition is palindromic and reverses exactly.  The curl-free drift uses
  the constraint velocity at the solenoidal midpoint, which integrates the
  linear-in-A magnetic part exactly.

``rk4`` is the classical fourth-order scheme over the flattened coefficient
vector, available for both formulations as an accuracy reference.

Records
-------
``run`` samples a fixed row schema at the snapshot cadence.  Output is
deliberately timestamp-free so a config and seed reproduce files byte for
byte.  Rows hold slacks of the L2 growth bounds under their report tokens
(``bound37_slack`` for A, ``bound39_slack`` for phi, ``bound52_slack`` for
the neutral field, nan when absent).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import mcsh, mkg
from .analysis import growth_slacks
from .gauge import (
    GaugeFunction,
    coulomb_fix,
    gauge_transform_mcsh,
    gauge_transform_mkg,
    gauss_residual_mcsh,
    gauss_residual_mkg,
)
from .mcsh import DecomposedMcshState, McshState, PhysParams
from .mkg import DecomposedMkgState, MkgState
from .spectral import (
    SpectralField,
    VectorField,
    _deriv,
    _div,
    dealiased_product,
    h1dot_norm,
    l2_norm,
    partial_deriv,
)

SCHEMES = ("leapfrog", "rk4")
FORMULATIONS = ("raw", "decomposed")

# stability interval on the imaginary axis times a 0.5 safety factor
_CFL_LIMIT = {"leapfrog": 1.0, "rk4": float(np.sqrt(2.0))}

_ADMISSIBLE_TOL = 1e-10
_ENERGY_DRIFT_LIMIT = 0.1
_FIELD_MAX_LIMIT = 1e8

COLUMNS = (
    "t", "E", "gauss_l2", "l2_A", "l2_phi", "l2_N",
    "h1dot_A", "h1dot_phi",
    "bound37_slack", "bound39_slack", "bound52_slack",
)


@dataclass(frozen=True)
class IntegratorConfig:
    """Scheme, step size, horizon, and sampling cadence of one run."""

    dt: float
    t_final: float
    scheme: str = "leapfrog"
    snapshot_every: int = 10
    formulation: str = "raw"
    regauge_every: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.formulation not in FORMULATIONS:
            raise ValueError(
                f"unknown formulation {self.formulation!r}, expected one of {FORMULATIONS}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise ValueError("snapshot_every must be a positive step count")
        if self.regauge_every is not None and (
                int(self.regauge_every) != self.regauge_every or self.regauge_every < 1):
            raise ValueError("regauge_every must be a positive step count or None")

    def n_steps(self) -> int:
        n = int(round(self.t_final / self.dt))
        if abs(n * self.dt - self.t_final) > 1e-9 * max(self.t_final, self.dt):
            raise ValueError("t_final must be an integer multiple of dt")
        return n

    def check_cfl(self, grid) -> None:
        limit = _CFL_LIMIT[self.scheme]
        if self.dt * grid.kmax > limit * (1.0 + 1e-12):
            raise ValueError(
                f"CFL violation: dt*kmax = {self.dt * grid.kmax:.3g} exceeds "
                f"{limit:.3g} for scheme {self.scheme!r}")


class BlowupError(RuntimeError):
    """Raised when a run leaves the trust region; carries the partial record."""

    def __init__(self, diagnostic: str, record: "RunRecord"):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic
        self.record = record


# ---------------------------------------------------------------------------
# leapfrog steppers (in place, returning the fresh force cache)
# ---------------------------------------------------------------------------


def _lf_mkg_raw(st: MkgState, dt: float, acc):
    if acc is None:
        acc = mkg.rhs_raw_mkg(st)
    h = 0.5 * dt
    st.dA = st.dA + acc[0] * h
    st.dphi = st.dphi + acc[1] * h
    st.A = st.A + st.dA * dt
    st.phi = st.phi + st.dphi * dt
    acc = mkg.rhs_raw_mkg(st)
    st.dA = st.dA + acc[0] * h
    st.dphi = st.dphi + acc[1] * h
    st.time += dt
    return acc


def _lf_mkg_dec(d: DecomposedMkgState, dt: float, acc):
    if acc is None:
        _, dda, ddphi = mkg.rhs_decomposed_mkg(d, check=False)
        acc = (dda, ddphi)
    h = 0.5 * dt
    d.dA_df = d.dA_df + acc[0] * h
    d.dphi = d.dphi + acc[1] * h
    g_cf = mkg.cf_velocity_mkg(d.phi, d.dphi)  # constant along the drift
    d.A_df = d.A_df + d.dA_df * dt
    d.A_cf = d.A_cf + g_cf * dt
    d.phi = d.phi + d.dphi * dt
    _, dda, ddphi = mkg.rhs_decomposed_mkg(d, check=False)
    acc = (dda, ddphi)
    d.dA_df = d.dA_df + acc[0] * h
    d.dphi = d.dphi + acc[1] * h
    d.time += dt
    return acc


def _mcsh_wave_force(st: McshState, p: PhysParams):
    """Raw accelerations without the velocity coupling ``kappa J dA``."""
    g = st.grid
    ca = [c.coeffs for c in st.A]
    diva = _div(g, ca)
    src, ddphi, ddnt = mcsh._forces(g, ca, st.phi.coeffs, st.n_tilde.coeffs, p, diva)
    fa = [-g.k2 * ca[ax] - _deriv(g, diva, ax) - src[ax] for ax in range(2)]
    return fa, ddphi, ddnt


def _kick_mcsh_raw(st: McshState, h: float, fa, p: PhysParams):
    # (I - bJ) v' = (I + bJ) v + h F, inverted as (I + bJ)/(1 + b^2)
    g = st.grid
    b = 0.5 * h * p.kappa
    v1, v2 = st.dA[0].coeffs, st.dA[1].coeffs
    r1 = v1 - b * v2 + h * fa[0]
    r2 = v2 + b * v1 + h * fa[1]
    den = 1.0 + b * b
    st.dA = VectorField((
        SpectralField(g, (r1 - b * r2) / den, True),
        SpectralField(g, (r2 + b * r1) / den, True),
    ))


def _lf_mcsh_raw(st: McshState, dt: float, acc, p: PhysParams):
    if acc is None:
        acc = _mcsh_wave_force(st, p)
    h = 0.5 * dt
    g = st.grid
    st.dphi = SpectralField(g, st.dphi.coeffs + h * acc[1], False)
    st.dn_tilde = SpectralField(g, st.dn_tilde.coeffs + h * acc[2], True)
    _kick_mcsh_raw(st, h, acc[0], p)
    st.A = st.A + st.dA * dt
    st.phi = st.phi + st.dphi * dt
    st.n_tilde = st.n_tilde + st.dn_tilde * dt
    acc = _mcsh_wave_force(st, p)
    _kick_mcsh_raw(st, h, acc[0], p)
    st.dphi = SpectralField(g, st.dphi.coeffs + h * acc[1], False)
    st.dn_tilde = SpectralField(g, st.dn_tilde.coeffs + h * acc[2], True)
    st.time += dt
    return acc


def _mcsh_dec_force(d: DecomposedMcshState, p: PhysParams):
    """Split accelerations without the velocity coupling ``kappa P J dA``."""
    g = d.grid
    ca = [d.A_df[ax].coeffs + d.A_cf[ax].coeffs for ax in range(2)]
    diva = _div(g, [c.coeffs for c in d.A_cf])
    src, ddphi, ddnt = mcsh._forces(g, ca, d.phi.coeffs, d.n_tilde.coeffs, p, diva)
    div_src = _div(g, src)
    fa = []
    for ax in range(2):
        proj = src[ax] - _deriv(g, g.inv_lap * div_src, ax)
        fa.append(-g.k2 * d.A_df[ax].coeffs - proj)
    return fa, ddphi, ddnt


def _kick_mcsh_dec(d: DecomposedMcshState, h: float, fa, p: PhysParams):
    # (I - b PJ) v' = (I + b PJ) v + h (F + kappa J g); off the zero mode
    # (PJ)^2 = 0 so the inverse is I + b PJ, at the zero mode it is
    # (I + b J)/(1 + b^2).
    g = d.grid
    b = 0.5 * h * p.kappa
    a_total = VectorField(tuple(
        SpectralField(g, d.A_df[ax].coeffs + d.A_cf[ax].coeffs, True) for ax in range(2)))
    g_cf = mcsh.cf_velocity_mcsh(a_total, d.phi, d.dphi, p)

    def pj(w1, w2):
        x1, x2 = -w2, w1
        divx = _div(g, [x1, x2])
        corr = g.inv_lap * divx
        return x1 - _deriv(g, corr, 0), x2 - _deriv(g, corr, 1)

    v1, v2 = d.dA_df[0].coeffs, d.dA_df[1].coeffs
    # J g is divergence-free (g is a gradient), so P J g = J g
    f1 = fa[0] + p.kappa * (-g_cf[1].coeffs)
    f2 = fa[1] + p.kappa * g_cf[0].coeffs
    pj1, pj2 = pj(v1, v2)
    r1 = v1 + b * pj1 + h * f1
    r2 = v2 + b * pj2 + h * f2
    pr1, pr2 = pj(r1, r2)
    n1 = r1 + b * pr1
    n2 = r2 + b * pr2
    zero = (0,) * g.dim
    den = 1.0 + b * b
    n1[zero] /= den
    n2[zero] /= den
    d.dA_df = VectorField((SpectralField(g, n1, True), SpectralField(g, n2, True)))


def _lf_mcsh_dec(d: DecomposedMcshState, dt: float, acc, p: PhysParams):
    if acc is None:
        acc = _mcsh_dec_force(d, p)
    h = 0.5 * dt
    g = d.grid
    # scalar kick, then gauge kick (palindrome partner below)
    d.dphi = SpectralField(g, d.dphi.coeffs + h * acc[1], False)
    d.dn_tilde = SpectralField(g, d.dn_tilde.coeffs + h * acc[2], True)
    _kick_mcsh_dec(d, h, acc[0], p)
    # drift; the constraint velocity at the solenoidal midpoint integrates the
    # linear magnetic part exactly, and the charge part is drift-invariant
    a_mid = VectorField(tuple(
        SpectralField(g, d.A_df[ax].coeffs + 0.5 * dt * d.dA_df[ax].coeffs
                      + d.A_cf[ax].coeffs, True) for ax in range(2)))
    g_mid = mcsh.cf_velocity_mcsh(a_mid, d.phi, d.dphi, p)
    d.A_df = d.A_df + d.dA_df * dt
    d.A_cf = d.A_cf + g_mid * dt
    d.phi = d.phi + d.dphi * dt
    d.n_tilde = d.n_tilde + d.dn_tilde * dt
    # gauge kick, then scalar kick
    acc = _mcsh_dec_force(d, p)
    _kick_mcsh_dec(d, h, acc[0], p)
    d.dphi = SpectralField(g, d.dphi.coeffs + h * acc[1], False)
    d.dn_tilde = SpectralField(g, d.dn_tilde.coeffs + h * acc[2], True)
    d.time += dt
    return acc


# ---------------------------------------------------------------------------
# classical RK4 over flattened coefficient vectors
# ---------------------------------------------------------------------------


def _rk4_arrays(ys, deriv, dt):
    k1 = deriv(ys)
    k2 = deriv([y + 0.5 * dt * k for y, k in zip(ys, k1)])
    k3 = deriv([y + 0.5 * dt * k for y, k in zip(ys, k2)])
    k4 = deriv([y + dt * k for y, k in zip(ys, k3)])
    return [y + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + e)
            for y, a, b, c, e in zip(ys, k1, k2, k3, k4)]


def _rk4_system(state, p):
    """Pack a state container into arrays plus a derivative closure."""
    g = state.grid

    def vec(ys, i, n):
        return VectorField(tuple(SpectralField(g, ys[i + ax], True) for ax in range(n)))

    if isinstance(state, MkgState):
        def pack(st):
            return [c.coeffs for c in st.A] + [c.coeffs for c in st.dA] + \
                [st.phi.coeffs, st.dphi.coeffs]

        def deriv(ys):
            st = MkgState(vec(ys, 0, 3), vec(ys, 3, 3),
                          SpectralField(g, ys[6], False), SpectralField(g, ys[7], False))
            dda, ddphi = mkg.rhs_raw_mkg(st)
            return [ys[3], ys[4], ys[5]] + [c.coeffs for c in dda] + [ys[7], ddphi.coeffs]

        def apply(st, ys):
            st.A, st.dA = vec(ys, 0, 3), vec(ys, 3, 3)
            st.phi = SpectralField(g, ys[6], False)
            st.dphi = SpectralField(g, ys[7], False)

    elif isinstance(state, DecomposedMkgState):
        def pack(d):
            return [c.coeffs for c in d.A_df] + [c.coeffs for c in d.A_cf] + \
                [c.coeffs for c in d.dA_df] + [d.phi.coeffs, d.dphi.coeffs]

        def deriv(ys):
            d = DecomposedMkgState(vec(ys, 0, 3), vec(ys, 3, 3), vec(ys, 6, 3),
                                   SpectralField(g, ys[9], False),
                                   SpectralField(g, ys[10], False))
            da_cf, dda, ddphi = mkg.rhs_decomposed_mkg(d, check=False)
            return [ys[6], ys[7], ys[8]] + [c.coeffs for c in da_cf] + \
                [c.coeffs for c in dda] + [ys[10], ddphi.coeffs]

        def apply(d, ys):
            d.A_df, d.A_cf, d.dA_df = vec(ys, 0, 3), vec(ys, 3, 3), vec(ys, 6, 3)
            d.phi = SpectralField(g, ys[9], False)
            d.dphi = SpectralField(g, ys[10], False)

    elif isinstance(state, McshState):
        def pack(st):
            return [c.coeffs for c in st.A] + [c.coeffs for c in st.dA] + \
                [st.phi.coeffs, st.dphi.coeffs, st.n_tilde.coeffs, st.dn_tilde.coeffs]

        def deriv(ys):
            st = McshState(vec(ys, 0, 2), vec(ys, 2, 2),
                           SpectralField(g, ys[4], False), SpectralField(g, ys[5], False),
                           SpectralField(g, ys[6], True), SpectralField(g, ys[7], True))
            dda, ddphi, ddnt = mcsh.rhs_raw_mcsh(st, p)
            return [ys[2], ys[3]] + [c.coeffs for c in dda] + \
                [ys[5], ddphi.coeffs, ys[7], ddnt.coeffs]

        def apply(st, ys):
            st.A, st.dA = vec(ys, 0, 2), vec(ys, 2, 2)
            st.phi = SpectralField(g, ys[4], False)
            st.dphi = SpectralField(g, ys[5], False)
            st.n_tilde = SpectralField(g, ys[6], True)
            st.dn_tilde = SpectralField(g, ys[7], True)

    elif isinstance(state, DecomposedMcshState):
        def pack(d):
            return [c.coeffs for c in d.A_df] + [c.coeffs for c in d.A_cf] + \
                [c.coeffs for c in d.dA_df] + \
                [d.phi.coeffs, d.dphi.coeffs, d.n_tilde.coeffs, d.dn_tilde.coeffs]

        def deriv(ys):
            d = DecomposedMcshState(vec(ys, 0, 2), vec(ys, 2, 2), vec(ys, 4, 2),
                                    SpectralField(g, ys[6], False),
                                    SpectralField(g, ys[7], False),
                                    SpectralField(g, ys[8], True),
                                    SpectralField(g, ys[9], True))
            da_cf, dda, ddphi, ddnt = mcsh.rhs_decomposed_mcsh(d, p, check=False)
            return [ys[4], ys[5]] + [c.coeffs for c in da_cf] + \
                [c.coeffs for c in dda] + [ys[7], ddphi.coeffs, ys[9], ddnt.coeffs]

        def apply(d, ys):
            d.A_df, d.A_cf, d.dA_df = vec(ys, 0, 2), vec(ys, 2, 2), vec(ys, 4, 2)
            d.phi = SpectralField(g, ys[6], False)
            d.dphi = SpectralField(g, ys[7], False)
            d.n_tilde = SpectralField(g, ys[8], True)
            d.dn_tilde = SpectralField(g, ys[9], True)

    else:
        raise TypeError(f"unsupported state container {type(state).__name__}")
    return pack, deriv, apply


def _advance_rk4(container, dt, p):
    pack, deriv, apply = _rk4_system(container, p)
    apply(container, _rk4_arrays(pack(container), deriv, dt))
    container.time += dt


def _make_advancer(container, scheme: str, p):
    """One-step updater ``advance(container, cache) -> cache`` for a container."""
    if scheme == "rk4":
        def advance(c, cache, dt):
            _advance_rk4(c, dt, p)
            return None
        return advance
    if isinstance(container, MkgState):
        return lambda c, cache, dt: _lf_mkg_raw(c, dt, cache)
    if isinstance(container, DecomposedMkgState):
        return lambda c, cache, dt: _lf_mkg_dec(c, dt, cache)
    if isinstance(container, McshState):
        return lambda c, cache, dt: _lf_mcsh_raw(c, dt, cache, p)
    if isinstance(container, DecomposedMcshState):
        return lambda c, cache, dt: _lf_mcsh_dec(c, dt, cache, p)
    raise TypeError(f"unsupported state container {type(container).__name__}")


def step(state, rhs, cfg: IntegratorConfig, p: PhysParams | None = None):
    """Advance a copy of ``state`` by one step of ``cfg.dt``.

    ``rhs`` overrides the derivative evaluator for the ``rk4`` scheme only; it
    must map a state container to the tuple its formulation's evaluator
    returns.  The structured leapfrog kicks cannot split a black-box evaluator
    and require ``rhs=None``.
    """
    if isinstance(state, (McshState, DecomposedMcshState)) and p is None:
        raise ValueError("the 2D system needs physical parameters")
    cfg.check_cfl(state.grid)
    out = state.copy()
    if cfg.scheme == "leapfrog":
        if rhs is not None:
            raise ValueError("leapfrog uses the formulation's own force splitting; "
                             "pass rhs=None")
        _make_advancer(out, "leapfrog", p)(out, None, cfg.dt)
        return out
    pack, deriv, apply = _rk4_system(out, p)
    if rhs is not None:
        work = out.copy()

        def deriv(ys):  # noqa: F811 - custom evaluator through the same packing
            apply(work, ys)
            return _flatten_derivs(work, rhs(work))

    apply(out, _rk4_arrays(pack(out), deriv, cfg.dt))
    out.time += cfg.dt
    return out


def _flatten_derivs(container, out):
    if isinstance(container, MkgState):
        dda, ddphi = out
        return [c.coeffs for c in container.dA] + [c.coeffs for c in dda] + \
            [container.dphi.coeffs, ddphi.coeffs]
    if isinstance(container, DecomposedMkgState):
        da_cf, dda, ddphi = out
        return [c.coeffs for c in container.dA_df] + [c.coeffs for c in da_cf] + \
            [c.coeffs for c in dda] + [container.dphi.coeffs, ddphi.coeffs]
    if isinstance(container, McshState):
        dda, ddphi, ddnt = out
        return [c.coeffs for c in container.dA] + [c.coeffs for c in dda] + \
            [container.dphi.coeffs, ddphi.coeffs,
             container.dn_tilde.coeffs, ddnt.coeffs]
    if isinstance(container, DecomposedMcshState):
        da_cf, dda, ddphi, ddnt = out
        return [c.coeffs for c in container.dA_df] + [c.coeffs for c in da_cf] + \
            [c.coeffs for c in dda] + \
            [container.dphi.coeffs, ddphi.coeffs,
             container.dn_tilde.coeffs, ddnt.coeffs]
    raise TypeError(f"unsupported state container {type(container).__name__}")


# ---------------------------------------------------------------------------
# run records
# ---------------------------------------------------------------------------


@dataclass
class RunRow:
    t: float
    E: float
    gauss_l2: float
    l2_A: float
    l2_phi: float
    l2_N: float
    h1dot_A: float
    h1dot_phi: float
    bound37_slack: float
    bound39_slack: float
    bound52_slack: float

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in COLUMNS)


@dataclass
class RunRecord:
    """Snapshot rows of one run plus provenance-free metadata."""

    system: str
    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    regauge_defects: list | None = None
    final_state: object = None

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS:
            raise KeyError(f"unknown column {name!r}")
        return np.array([getattr(r, name) for r in self.rows])

    def validate(self) -> None:
        ts = self.times()
        if len(ts) and not np.all(np.diff(ts) > 0):
            raise ValueError("snapshot times must be strictly increasing")

    def to_csv(self) -> str:
        self.validate()
        lines = ["# schema=1", ",".join(COLUMNS)]
        for r in self.rows:
            lines.append(",".join(f"{v:.17g}" for v in r.values()))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    def to_json_lines(self) -> str:
        self.validate()
        head = {"schema": 1, "system": self.system, "columns": list(COLUMNS)}
        head.update(self.meta)
        lines = [json.dumps(head, sort_keys=True)]
        for i, r in enumerate(self.rows):
            row = {c: _json_float(v) for c, v in zip(COLUMNS, r.values())}
            if self.regauge_defects is not None:
                row["regauge_defect"] = _json_float(self.regauge_defects[i])
            lines.append(json.dumps(row, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write_json_lines(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json_lines())


def _json_float(v):
    v = float(v)
    return v if np.isfinite(v) else None


# ---------------------------------------------------------------------------
# the run loop
# ---------------------------------------------------------------------------


def _residual(state, system, p):
    if system == "mkg":
        return gauss_residual_mkg(state)
    return gauss_residual_mcsh(state, p)


def _energy(state, system, p):
    if system == "mkg":
        return mkg.energy_mkg(state)
    return mcsh.energy_mcsh(state, p)


def _field_max(state) -> float:
    out = 0.0
    for f in (state.phi, *state.A):
        out = max(out, float(np.max(np.abs(f.values()))))
    if hasattr(state, "n_tilde"):
        out = max(out, float(np.max(np.abs(state.n_tilde.values()))))
    return out


def _make_row(state, system, p, e0, norms0) -> RunRow:
    e = _energy(state, system, p)
    gauss = l2_norm(_residual(state, system, p))
    l2_a = l2_norm(state.A)
    l2_p = l2_norm(state.phi)
    l2_n = l2_norm(state.n_tilde) if system == "mcsh" else float("nan")
    s_a, s_p, s_n = growth_slacks(system, e0, state.time, norms0, (l2_a, l2_p, l2_n))
    return RunRow(
        t=state.time, E=e, gauss_l2=gauss, l2_A=l2_a, l2_phi=l2_p, l2_N=l2_n,
        h1dot_A=h1dot_norm(state.A), h1dot_phi=h1dot_norm(state.phi),
        bound37_slack=s_a, bound39_slack=s_p, bound52_slack=s_n,
    )


def _gauge_transform(state, chi, system, p):
    if system == "mkg":
        return gauge_transform_mkg(state, chi)
    return gauge_transform_mcsh(state, chi, p)


def _wrap_container(state, formulation, system, p):
    if formulation == "raw":
        return state
    if system == "mkg":
        return mkg.decompose_mkg(state)
    return mcsh.decompose_mcsh(state)


def _raw_view(container, system, p):
    if isinstance(container, (MkgState, McshState)):
        return container
    if system == "mkg":
        return mkg.recompose_mkg(container)
    return mcsh.recompose_mcsh(container, p)


def run(state, system: str, cfg: IntegratorConfig, p: PhysParams | None = None,
        meta: dict | None = None) -> RunRecord:
    """Evolve admissible initial data and sample the row schema.

    Preconditions: the initial Gauss residual is at most 1e-10 in L2, the step
    satisfies the scheme's CFL bound, and the horizon stays below half the box
    width so nothing can propagate into its own periodic image.  Raises
    ``BlowupError`` (with the partial record attached) when energy drifts by
    more than 10 percent, a field sample passes 1e8, or anything goes
    non-finite.
    """
    if system not in ("mkg", "mcsh"):
        raise ValueError(f"unknown system {system!r}")
    if system == "mkg" and not isinstance(state, MkgState):
        raise ValueError("system 'mkg' expects an unsplit 3D state")
    if system == "mcsh":
        if not isinstance(state, McshState):
            raise ValueError("system 'mcsh' expects an unsplit 2D state")
        if p is None:
            raise ValueError("the 2D system needs physical parameters")
    grid = state.grid
    cfg.check_cfl(grid)
    if cfg.t_final > 0.5 * grid.box_length:
        raise ValueError(
            f"t_final {cfg.t_final:g} exceeds half the box width {grid.box_length:g}; "
            "signals would wrap around the torus")
    res0 = l2_norm(_residual(state, system, p))
    if res0 > _ADMISSIBLE_TOL:
        raise ValueError(
            f"initial data violates the Gauss constraint (residual {res0:.3e})")
    n_steps = cfg.n_steps()

    record = RunRecord(system=system, meta={
        "scheme": cfg.scheme, "dt": cfg.dt, "t_final": cfg.t_final,
        "formulation": cfg.formulation, "snapshot_every": cfg.snapshot_every,
        "regauge_every": cfg.regauge_every, "n": grid.n, "dim": grid.dim,
        "box_length": grid.box_length,
    })
    if meta:
        record.meta.update(meta)

    regauging = cfg.regauge_every is not None
    if regauging:
        record.regauge_defects = []
        twin = _wrap_container(state.copy(), cfg.formulation, system, p)
        twin_cache = None
        chi_now = None

    work = state.copy()
    if regauging:
        _, chi_now = coulomb_fix(work.A)
        work = _gauge_transform(work, chi_now, system, p)
    container = _wrap_container(work, cfg.formulation, system, p)
    advance = _make_advancer(container, cfg.scheme, p)
    cache = None

    raw0 = _raw_view(container, system, p)
    e0 = _energy(raw0, system, p)
    norms0 = (l2_norm(raw0.A), l2_norm(raw0.phi),
              l2_norm(raw0.n_tilde) if system == "mcsh" else float("nan"))

    def snapshot():
        raw = _raw_view(container, system, p)
        row = _make_row(raw, system, p, e0, norms0)
        record.rows.append(row)
        if regauging:
            t_raw = _raw_view(twin, system, p)
            record.regauge_defects.append(cross_validate(raw, t_raw, p).max_defect)
        if not all(np.isfinite(v) or c in ("l2_N", "bound52_slack")
                   for c, v in zip(COLUMNS, row.values())):
            raise BlowupError(f"non-finite diagnostics at t = {raw.time:g}", record)
        if abs(row.E - e0) > _ENERGY_DRIFT_LIMIT * max(abs(e0), 1e-12):
            raise BlowupError(
                f"energy drifted from {e0:g} to {row.E:g} at t = {raw.time:g}", record)
        m = _field_max(raw)
        if not np.isfinite(m) or m > _FIELD_MAX_LIMIT:
            raise BlowupError(f"field amplitude {m:g} at t = {raw.time:g}", record)

    snapshot()
    for k in range(1, n_steps + 1):
        cache = advance(container, cache, cfg.dt)
        if regauging:
            twin_cache = advance(twin, twin_cache, cfg.dt)
            if k % cfg.regauge_every == 0 and k < n_steps:
                raw = _raw_view(container, system, p)
                raw = _gauge_transform(raw, GaugeFunction(-chi_now.chi), system, p)
                _, chi_now = coulomb_fix(raw.A)
                raw = _gauge_transform(raw, chi_now, system, p)
                container = _wrap_container(raw, cfg.formulation, system, p)
                cache = None
        if k % cfg.snapshot_every == 0 or k == n_steps:
            snapshot()

    final = _raw_view(container, system, p)
    if regauging:
        final = _gauge_transform(final, GaugeFunction(-chi_now.chi), system, p)
    record.final_state = final
    record.validate()
    return record


# ---------------------------------------------------------------------------
# twin-run cross validation
# ---------------------------------------------------------------------------


@dataclass
class DefectReport:
    """L2 sizes of gauge-invariant observable differences between two states."""

    phi_abs: float
    curvature: float
    electric: float
    neutral: float
    energy_density: float

    @property
    def max_defect(self) -> float:
        vals = [self.phi_abs, self.curvature, self.electric, self.energy_density]
        if np.isfinite(self.neutral):
            vals.append(self.neutral)
        return float(max(vals))

    def summary(self) -> str:
        parts = [f"|phi| {self.phi_abs:.3e}", f"F {self.curvature:.3e}",
                 f"E-field {self.electric:.3e}", f"energy {self.energy_density:.3e}"]
        if np.isfinite(self.neutral):
            parts.insert(3, f"neutral {self.neutral:.3e}")
        return ", ".join(parts)


def _energy_density_values(state, p):
    """Pointwise energy density on the padded lattice (diagnostic only)."""
    g = state.grid
    w = [c.values(pad=True) for c in state.dA]
    dens = 0.5 * sum(v * v for v in w)
    dphiv = state.dphi.values(pad=True)
    if isinstance(state, MkgState):
        dens = dens + 0.5 * np.abs(dphiv) ** 2
        for i in range(3):
            for j in range(i + 1, 3):
                fij = mkg.field_strength(state, i, j).values(pad=True)
                dens = dens + 0.5 * fij * fij
            dv = mkg.covariant_derivative(state, i + 1).values(pad=True)
            dens = dens + 0.5 * np.abs(dv) ** 2
        return dens
    dens = dens + np.abs(dphiv) ** 2
    f12 = mcsh.field_strength_12(state.A).values(pad=True)
    dens = dens + 0.5 * f12 * f12
    for i in range(2):
        di = partial_deriv(state.phi, i) - \
            dealiased_product(state.phi, state.A[i]) * (1j * p.e)
        dens = dens + np.abs(di.values(pad=True)) ** 2
        dn = partial_deriv(state.n_tilde, i).values(pad=True)
        dens = dens + 0.5 * dn * dn
    dntv = state.dn_tilde.values(pad=True)
    dens = dens + 0.5 * dntv * dntv
    dens = dens + mcsh.potential_U(state.phi, state.n_tilde, p).values(pad=True)
    return dens


def cross_validate(state_a, state_b, p: PhysParams | None = None) -> DefectReport:
    """Compare gauge-invariant observables of two same-grid, same-time states."""
    if type(state_a) is not type(state_b):
        raise ValueError("cross validation needs two states of the same system")
    if not isinstance(state_a, (MkgState, McshState)):
        raise TypeError("cross validation works on unsplit states")
    if state_a.grid != state_b.grid:
        raise ValueError("states live on different grids")
    if abs(state_a.time - state_b.time) > 1e-9:
        raise ValueError("states must be compared at matched times")
    g = state_a.grid
    if isinstance(state_a, McshState) and p is None:
        raise ValueError("the 2D system needs physical parameters")

    wq = g.pad_cell_volume
    pa = np.abs(state_a.phi.values(pad=True))
    pb = np.abs(state_b.phi.values(pad=True))
    phi_abs = float(np.sqrt(wq * np.sum((pa - pb) ** 2)))

    if isinstance(state_a, MkgState):
        curv = 0.0
        for i in range(3):
            for j in range(i + 1, 3):
                d = mkg.field_strength(state_a, i, j) - \
                    mkg.field_strength(state_b, i, j)
                curv += l2_norm(d) ** 2
        curvature = float(np.sqrt(curv))
        neutral = float("nan")
    else:
        curvature = l2_norm(mcsh.field_strength_12(state_a.A) -
                            mcsh.field_strength_12(state_b.A))
        neutral = l2_norm(state_a.n_tilde - state_b.n_tilde)

    electric = l2_norm(state_a.dA - state_b.dA)
    da = _energy_density_values(state_a, p)
    db = _energy_density_values(state_b, p)
    energy_density = float(np.sqrt(wq * np.sum((da - db) ** 2)))
    return DefectReport(phi_abs=phi_abs, curvature=curvature, electric=electric,
                        neutral=neutral, energy_density=energy_density)
