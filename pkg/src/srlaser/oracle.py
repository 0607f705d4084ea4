"""Exact master-equation solver for a few atoms in a truncated Fock space.

Brute-force reference for the cumulant model: the full Liouvillian is built
in the direct-product basis (atom_1 x ... x atom_N x cavity), its null
vector gives the stationary density matrix, and the field spectrum follows
from the regression theorem applied to the full generator.

Vectorisation is column stacking, vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq, minimize_scalar

from .cumulant import CumulantState
from .errors import HilbertSizeError, ParameterError
from .params import SystemParams

__all__ = [
    "MAX_DIM",
    "HilbertSpec",
    "DensityMatrix",
    "LiouvillianOperator",
    "Operators",
    "operators",
    "build_liouvillian",
    "null_vector",
    "steady_oracle",
    "propagate",
    "field_correlation",
    "spectrum_oracle",
    "oracle_linewidth",
    "ErrorRow",
    "cumulant_error_report",
    "format_report",
    "report_csv",
]

MAX_DIM = 64
CUTOFF_POPULATION = 1e-8


@dataclass(frozen=True)
class HilbertSpec:
    n_atoms: int
    n_max: int

    def __post_init__(self):
        if not 1 <= self.n_atoms <= 3:
            raise ParameterError("exact solver handles 1 to 3 atoms")
        if self.n_max < 1:
            raise ParameterError("photon cutoff n_max must be >= 1")
        if self.dim > MAX_DIM:
            raise HilbertSizeError(f"dimension {self.dim} exceeds cap {MAX_DIM}")

    @property
    def dim(self) -> int:
        return (self.n_max + 1) * 2**self.n_atoms


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.min(np.linalg.eigvalsh(h)))

    def expect(self, op) -> complex:
        op = op.toarray() if sp.issparse(op) else op
        return complex(np.trace(op @ self.entries))

    @classmethod
    def from_vector(cls, vec, dim: int) -> "DensityMatrix":
        return cls(np.asarray(vec).reshape((dim, dim), order="F"))

    def to_vector(self) -> np.ndarray:
        return self.entries.reshape(-1, order="F")


@dataclass(frozen=True)
class Operators:
    a: sp.csr_matrix
    sigma_minus: tuple
    sigma_z: tuple
    identity: sp.csr_matrix


def operators(spec: HilbertSpec) -> Operators:
    """Field and per-atom operators; atomic basis order is (e, g)."""
    sm = sp.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]))
    sz = sp.csr_matrix(np.diag([1.0, -1.0]))
    i2 = sp.identity(2, format="csr")
    nf = spec.n_max + 1
    a_f = sp.diags(np.sqrt(np.arange(1, nf, dtype=float)), 1, format="csr")
    i_f = sp.identity(nf, format="csr")

    def embed(single, site):
        out = None
        for j in range(spec.n_atoms):
            f = single if j == site else i2
            out = f if out is None else sp.kron(out, f, format="csr")
        return sp.kron(out, i_f, format="csr")

    atoms_id = sp.identity(2**spec.n_atoms, format="csr")
    return Operators(
        a=sp.kron(atoms_id, a_f, format="csr"),
        sigma_minus=tuple(embed(sm, j) for j in range(spec.n_atoms)),
        sigma_z=tuple(embed(sz, j) for j in range(spec.n_atoms)),
        identity=sp.identity(spec.dim, format="csr"),
    )


@dataclass(frozen=True)
class LiouvillianOperator:
    matrix: sp.csc_matrix
    spec: HilbertSpec
    terms: tuple

    def trace_preservation_error(self) -> float:
        d = self.spec.dim
        ident = np.eye(d).reshape(-1, order="F")
        return float(np.max(np.abs(self.matrix.T @ ident)))


def _spre(a):
    return sp.kron(sp.identity(a.shape[0]), a)


def _spost(a):
    return sp.kron(a.T, sp.identity(a.shape[0]))


def _dissipator(c):
    cdc = (c.conj().T @ c).tocsr()
    return sp.kron(c.conj(), c) - 0.5 * _spre(cdc) - 0.5 * _spost(cdc)


def build_liouvillian(spec: HilbertSpec, params: SystemParams) -> LiouvillianOperator:
    """Full generator in the frame rotating at the atomic frequency.

    H = delta a+a + (rabi/2) sum_j (a+ s_j- + a s_j+); dissipators for cavity
    loss (kappa), spontaneous decay (gamma), repumping (pump, s+ as jump
    operator) and pure dephasing (1/(2 T2), s_z as jump operator).
    """
    if spec.n_atoms != params.n_atoms:
        raise ParameterError("HilbertSpec and SystemParams disagree on n_atoms")
    ops = operators(spec)
    a = ops.a
    ad = a.conj().T.tocsr()
    h = params.detuning * (ad @ a)
    for sm in ops.sigma_minus:
        h = h + 0.5 * params.rabi * (ad @ sm + a @ sm.T)
    terms = ["hamiltonian"]
    gen = -1j * (_spre(h) - _spost(h))
    gen = gen + params.kappa * _dissipator(a)
    terms.append("cavity")
    for sm, sz in zip(ops.sigma_minus, ops.sigma_z):
        gen = gen + params.gamma * _dissipator(sm)
        gen = gen + params.pump * _dissipator(sm.T.tocsr())
        gen = gen + 0.5 * params.t2_inv * _dissipator(sz)
    terms += ["spontaneous", "repump", "dephasing"]
    return LiouvillianOperator(sp.csc_matrix(gen), spec, tuple(terms))


def null_vector(liou: LiouvillianOperator, method: str = "solve") -> np.ndarray:
    """Normalised stationary vector of the Liouvillian.

    ``"solve"`` replaces one equation by the trace condition and solves the
    sparse system; ``"eigs"`` runs shift-invert Arnoldi about zero.
    """
    d = liou.spec.dim
    ident = np.eye(d).reshape(-1, order="F")
    if method == "solve":
        m = liou.matrix.tolil()
        m[0, :] = ident
        rhs = np.zeros(d * d, dtype=complex)
        rhs[0] = 1.0
        vec = spla.spsolve(m.tocsc(), rhs)
    elif method == "eigs":
        scale = float(abs(liou.matrix).max())
        vals, vecs = spla.eigs(liou.matrix, k=1, sigma=-1e-9 * scale, which="LM")
        vec = vecs[:, 0]
        vec = vec / (ident @ vec)
    else:
        raise ValueError(f"unknown method {method!r}")
    return vec


def _moments(rho: DensityMatrix, ops: Operators) -> CumulantState:
    a = ops.a
    ad = a.conj().T
    sm1 = ops.sigma_minus[0]
    coh = rho.expect(ad @ sm1)
    spin = rho.expect(sm1.T @ ops.sigma_minus[1]).real if len(ops.sigma_minus) > 1 else 0.0
    return CumulantState(
        inversion=rho.expect(ops.sigma_z[0]).real,
        coherence_re=coh.real,
        coherence_im=coh.imag,
        spin_spin=spin,
        photons=rho.expect(ad @ a).real,
    )


def top_fock_population(rho: DensityMatrix, spec: HilbertSpec) -> float:
    diag = np.real(np.diag(rho.entries)).reshape(2**spec.n_atoms, spec.n_max + 1)
    return float(diag[:, -1].sum())


def steady_oracle(spec: HilbertSpec, params: SystemParams, method: str = "solve", auto_cutoff: bool = True):
    """Stationary density matrix and its low-order moments.

    When the highest Fock level holds more than 1e-8 of the population the
    cutoff is raised and the state re-solved, up to the dimension cap.

    Returns ``(rho, moments, spec)``; ``spec`` is the cutoff actually used.
    """
    while True:
        liou = build_liouvillian(spec, params)
        rho = DensityMatrix.from_vector(null_vector(liou, method), spec.dim)
        if not auto_cutoff or top_fock_population(rho, spec) < CUTOFF_POPULATION:
            break
        try:
            spec = HilbertSpec(spec.n_atoms, spec.n_max + 1)
        except HilbertSizeError as exc:
            raise HilbertSizeError(
                f"photon cutoff inadequate at the dimension cap ({exc})"
            ) from None
    return rho, _moments(rho, operators(spec)), spec


def propagate(liou: LiouvillianOperator, rho: DensityMatrix, times) -> list[DensityMatrix]:
    """rho(t) = exp(L t) rho for each t in ``times`` (ascending, from 0)."""
    out = spla.expm_multiply(
        liou.matrix, rho.to_vector().astype(complex), start=0.0,
        stop=float(times[-1]), num=len(times), endpoint=True,
    )
    grid = np.linspace(0.0, float(times[-1]), len(times))
    if not np.allclose(grid, times):
        raise ValueError("times must be evenly spaced from 0")
    return [DensityMatrix.from_vector(v, liou.spec.dim) for v in out]


def field_correlation(liou: LiouvillianOperator, rho: DensityMatrix, times) -> np.ndarray:
    """<a+(t) a(0)> by the regression theorem, evenly spaced times from 0."""
    a = operators(liou.spec).a
    seed = DensityMatrix(a @ rho.entries)
    ad = a.conj().T
    return np.array([r.expect(ad) for r in propagate(liou, seed, times)])


def _resolvent_spectrum(liou: LiouvillianOperator, rho: DensityMatrix):
    """S(omega) through a bordered resolvent.

    L has a zero eigenvalue (the stationary state), so (i omega - L) is
    singular at omega = 0. Solving instead

        [[i omega - L, rho_ss], [1^T, 0]] [x, mu] = [seed0, 0]

    restricts x to trace-zero operators, where the resolvent is regular for
    every omega. The stationary component of the seed only feeds the
    coherent delta peak at omega = 0, proportional to <a+>, which vanishes by
    phase symmetry; it is dropped.
    """
    spec = liou.spec
    d2 = liou.matrix.shape[0]
    a = operators(spec).a
    rho_ss = null_vector(liou)
    ident = np.eye(spec.dim).reshape(-1, order="F")
    seed = (a @ rho.entries).reshape(-1, order="F")
    seed = seed - (ident @ seed) * rho_ss
    probe = a.toarray().reshape(-1, order="F")  # Tr(a+ X) = vec(conj(a)) . vec(X), a real
    border_col = sp.csc_matrix(rho_ss.reshape(-1, 1))
    border_row = sp.csr_matrix(ident.reshape(1, -1))
    rhs = np.append(seed, 0.0)
    eye = sp.identity(d2, format="csc")

    def density(omega: float) -> float:
        m = sp.bmat([[1j * omega * eye - liou.matrix, border_col], [border_row, None]], format="csc")
        x = spla.spsolve(m, rhs)[:d2]
        return 2.0 * float(np.real(probe @ x))

    return density


def spectrum_oracle(spec: HilbertSpec, params: SystemParams, omega_grid, rho: DensityMatrix | None = None) -> np.ndarray:
    """S(omega) = 2 Re int_0^inf exp(-i omega t) <a+(t) a(0)> dt.

    Evaluated exactly through the resolvent (i omega - L)^-1, one sparse
    solve per frequency. ``rho`` defaults to the stationary state.
    Returns an array of (omega, S) rows.
    """
    if rho is None:
        rho, _, spec = steady_oracle(spec, params)
    liou = build_liouvillian(spec, params)
    density = _resolvent_spectrum(liou, rho)
    w = np.asarray(omega_grid, dtype=float)
    return np.column_stack([w, [density(x) for x in w]])


def oracle_linewidth(spec: HilbertSpec, params: SystemParams, rho: DensityMatrix | None = None) -> tuple[float, float]:
    """(FWHM, centre) of the main spectral peak, both in s^-1."""
    if rho is None:
        rho, _, spec = steady_oracle(spec, params)
    liou = build_liouvillian(spec, params)
    density = _resolvent_spectrum(liou, rho)
    rate_scale = max(params.kappa, params.gamma + params.pump + 2 * params.t2_inv, abs(params.detuning))
    if params.detuning == 0:
        center = 0.0
    else:
        span = abs(params.detuning) + rate_scale
        opt = minimize_scalar(lambda x: -density(x), bounds=(-span, span), method="bounded",
                              options={"xatol": 1e-10 * rate_scale})
        center = float(opt.x)
    half = 0.5 * density(center)

    def edge(sign):
        h = 1e-9 * rate_scale
        while density(center + sign * h) > half:
            h *= 2.0
            if h > 1e3 * rate_scale:
                raise RuntimeError("spectral peak has no half-maximum point")
        lo = h / 2.0 if h > 1e-9 * rate_scale else 0.0
        return brentq(lambda x: density(center + sign * x) - half, lo, h, xtol=1e-14 * rate_scale, rtol=1e-12)

    return edge(+1) + edge(-1), center


@dataclass(frozen=True)
class ErrorRow:
    moment: str
    oracle: float
    cumulant: float
    relative_error: float


def _relative_error(o: float, c: float, floor: float = 1e-12) -> float:
    return abs(o - c) / max(abs(o), abs(c), floor)


def cumulant_error_report(spec: HilbertSpec, params: SystemParams, include_linewidth: bool = True) -> list[ErrorRow]:
    """Side-by-side exact vs cumulant values of the stationary moments.

    Relative errors use max(|oracle|, |cumulant|, 1e-12) as denominator, so
    moments that vanish in both descriptions report zero.
    """
    from .spectrum import linewidth
    from .steady import steady_exact

    if params.n_atoms > 3:
        raise ParameterError("exact comparison limited to N <= 3")
    rho, exact, spec = steady_oracle(spec, params)
    report = steady_exact(params)
    approx = report.state
    names = ["inversion", "coherence_re", "coherence_im", "photons"]
    if params.n_atoms >= 2:
        names.insert(3, "spin_spin")
    rows = [
        ErrorRow(n, getattr(exact, n), getattr(approx, n),
                 _relative_error(getattr(exact, n), getattr(approx, n)))
        for n in names
    ]
    if include_linewidth and exact.photons > 0 and params.rabi > 0:
        lw_exact, _ = oracle_linewidth(spec, params, rho)
        lw_cum = linewidth(params, report).linewidth_fwhm
        rows.append(ErrorRow("linewidth", lw_exact, lw_cum, _relative_error(lw_exact, lw_cum)))
    return rows


def report_csv(rows: list[ErrorRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["moment", "oracle", "cumulant", "relative_error"])
    for r in rows:
        w.writerow([r.moment, repr(r.oracle), repr(r.cumulant), repr(r.relative_error)])
    return buf.getvalue()


def format_report(rows: list[ErrorRow]) -> str:
    lines = [f"{'moment':<14}{'oracle':>16}{'cumulant':>16}{'rel. error':>12}"]
    for r in rows:
        err = "-" if math.isnan(r.relative_error) else f"{r.relative_error:.3e}"
        lines.append(f"{r.moment:<14}{r.oracle:>16.8g}{r.cumulant:>16.8g}{err:>12}")
    return "\n".join(lines)
