"""First-order subsystems induced by a superpotential, and their numerical integration.

The subsystem is ``q' = 2 exp(-d.q/2) J grad f(q)`` on extended positions
``q = (q_1..q_r, u)``.  For the r=3, d=(1,2,2) superpotential the module also
provides the radial-coordinate system in s, where the flow starts from the
exact linear solution at a small s0 > 0.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exp_poly import ExpPoly, Poly, gradient_p, gradient_q, hamiltonian, parse, render
from .superpotential import SuperpotentialAnsatz, case5_ansatz, check, from_x
from .surd import to_float
from .weight_config import Configuration

__all__ = [
    "SubsystemRHS",
    "Trajectory",
    "SingularStart",
    "IntegratorError",
    "build_rhs",
    "dopri5",
    "integrate",
    "case5_parameters",
    "case5_s_rhs",
    "case5_closed_form",
    "fh_initial_roots",
    "singular_start_case5",
    "integrate_case5_s",
    "t_of_s",
    "t_of_s_quadrature",
    "reparametrize_t",
    "full_flow_check",
    "trajectory_csv",
    "DEFAULT_TOL",
    "MAX_STEP",
]

DEFAULT_TOL = 1e-10
MAX_STEP = 0.1
SAFETY = 0.9


class IntegratorError(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# Subsystem right-hand side


@dataclass
class SubsystemRHS:
    cfg: Configuration
    ansatz: SuperpotentialAnsatz
    components: list[ExpPoly]
    fn: Callable[[float, np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, t, q):
        return self.fn(t, q)


def _case5_reference(cfg: Configuration, sign: int) -> list[ExpPoly]:
    """The r=3, d=(1,2,2) subsystem written out term by term.

    Coefficients follow A1 = A_(0,0,-1), A2 = A_(0,-1,0), with
    A_(1,-2,0) = A_(1,0,-2) = A.
    """
    wm = cfg.weight_map
    A1, A2 = wm[(0, 0, -1)], wm[(0, -1, 0)]
    E = cfg.E
    text = [
        "s2A*exp(q1/2 - q2) - s2A*exp(q1/2 - q3)",
        "-fv/2*exp(q2/2 - q3/2) + fmv/2*exp(-q2/2 + q3/2) + fu/2*exp(-q2/2 - q3/2) - s2A*exp(q1/2 - q2)",
        "fv/2*exp(q2/2 - q3/2) - fmv/2*exp(-q2/2 + q3/2) + fu/2*exp(-q2/2 - q3/2) + s2A*exp(q1/2 - q3)",
        "-fv/2*exp(q2/2 - q3/2) - fmv/2*exp(-q2/2 + q3/2) + fu/2*exp(-q2/2 - q3/2)",
    ]
    import sympy

    def rt(x: Fraction):
        return f"({sympy.sqrt(sympy.Rational(x.numerator, x.denominator))})"

    ax = wm[(1, 0, -2)]
    subs = {
        "s2A": f"({sign}*{rt(-2 * ax)})",
        "fv": f"({rt(E * A1 / A2)})",
        "fmv": f"({rt(E * A2 / A1)})",
        "fu": f"(2*{rt(A1 * A2)}/{rt(E)})",
    }
    out = []
    for line in text:
        for k, v in subs.items():
            line = line.replace(k, v)
        out.append(parse(line, 4))
    return out


def build_rhs(cfg: Configuration, ansatz: SuperpotentialAnsatz, verify: bool = True) -> SubsystemRHS:
    """Compile q' = 2 e^{-d.q/2} J grad f into a numeric right-hand side.

    The ansatz must satisfy the superpotential condition exactly.  For the
    r=3, d=(1,2,2) configuration the symbolic components are compared with a
    term-by-term reference of the same system.
    """
    if verify and not check(cfg, ansatz).satisfied:
        raise ValueError("the ansatz does not satisfy the superpotential condition")
    m = cfg.r + 1
    form = cfg.form
    f = ansatz.to_exppoly(m)
    grad = gradient_q(f)
    half = tuple(-Fraction(d, 2) for d in cfg.dims) + (Fraction(1),)
    pref = ExpPoly.exp(half, 2)
    comps = []
    for i in range(m):
        acc = ExpPoly.zero(m)
        for j in range(m):
            if form.matrix[i][j] != 0:
                acc = acc + grad[j] * form.matrix[i][j]
        comps.append(pref * acc)
    if cfg.dims == (1, 2, 2) and cfg.lam == 0 and f.m == 4:
        wm = cfg.weight_map
        keys = {(0, -1, 0), (0, 0, -1), (1, -2, 0), (1, 0, -2)}
        if set(wm) == keys and wm[(1, -2, 0)] == wm[(1, 0, -2)] and set(map(tuple, ansatz.exponents)) == set(
            case5_ansatz(cfg).exponents
        ):
            fx = to_float(ansatz.coefficient(from_x(cfg, (1, 0, -2))))
            ref = _case5_reference(cfg, 1 if fx > 0 else -1)
            for i, (a, b) in enumerate(zip(comps, ref)):
                if a != b:
                    raise AssertionError(f"component {i} does not match the reference form: {render(a)} vs {render(b)}")
    compiled = [c.compile() for c in comps]
    zeros = np.zeros(m)

    def fn(t, q):
        return np.array([c(zeros, q) for c in compiled])

    return SubsystemRHS(cfg, ansatz, comps, fn)


# ----------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class Trajectory:
    """Sampled integral curve; ``y`` rows are states at times ``t``."""

    t: np.ndarray
    y: np.ndarray
    coordinate: str = "t"
    truncated: str | None = None
    H: np.ndarray | None = None
    graph_defect: np.ndarray | None = None
    n_steps: int = 0
    n_rejected: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.truncated is None


def dopri5(
    rhs: Callable,
    t0: float,
    y0: Sequence[float],
    t1: float,
    tol: float = DEFAULT_TOL,
    max_step: float = MAX_STEP,
    h0: float | None = None,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) with a PI step-size controller.

    The local error estimate is scaled by ``tol * (1 + |y|)`` componentwise
    and each accepted step satisfies ``max |err| <= 1``.  Output points in
    ``t_eval`` are hit exactly by shortening steps; otherwise every accepted
    step is recorded.
    """
    if not (1e-13 <= tol <= 1e-6):
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite initial state")
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    stops = sorted(float(x) for x in (t_eval or []) if (x - t0) * direction > 0 and (t1 - x) * direction >= 0)
    if direction < 0:
        stops = stops[::-1]
    ts, ys = [t0], [y.copy()]
    t = t0
    f = np.asarray(rhs(t, y), dtype=float)
    if h0 is None:
        scale = tol * (1 + np.abs(y))
        d0 = np.linalg.norm(y / scale) / math.sqrt(len(y))
        d1 = np.linalg.norm(f / scale) / math.sqrt(len(y))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, max_step, span if span > 0 else max_step)
    h = max(h0, 1e-15)
    err_prev = 1e-4
    beta = 0.04
    alpha = 0.2 - 0.75 * beta
    n_steps = n_rej = 0
    truncated = None
    k = np.empty((7, len(y)))
    stop_idx = 0
    while (t1 - t) * direction > 0:
        target = stops[stop_idx] if stop_idx < len(stops) else t1
        h = min(h, max_step, abs(target - t))
        if h < 1e-14 * max(1.0, abs(t)):
            truncated = f"step size underflow at t={t:.17g}"
            break
        k[0] = f
        for i in range(1, 7):
            yi = y + direction * h * np.dot(_A[i], k[:i])
            k[i] = rhs(t + direction * _C[i] * h, yi)
        y_new = y + direction * h * np.dot(_B5, k)
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(k)):
            h *= 0.2
            n_rej += 1
            continue
        err_vec = direction * h * np.dot(_E, k)
        scale = tol * (1 + np.maximum(np.abs(y), np.abs(y_new)))
        err = float(np.max(np.abs(err_vec) / scale))
        if err <= 1.0:
            t_new = t + direction * h
            if abs(target - t_new) <= 1e-13 * max(1.0, abs(target)):
                t_new = target
                if stop_idx < len(stops) and target == stops[stop_idx]:
                    stop_idx += 1
            t, y, f = t_new, y_new, k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            n_steps += 1
            fac = SAFETY * max(err, 1e-10) ** (-alpha) * err_prev ** beta
            fac = min(10.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
            h *= fac
        else:
            n_rej += 1
            h *= max(0.2, SAFETY * err ** (-alpha))
    return Trajectory(np.array(ts), np.array(ys), "t", truncated, n_steps=n_steps, n_rejected=n_rej)


def integrate(
    rhs: Callable,
    start: Sequence[float],
    t_span: tuple[float, float],
    tol: float = DEFAULT_TOL,
    max_step: float = MAX_STEP,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate a subsystem (or any callable rhs(t, y)) over ``t_span``."""
    return dopri5(rhs, t_span[0], start, t_span[1], tol=tol, max_step=max_step, t_eval=t_eval)


# ----------------------------------------------------------------------------
# The r=3, d=(1,2,2) radial system


def case5_parameters(cfg: Configuration) -> tuple[float, float, float]:
    """(lam, E, A) where lam is the common value A_(0,-1,0) = A_(0,0,-1) and A the type-III value."""
    wm = cfg.weight_map
    try:
        l1, l2 = wm[(0, -1, 0)], wm[(0, 0, -1)]
        a1, a2 = wm[(1, -2, 0)], wm[(1, 0, -2)]
    except KeyError:
        raise ValueError("not the r=3, d=(1,2,2) configuration") from None
    if cfg.dims != (1, 2, 2) or l1 != l2 or a1 != a2:
        raise ValueError("expected d=(1,2,2) with A_(0,-1,0)=A_(0,0,-1) and A_(1,-2,0)=A_(1,0,-2)")
    return float(l1), float(cfg.E), float(a1)


def case5_s_rhs(lam: float, E: float):
    """Right-hand side in s of (beta1, beta2, u)."""
    k = E / (2 * lam)

    def rhs(s, y):
        b1, b2, _ = y
        diff = b2 - b1
        return np.array([
            (k * b1 * diff + b1) / s - 1.0,
            (-k * b2 * diff + b2) / s + 1.0,
            (1.0 - k * (b1 + b2)) / s,
        ])

    return rhs


def case5_closed_form(s, lam: float, E: float, u0: float = 0.0):
    """Linear solution beta1 = s, beta2 = s + 2 lam/E, u = u0 - E s/lam."""
    s = np.asarray(s, dtype=float)
    return np.stack([s, s + 2 * lam / E, u0 - E * s / lam], axis=-1)


def fh_initial_roots(lam: float, E: float) -> list[tuple[float, float]]:
    """Admissible initial pairs (beta1(0), beta2(0)); the trivial pair (0, 0) is excluded."""
    c = 2 * lam / E
    return [(c, 0.0), (0.0, c)]


@dataclass
class SingularStart:
    s0: float
    beta1: float
    beta2: float
    alpha: float
    u: float
    q: np.ndarray
    lam: float
    E: float
    A: float
    coordinate: str = "s"

    @property
    def state_s(self) -> np.ndarray:
        return np.array([self.beta1, self.beta2, self.u])


def singular_start_case5(cfg: Configuration, s0: float = 1e-6, beta0=None, u0: float = 0.0) -> SingularStart:
    """Initial data on the linear solution at s = s0 > 0, also expressed in q-coordinates.

    ``beta0`` selects the value at s = 0 and must be (0, 2 lam/E), the branch
    carrying the smooth solution; the pair (0, 0) fails the second
    Foscolo-Haskins condition and is rejected.
    """
    lam, E, A = case5_parameters(cfg)
    if lam <= 0 or E <= 0:
        raise ValueError("requires lam > 0 and E > 0")
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    c = 2 * lam / E
    if beta0 is not None:
        b10, b20 = beta0
        if b10 == 0 and b20 == 0:
            raise ValueError("the initial pair (0, 0) violates condition (ii) and is rejected")
        if (b10, b20) not in fh_initial_roots(lam, E):
            raise ValueError("initial pair does not solve condition (i)")
        if (b10, b20) != (0.0, c):
            raise ValueError("only the branch beta1 = s, beta2 = s + 2 lam/E is valid for s >= 0")
    b1, b2 = s0, s0 + c
    sqrt_alpha = lam / math.sqrt(E) * s0 / math.sqrt(b1 * b2)
    alpha = sqrt_alpha ** 2
    u = u0 - E * s0 / lam
    q = np.array([math.log(alpha / (-2 * A)), math.log(b1), math.log(b2), u])
    return SingularStart(s0, b1, b2, alpha, u, q, lam, E, A)


def integrate_case5_s(
    cfg: Configuration,
    s0: float = 1e-6,
    s_max: float = 10.0,
    tol: float = DEFAULT_TOL,
    u0: float = 0.0,
    s_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate the radial system from the linear solution at s0 up to s_max."""
    st = singular_start_case5(cfg, s0, u0=u0)
    traj = dopri5(case5_s_rhs(st.lam, st.E), s0, st.state_s, s_max, tol=tol, t_eval=s_eval)
    traj.coordinate = "s"
    traj.extra.update(lam=st.lam, E=st.E, A=st.A, u0=u0)
    return traj


def t_of_s(s, lam: float, E: float):
    """Closed-form t(s) = sqrt(2s/lam) sqrt(1 + Es/(2 lam)) + (2/sqrt E) arccoth sqrt(1 + 2 lam/(E s)).

    arccoth x = (1/2) log((x+1)/(x-1)) is evaluated as (1/2) log1p(2/(x-1)).
    With r = Es/(2 lam), 1/(x-1) = r + sqrt(r(r+1)), which has no cancellation
    and no overflow for tiny s.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    r = E * s / (2 * lam)
    acoth = 0.5 * np.log1p(2 * (r + np.sqrt(r * (r + 1))))
    t = np.sqrt(2 * s / lam) * np.sqrt(1 + r) + 2 / math.sqrt(E) * acoth
    t = np.where(s == 0, 0.0, t)
    return float(t) if t.ndim == 0 else t


def t_of_s_quadrature(s: float, lam: float, E: float) -> float:
    """t(s) = (sqrt E/lam) int_0^s sqrt(1 + 2 lam/(E sigma)) d sigma by adaptive quadrature.

    The substitution sigma = x^2 removes the endpoint singularity.
    """
    from scipy.integrate import quad

    c = 2 * lam / E
    val, _ = quad(lambda x: 2 * math.sqrt(x * x + c), 0.0, math.sqrt(s), epsabs=0.0, epsrel=1e-13, limit=200)
    return math.sqrt(E) / lam * val


def reparametrize_t(traj: Trajectory, cfg: Configuration | None = None, lam=None, E=None, check_quadrature=True) -> Trajectory:
    """Convert an s-trajectory to t, appending alpha so rows become (q1, q2, q3, u)."""
    if traj.coordinate != "s":
        raise ValueError("expected an s-coordinate trajectory")
    if cfg is not None:
        lam, E, A = case5_parameters(cfg)
    else:
        A = traj.extra.get("A", -0.5)
        lam = lam if lam is not None else traj.extra["lam"]
        E = E if E is not None else traj.extra["E"]
    s = traj.t
    if np.any(s <= 0):
        raise ValueError("s samples must be positive")
    t = t_of_s(s, lam, E)
    if check_quadrature:
        probe = s[np.linspace(0, len(s) - 1, min(len(s), 5)).astype(int)]
        for sv in probe:
            tq = t_of_s_quadrature(float(sv), lam, E)
            if abs(tq - t_of_s(float(sv), lam, E)) > 1e-10 * max(1.0, abs(tq)):
                raise AssertionError(f"closed-form t(s) disagrees with quadrature at s={sv}")
    b1, b2, u = traj.y[:, 0], traj.y[:, 1], traj.y[:, 2]
    sqrt_alpha = lam / math.sqrt(E) * s / np.sqrt(b1 * b2)
    alpha = sqrt_alpha ** 2
    q = np.column_stack([np.log(alpha / (-2 * A)), np.log(b1), np.log(b2), u])
    out = Trajectory(t, q, "t", traj.truncated, n_steps=traj.n_steps, n_rejected=traj.n_rejected)
    out.extra = dict(traj.extra, s=s)
    return out


# ----------------------------------------------------------------------------
# Full canonical flow


def full_flow_check(
    cfg: Configuration,
    ansatz: SuperpotentialAnsatz,
    start: Sequence[float],
    t_span: tuple[float, float],
    tol: float = DEFAULT_TOL,
    p_perturbation: Sequence[float] | None = None,
    max_step: float = MAX_STEP,
) -> Trajectory:
    """Integrate q' = dH/dp, p' = -dH/dq from p(0) = grad f(q(0)) and record H and the graph defect."""
    m = cfg.r + 1
    H = hamiltonian(cfg)
    dHdp = [g.compile() for g in gradient_p(H)]
    dHdq = [g.compile() for g in gradient_q(H)]
    Hc = H.compile()
    f = ansatz.to_exppoly(m)
    gradf = [g.compile() for g in gradient_q(f)]
    zeros = np.zeros(m)
    q0 = np.asarray(start, dtype=float)
    p0 = np.array([g(zeros, q0) for g in gradf])
    if p_perturbation is not None:
        p0 = p0 + np.asarray(p_perturbation, dtype=float)

    def rhs(t, y):
        q, p = y[:m], y[m:]
        return np.concatenate([[g(p, q) for g in dHdp], [-g(p, q) for g in dHdq]])

    traj = dopri5(rhs, t_span[0], np.concatenate([q0, p0]), t_span[1], tol=tol, max_step=max_step)
    Hs, scales, defects, rel = [], [], [], []
    for row in traj.y:
        q, p = row[:m], row[m:]
        Hs.append(Hc(p, q))
        scales.append(_term_scale(H, p, q))
        gp = np.array([g(zeros, q) for g in gradf])
        defects.append(float(np.linalg.norm(p - gp)))
        rel.append(float(np.linalg.norm(p - gp) / max(1.0, np.linalg.norm(gp))))
    traj.H = np.array(Hs)
    traj.graph_defect = np.array(defects)
    traj.extra["relative_graph_defect"] = np.array(rel)
    traj.extra["H_scale"] = np.array(scales)
    return traj


def _term_scale(f: ExpPoly, p, q) -> float:
    """Sum of the absolute values of the monomials of f at (p, q).

    Cancellation in f cannot be resolved below roughly machine epsilon times
    this number, so it is the natural yardstick for |H|.
    """
    x = np.concatenate([p, q])
    total = 0.0
    for b, poly in f.terms.items():
        e = math.exp(min(700.0, float(sum(float(bi) * qi for bi, qi in zip(b, q)))))
        for mono, c in poly.terms.items():
            total += abs(float(c) * math.prod(x[i] ** k for i, k in enumerate(mono) if k)) * e
    return total


def trajectory_csv(traj: Trajectory, r: int, closed_form: np.ndarray | None = None) -> str:
    """CSV with header t,q1..qr,u,H,graph_defect (diagnostics blank when absent)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["t"] + [f"q{i + 1}" for i in range(r)] + ["u", "H", "graph_defect"]
    if closed_form is not None:
        header += [f"dev_{name}" for name in header[1:r + 2]]
    w.writerow(header)
    for k, (t, row) in enumerate(zip(traj.t, traj.y)):
        vals = [repr(float(t))] + [repr(float(x)) for x in row[: r + 1]]
        vals.append(repr(float(traj.H[k])) if traj.H is not None else "")
        vals.append(repr(float(traj.graph_defect[k])) if traj.graph_defect is not None else "")
        if closed_form is not None:
            vals += [repr(float(a - b)) for a, b in zip(row[: r + 1], closed_form[k])]
        w.writerow(vals)
    return buf.getvalue()
