"""Pseudo-arclength predictor-corrector continuation with event handling.

A `system` is any object with the small interface the two cluster problems
implement (see triangle.TriangleProblem / tetrahedron.TetraProblem):

    dim                       number of unknowns (multiplier + edges)
    residual(x, p)            KKT residual, length dim
    jacobian(x, p)            symmetric bordered Jacobian, dim x dim
    parameter_derivative(x, p) d(residual)/dp
    in_domain(x)              iterates allowed here (edge positivity)
    feasible(x)               converged states allowed here (realizability)
    classify(x, p)            (stability, shape) labels for a solution
    energy(x)                 total configuration energy

Tracing uses Keller's bordered corrector in a relative-scale arclength
metric: the predictor tangent is frozen as the extra (weighted) row during
correction, and the sign of that bordered determinant is recorded per point.
Event detection compares two monitors between consecutive points: the
inertia of the unbordered Jacobian, which changes exactly where an
eigenvalue of any multiplicity crosses zero, and the sign of the tangent's
parameter component, which flips at folds.  `detect_and_localize` refines
whichever fired; `branch_switch` seeds the bifurcating branches through an
isotropy reduction, either by the asymptotic slope -2*B0/A0 of the
Lyapunov-Schmidt coefficients or, for pitchforks, by amplitude-pinned
correction walked outward along the wing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import SingularSystemError, det_sign, solve, sym_eigen

__all__ = [
    "ContinuationSettings",
    "BranchPoint",
    "Branch",
    "BifurcationEvent",
    "BranchSwitchData",
    "PseudoArclength",
    "CorrectorFailure",
    "DomainExit",
    "TraceAbort",
    "TransversalityError",
    "newton_correct",
    "branch_tangent",
    "trace_branch",
    "detect_and_localize",
    "dedup_events",
    "branch_switch",
    "concatenate_branches",
    "metric_weights",
    "is_isolated",
]


@dataclass(frozen=True)
class ContinuationSettings:
    h0: float = 1e-2
    h_min: float = 1e-6
    h_max: float = 0.5
    newton_tol: float = 1e-10
    newton_max_iters: int = 20
    step_growth: float = 1.5
    step_shrink: float = 0.5
    contraction_target: int = 4
    detection: bool = True
    max_points: int = 5000

    def __post_init__(self):
        if not (0 < self.h_min <= self.h0 <= self.h_max):
            raise ValueError("step sizes must satisfy 0 < h_min <= h0 <= h_max")


@dataclass(frozen=True)
class BranchPoint:
    state: tuple[float, ...]
    parameter: float
    arclength: float
    stability: str
    shape: str
    det_sign: int

    def z(self) -> np.ndarray:
        return np.array(self.state + (self.parameter,), dtype=float)


@dataclass
class Branch:
    points: list[BranchPoint] = field(default_factory=list)
    id: int | None = None
    parent_event: int | None = None
    label: str = ""

    def parameters(self) -> np.ndarray:
        return np.array([pt.parameter for pt in self.points])


@dataclass(frozen=True)
class BifurcationEvent:
    kind: str  # "primary" | "secondary" | "turning"
    parameter: float
    kernel_dim: int
    kernel: tuple[tuple[float, ...], ...]
    state: tuple[float, ...]
    source_branch: int | None = None
    refined: bool = True
    id: int | None = None


@dataclass(frozen=True)
class BranchSwitchData:
    v: tuple[float, ...]
    v_star: tuple[float, ...]
    A0_coef: float
    B0_coef: float
    m: float
    epsilon: float


@dataclass(frozen=True)
class PseudoArclength:
    """Corrector constraint <t, z - z_prev>_w = h with the tangent frozen.

    The inner product carries the relative-scale weights of the previous
    accepted point (see `metric_weights`), so branches whose multiplier is
    orders of magnitude larger than the edge lengths still advance in the
    parameter at a sensible rate.
    """

    prev_state: tuple[float, ...]
    prev_parameter: float
    tangent: tuple[float, ...]
    h: float
    weights: tuple[float, ...] | None = None


def metric_weights(z: np.ndarray) -> np.ndarray:
    """Diagonal arclength metric 1/max(1, |z_i|)^2: steps measure relative change."""
    return 1.0 / np.maximum(1.0, np.abs(z)) ** 2


class CorrectorFailure(RuntimeError):
    def __init__(self, message: str, residual_norm: float = math.inf, iterations: int = 0):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class DomainExit(RuntimeError):
    pass


class TraceAbort(RuntimeError):
    pass


class TransversalityError(RuntimeError):
    def __init__(self, message: str, slope_estimate: float):
        super().__init__(message)
        self.slope_estimate = slope_estimate


def _classified_point(system, x: np.ndarray, p: float, sign: int, arclength: float = 0.0) -> BranchPoint:
    stability, shape = system.classify(x, p)
    return BranchPoint(
        state=tuple(float(v) for v in x),
        parameter=float(p),
        arclength=float(arclength),
        stability=stability,
        shape=shape,
        det_sign=int(sign),
    )


def _bordered_matrix(system, x: np.ndarray, p: float, row: np.ndarray) -> np.ndarray:
    n = system.dim
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = system.jacobian(x, p)
    M[:n, n] = system.parameter_derivative(x, p)
    M[n, :] = row
    return M


def newton_correct(system, state, parameter: float, settings: ContinuationSettings,
                   constraint: PseudoArclength | None = None) -> tuple[BranchPoint, int]:
    """Correct a guess onto the solution set; returns (point, iterations used).

    With `constraint=None` the parameter stays fixed and Newton runs on the
    square KKT system; with a PseudoArclength constraint both the state and
    the parameter move, bordered by the frozen tangent row.  Convergence is
    declared when the residual infinity norm drops below newton_tol.  Raises
    CorrectorFailure on stagnation and DomainExit when an iterate (or the
    converged point) leaves the feasible region.
    """
    n = system.dim
    x = np.array(state, dtype=float)
    p = float(parameter)
    if constraint is not None:
        z_prev = np.array(constraint.prev_state + (constraint.prev_parameter,), dtype=float)
        t = np.asarray(constraint.tangent, dtype=float)
        w = (np.asarray(constraint.weights, dtype=float) if constraint.weights is not None
             else np.ones(n + 1))
        row = w * t
    res_norm = math.inf
    for it in range(settings.newton_max_iters + 1):
        if not system.in_domain(x):
            raise DomainExit(f"iterate left the domain at {system.param_name}={p:.6g}")
        F = system.residual(x, p)
        if not np.all(np.isfinite(F)):
            raise CorrectorFailure("non-finite residual", math.inf, it)
        res_norm = float(np.max(np.abs(F)))
        on_constraint = constraint is None or abs(
            row @ (np.append(x, p) - z_prev) - constraint.h) < 1e-10 * max(1.0, abs(constraint.h))
        if res_norm < settings.newton_tol and on_constraint:
            if not system.feasible(x):
                raise DomainExit(f"converged point is infeasible at {system.param_name}={p:.6g}")
            try:
                if constraint is None:
                    sign = det_sign(system.jacobian(x, p))
                else:
                    sign = det_sign(_bordered_matrix(system, x, p, row))
            except SingularSystemError:
                sign = 0  # converged onto a singular (non-isolated) solution
            return _classified_point(system, x, p, sign), it
        if it == settings.newton_max_iters:
            break
        try:
            if constraint is None:
                step, _ = solve(system.jacobian(x, p), -F)
                x = x + step
            else:
                z = np.append(x, p)
                rhs = np.empty(n + 1)
                rhs[:n] = -F
                rhs[n] = -(row @ (z - z_prev) - constraint.h)
                step, _ = solve(_bordered_matrix(system, x, p, row), rhs)
                x = x + step[:n]
                p = p + step[n]
        except SingularSystemError as exc:
            raise CorrectorFailure(f"singular corrector matrix ({exc})", res_norm, it) from exc
    raise CorrectorFailure(
        f"no convergence in {settings.newton_max_iters} iterations (|F|={res_norm:.3e})",
        res_norm, settings.newton_max_iters)


def branch_tangent(system, x: np.ndarray, p: float, t_prev: np.ndarray,
                   weights: np.ndarray | None = None) -> np.ndarray:
    """Unit tangent of the solution curve, oriented along t_prev.

    Solves [J, F_p; w*t_prev] t = e_{n+1} and normalizes in the weighted
    metric: the construction keeps <t_prev, t>_w positive, so consecutive
    tangents never flip orientation spuriously.
    """
    n = system.dim
    w = np.ones(n + 1) if weights is None else weights
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    M = _bordered_matrix(system, x, p, w * t_prev)
    try:
        t, _ = solve(M, rhs)
    except SingularSystemError:
        # reference direction happened to be orthogonal to the curve; nudge it
        bumped = w * t_prev + 1e-8 * np.ones(n + 1)
        try:
            t, _ = solve(_bordered_matrix(system, x, p, bumped), rhs)
        except SingularSystemError:
            t = np.asarray(t_prev, dtype=float).copy()  # singular point: keep the caller's direction
    return t / np.sqrt((w * t) @ t)


def _jacobian_inertia(system, x: np.ndarray, p: float) -> int:
    """Number of negative eigenvalues of the (unbordered) Jacobian.

    Along a regular branch arc the spectrum stays away from zero, so this
    integer is constant; it changes exactly where an eigenvalue crosses,
    whatever the multiplicity, which no determinant sign can guarantee (a
    double crossing leaves every determinant sign unchanged).
    """
    w, _ = sym_eigen(system.jacobian(x, p))
    return int(np.sum(w < 0.0))


def trace_branch(system, start: BranchPoint, direction, settings: ContinuationSettings,
                 window: tuple[float, float] = (0.0, math.inf),
                 bifurcation_kind: str = "secondary") -> tuple[Branch, list[BifurcationEvent]]:
    """Trace one branch from a converged start point.

    `direction` seeds the tangent orientation (only its sign content
    matters).  The trace stops at max_points, on leaving the parameter
    window, or when the corrector keeps failing/leaving the domain at the
    minimum step.  Detected events are classified as `bifurcation_kind`
    ("primary" when the caller is tracing the fully symmetric branch) or
    "turning".
    """
    x0 = np.array(start.state, dtype=float)
    p0 = float(start.parameter)
    d = np.asarray(direction, dtype=float)
    d = d / np.sqrt(d @ d)
    z = np.append(x0, p0)
    w = metric_weights(z)
    t = branch_tangent(system, x0, p0, d, w)
    try:
        sign0 = det_sign(_bordered_matrix(system, x0, p0, w * t))
    except SingularSystemError:
        sign0 = 0  # starting on a singular point (degenerate solution family)
    points = [replace(start, det_sign=int(sign0), arclength=0.0)]
    tangents = [t]
    inertias = [_jacobian_inertia(system, x0, p0)]
    events: list[BifurcationEvent] = []
    h = settings.h0
    s = 0.0
    while len(points) < settings.max_points:
        z_pred = z + h * t
        try:
            point, its = newton_correct(
                system, z_pred[:-1], z_pred[-1], settings,
                PseudoArclength(tuple(z[:-1]), float(z[-1]), tuple(t), h, tuple(w)))
        except (CorrectorFailure, DomainExit) as err:
            if h > settings.h_min:
                h = max(h * settings.step_shrink, settings.h_min)
                continue
            if len(points) == 1 and isinstance(err, CorrectorFailure):
                raise TraceAbort(f"corrector failed at the start point with minimum step: {err}") from err
            break
        z_new = point.z()
        if not (window[0] <= z_new[-1] <= window[1]):
            # shrink toward the window edge instead of losing a whole step
            if h > settings.h_min:
                h = max(h * settings.step_shrink, settings.h_min)
                continue
            break
        w_new = metric_weights(z_new)
        t_new = branch_tangent(system, z_new[:-1], z_new[-1], t, w_new)
        s += float(np.sqrt((z_new - z) @ (z_new - z)))
        point = replace(point, arclength=s)
        points.append(point)
        tangents.append(t_new)
        inertias.append(_jacobian_inertia(system, z_new[:-1], z_new[-1]))
        if settings.detection and len(points) >= 2:
            ev = detect_and_localize(
                system, points[-2], points[-1], settings,
                bifurcation_kind=bifurcation_kind,
                monitors=(inertias[-2], inertias[-1],
                          float(tangents[-2][-1]), float(tangents[-1][-1])))
            if ev is not None:
                events.append(ev)
        z, t, w = z_new, t_new, w_new
        if its <= settings.contraction_target:
            h = min(h * settings.step_growth, settings.h_max)
    return Branch(points=points), dedup_events(events)


def dedup_events(events: list[BifurcationEvent]) -> list[BifurcationEvent]:
    """Merge events closer than 1e-8 relative in the parameter."""
    kept: list[BifurcationEvent] = []
    for ev in sorted(events, key=lambda e: (e.parameter, not e.refined)):
        if any(ev.kind == k.kind and abs(ev.parameter - k.parameter) <= 1e-8 * max(1.0, abs(k.parameter))
               for k in kept):
            continue
        kept.append(ev)
    return kept


def _correct_on_hyperplane(system, q: np.ndarray, d: np.ndarray,
                           settings: ContinuationSettings) -> np.ndarray | None:
    """Newton onto the branch restricted to the hyperplane through q normal to d."""
    n = system.dim
    z = q.copy()
    for _ in range(40):
        x, p = z[:n], z[n]
        if not system.in_domain(x):
            return None
        F = system.residual(x, p)
        if not np.all(np.isfinite(F)):
            return None
        if np.max(np.abs(F)) < settings.newton_tol:
            return z
        rhs = np.empty(n + 1)
        rhs[:n] = -F
        rhs[n] = -(d @ (z - q))
        try:
            step, _ = solve(_bordered_matrix(system, x, p, d), rhs)
        except SingularSystemError:
            return None
        z = z + step
    return None


def detect_and_localize(system, a: BranchPoint, b: BranchPoint, settings: ContinuationSettings,
                        bifurcation_kind: str = "secondary",
                        monitors: tuple[int, int, float, float] | None = None
                        ) -> BifurcationEvent | None:
    """Examine one traced segment for a bifurcation or turning point.

    Two monitors are compared between the endpoints: the inertia of the
    Jacobian (its count of negative eigenvalues, which changes exactly where
    an eigenvalue of any multiplicity crosses zero, including the double and
    triple crossings on the fully symmetric branch that leave every
    determinant sign unchanged) and the sign of the tangent's parameter
    component.  A tangent flip classifies the segment as a fold and the fold
    is localized by a secant iteration on the tangent component, falling
    back to bisection whenever a secant step leaves the bracket; an inertia
    change without a tangent flip is a bifurcation crossing, localized by
    bisection on the inertia predicate.  Every probe corrects back onto the
    branch on the hyperplane orthogonal to the segment chord, so folds pose
    no difficulty.  Localization targets relative parameter accuracy 1e-10;
    if a probe correction fails the event is reported from the best point
    found, flagged `refined=False`.
    """
    za, zb = a.z(), b.z()
    chord = zb - za
    chord_len = float(np.sqrt(chord @ chord))
    if chord_len == 0.0:
        return None
    d = chord / chord_len
    if monitors is not None:
        neg_a, neg_b, tp_a, tp_b = monitors
    else:
        neg_a = _jacobian_inertia(system, za[:-1], za[-1])
        neg_b = _jacobian_inertia(system, zb[:-1], zb[-1])
        ta = branch_tangent(system, za[:-1], za[-1], d)
        tb = branch_tangent(system, zb[:-1], zb[-1], ta)
        tp_a, tp_b = float(ta[-1]), float(tb[-1])

    fold_flip = tp_a * tp_b < 0
    inertia_change = neg_a != neg_b
    if not fold_flip and not inertia_change:
        return None
    kind = "turning" if fold_flip else bifurcation_kind

    def corrected(theta: float) -> np.ndarray | None:
        return _correct_on_hyperplane(system, za + theta * chord, d, settings)

    def corrected_near(lo: float, hi: float, theta: float):
        """Probe theta, falling back to offsets inside (lo, hi).

        Exactly at a crossing the hyperplane Newton matrix is singular (the
        kernel is not controlled by the chord row), so a probe can land on a
        sliver where correction fails; nearby offsets stay on the branch.
        """
        span = hi - lo
        for frac in (0.0, 0.09, -0.09, 0.23, -0.23):
            cand = theta + frac * span
            if not (lo < cand < hi) and frac != 0.0:
                continue
            z = corrected(cand)
            if z is not None:
                return cand, z
        return theta, None

    p_tol = 1e-10 * max(1.0, abs(a.parameter), abs(b.parameter))

    def tight(lo: float, hi: float) -> bool:
        return (hi - lo) * abs(chord[-1]) < p_tol and (hi - lo) * chord_len < 1e-9 * max(1.0, chord_len)

    z_best, refined = None, True
    lo, hi = 0.0, 1.0
    if kind == "turning":
        # the chord keeps a consistent tangent orientation across the fold
        def value(z):
            return float(branch_tangent(system, z[:-1], z[-1], d)[-1])

        f_lo, f_hi = value(za), value(zb)
        theta_prev, f_prev = lo, f_lo
        theta_cur, f_cur = hi, f_hi
        for _ in range(80):
            if tight(lo, hi):
                break
            theta = None
            if f_cur != f_prev:
                theta = theta_cur - f_cur * (theta_cur - theta_prev) / (f_cur - f_prev)
            if theta is None or not (lo < theta < hi):
                theta = 0.5 * (lo + hi)
            theta, z_mid = corrected_near(lo, hi, theta)
            if z_mid is None:
                refined = False
                break
            f_mid = value(z_mid)
            z_best = z_mid
            theta_prev, f_prev = theta_cur, f_cur
            theta_cur, f_cur = theta, f_mid
            if f_lo * f_mid <= 0.0:
                hi, f_hi = theta, f_mid
            else:
                lo, f_lo = theta, f_mid
    else:
        for _ in range(80):
            if tight(lo, hi):
                break
            theta, z_mid = corrected_near(lo, hi, 0.5 * (lo + hi))
            if z_mid is None:
                refined = False
                break
            z_best = z_mid
            if _jacobian_inertia(system, z_mid[:-1], z_mid[-1]) == neg_a:
                lo = theta
            else:
                hi = theta

    if z_best is None:
        z_best = corrected(0.5 * (lo + hi))
        if z_best is None:
            # bracket lost entirely: report the midpoint at reduced precision
            z_best = za + 0.5 * chord
            refined = False

    x_ev, p_ev = z_best[:-1], z_best[-1]
    w, V = sym_eigen(system.jacobian(x_ev, p_ev))
    scale = float(np.max(np.abs(w)))
    near = np.abs(w) < max(1e-6 * scale, 1e-300)
    kernel = tuple(tuple(float(v) for v in V[:, i]) for i in range(len(w)) if near[i])
    if not kernel:
        # any true crossing or parameter reversal makes the Jacobian singular;
        # an empty kernel means the flip was a discretization artifact
        return None
    return BifurcationEvent(
        kind=kind,
        parameter=float(p_ev),
        kernel_dim=len(kernel),
        kernel=kernel,
        state=tuple(float(v) for v in x_ev),
        refined=refined,
    )


def _reduced_fixed_parameter_correct(system, basis: np.ndarray, x_guess: np.ndarray,
                                     p: float, settings: ContinuationSettings) -> np.ndarray | None:
    Z = basis
    y = Z.T @ x_guess
    for _ in range(60):
        x = Z @ y
        if not system.in_domain(x):
            return None
        F = Z.T @ system.residual(x, p)
        if np.max(np.abs(F)) < settings.newton_tol:
            return x
        try:
            step, _ = solve(Z.T @ system.jacobian(x, p) @ Z, -F)
        except SingularSystemError:
            return None
        y = y + step
    return None


def _reduced_pinned_correct(system, basis: np.ndarray, v: np.ndarray, x_ref: np.ndarray,
                            x_guess: np.ndarray, p_guess: float, delta: float,
                            settings: ContinuationSettings) -> tuple[np.ndarray, float] | None:
    """Newton with the amplitude <v, x - x_ref> pinned to delta, parameter free."""
    Z = basis
    k = Z.shape[1]
    y = Z.T @ x_guess
    p = p_guess
    vZ = Z.T @ v
    for _ in range(60):
        x = Z @ y
        if not system.in_domain(x):
            return None
        F = Z.T @ system.residual(x, p)
        pin = v @ (x - x_ref) - delta
        if max(float(np.max(np.abs(F))), abs(pin)) < settings.newton_tol:
            return x, p
        M = np.zeros((k + 1, k + 1))
        M[:k, :k] = Z.T @ system.jacobian(x, p) @ Z
        M[:k, k] = Z.T @ system.parameter_derivative(x, p)
        M[k, :k] = vZ
        rhs = -np.append(F, pin)
        try:
            step, _ = solve(M, rhs)
        except SingularSystemError:
            return None
        y = y + step[:k]
        p = p + step[k]
    return None


def is_isolated(system, x: np.ndarray, p: float) -> bool:
    """True once no Jacobian eigenvalue is trapped near zero.

    Pitchfork wings keep the critical eigenvalues at O(amplitude^2), so a
    seed too close to the bifurcation leaves every bordered matrix singular;
    the tracer needs the spectrum clear of zero before taking over.  A state
    that stays non-isolated at any amplitude signals a degenerate solution
    family (the soft-spring cluster equations, for example, admit a whole
    surface of nontrivial critical points), where branch tracing is ill
    posed.
    """
    w, _ = sym_eigen(system.jacobian(x, p))
    scale = float(np.max(np.abs(w)))
    return scale > 0 and float(np.min(np.abs(w))) > 1e-7 * scale


def _ramped_pitchfork_seed(system, Z: np.ndarray, v: np.ndarray, x0: np.ndarray, p0: float,
                           delta: float, settings: ContinuationSettings
                           ) -> tuple[np.ndarray, float] | None:
    """Walk out along a pitchfork wing by doubling the pinned amplitude.

    Each step stays in the reduced subspace, where the kernel is simple and
    the amplitude-pinned Newton is well posed arbitrarily close to the
    bifurcation; the walk stops at the first amplitude whose full Jacobian is
    comfortably regular, returning the last good wing point.
    """
    got = _reduced_pinned_correct(system, Z, v, x0, x0 + delta * v, p0, delta, settings)
    if got is None:
        return None
    x, p = got
    amp = delta
    for _ in range(16):
        if is_isolated(system, x, p):
            break
        amp *= 2.0
        nxt = _reduced_pinned_correct(system, Z, v, x0, x + 0.5 * amp * v, p, amp, settings)
        if nxt is None:
            break
        x, p = nxt
    return x, p


def branch_switch(system, event: BifurcationEvent, reduction, settings: ContinuationSettings,
                  trivial_curve=None, epsilon: float = 1e-3, pitchfork_delta: float = 1e-3,
                  fd_step: float = 1e-4) -> tuple[list[BranchPoint], BranchSwitchData]:
    """Seed the branch emanating from a bifurcation event.

    In the isotropy-reduced problem the critical eigenvalue is simple with
    unit kernel vector v (== the left null vector, the reduced Jacobian being
    symmetric).  The quadratic coefficient is the second directional
    difference of the reduced residual along v; the parameter coefficient
    differentiates the reduced Jacobian along the known symmetric branch
    `trivial_curve`.  Their ratio gives the branch slope m = -2*B0/A0 and two
    seeds at parameter offsets +-epsilon, corrected at fixed parameter.

    Degenerate (pitchfork) events, |A0| below 1e-8, and events without a
    `trivial_curve` are seeded by perturbing the critical state along v with
    the amplitude pinned to +-pitchfork_delta and the parameter free; the
    amplitude is then doubled along the wing until the Jacobian spectrum
    clears zero, so the returned seeds are traceable.

    Every converged seed is re-verified against the full residual before
    being returned.
    """
    P = reduction.projection
    Z = reduction.basis
    v = reduction.kernel_unit()
    x0 = np.array(event.state, dtype=float)
    p0 = float(event.parameter)

    F0 = P @ system.residual(x0, p0)
    Fp = P @ system.residual(x0 + fd_step * v, p0)
    Fm = P @ system.residual(x0 - fd_step * v, p0)
    a0 = float(v @ ((Fp - 2.0 * F0 + Fm) / fd_step ** 2))

    b0 = 0.0
    if trivial_curve is not None:
        dp = 1e-5 * max(1.0, abs(p0))
        Lp = P @ system.jacobian(trivial_curve(p0 + dp), p0 + dp) @ P
        Lm = P @ system.jacobian(trivial_curve(p0 - dp), p0 - dp) @ P
        b0 = float(v @ (((Lp - Lm) / (2.0 * dp)) @ v))
        if abs(b0) < 1e-8:
            raise TransversalityError(
                f"critical eigenvalue is not transversal at {system.param_name}={p0:.6g}", b0)

    seeds: list[BranchPoint] = []
    m = 0.0
    if trivial_curve is not None and abs(a0) > 1e-8:
        m = -2.0 * b0 / a0
        for eps in (epsilon, -epsilon):
            p_seed = p0 + eps
            guess = trivial_curve(p_seed) + eps * m * v
            x = _reduced_fixed_parameter_correct(system, Z, guess, p_seed, settings)
            if x is None:
                continue
            seeds.append(_verified_seed(system, x, p_seed, settings))
    else:
        for delta in (pitchfork_delta, -pitchfork_delta):
            got = _ramped_pitchfork_seed(system, Z, v, x0, p0, delta, settings)
            if got is None:
                continue
            x, p_seed = got
            seeds.append(_verified_seed(system, x, p_seed, settings))

    data = BranchSwitchData(
        v=tuple(float(t) for t in v),
        v_star=tuple(float(t) for t in v),
        A0_coef=a0,
        B0_coef=b0,
        m=m,
        epsilon=epsilon,
    )
    return seeds, data


def _verified_seed(system, x: np.ndarray, p: float, settings: ContinuationSettings) -> BranchPoint:
    full = float(np.max(np.abs(system.residual(x, p))))
    if full > 10.0 * settings.newton_tol:
        raise CorrectorFailure(f"reduced-space seed fails full-system verification (|F|={full:.3e})", full)
    try:
        sign = det_sign(system.jacobian(x, p))
    except SingularSystemError:
        sign = 0  # non-isolated solution (degenerate family); no orientation to record
    return _classified_point(system, x, p, sign)


def concatenate_branches(first: Branch, junction: BranchPoint | None, second: Branch) -> Branch:
    """Join two half-traces into one branch (first reversed), rebuilding arclength.

    Coincident points at the junction (the halves usually share their seed or
    start state) are collapsed so arclength stays strictly increasing.
    """
    pts = list(reversed(first.points))
    if junction is not None:
        pts.append(junction)
    pts.extend(second.points)
    out: list[BranchPoint] = []
    s = 0.0
    prev = None
    for pt in pts:
        if prev is not None:
            dz = pt.z() - prev.z()
            step = float(np.sqrt(dz @ dz))
            if step < 1e-12 * max(1.0, float(np.max(np.abs(pt.z())))):
                continue
            s += step
        out.append(replace(pt, arclength=s))
        prev = pt
    return Branch(points=out, label=second.label or first.label)
