"""Dense complex linear algebra, adaptive complex ODE integration, and
eigenvalue-path tracking.

Everything here operates on plain numpy arrays with ``complex128`` entries.
The integrator is a Dormand-Prince 5(4) embedded pair with cubic Hermite
dense output; step-size underflow is treated as the signature of a movable
singularity of the (meromorphic) solutions handled by this package and is
reported as :class:`MovableSingularityError` instead of propagating NaNs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "AmbiguousTrackingError",
    "EigenvalueError",
    "IntegrationError",
    "MovableSingularityError",
    "Trajectory",
    "TrackedPaths",
    "eigenvalues",
    "integrate_ode",
    "permutation_order",
    "track_trajectories",
]

# step-size floor (in time units) below which we declare a movable pole
STEP_FLOOR = 1e-12
MAX_STEPS = 2_000_000


class EigenvalueError(RuntimeError):
    """QR iteration failed to converge; never silently wrong."""


class IntegrationError(RuntimeError):
    """The integrator hit its step cap without finishing the window."""


class MovableSingularityError(RuntimeError):
    """Integration ran into a step-size underflow near a movable pole."""

    def __init__(self, last_time: float):
        self.last_time = last_time
        super().__init__(
            f"step size underflow at t = {last_time!r}: solution is "
            "approaching a movable singularity"
        )


class AmbiguousTrackingError(RuntimeError):
    """Frame-to-frame eigenvalue displacement too large for unambiguous
    matching; the caller must refine the sampling."""

    def __init__(self, index: int, displacement: float, gap: float):
        self.index = index
        self.displacement = displacement
        self.gap = gap
        super().__init__(
            f"ambiguous eigenvalue matching between frames {index} and "
            f"{index + 1}: displacement {displacement:.3e} exceeds half the "
            f"minimal eigenvalue gap {gap:.3e}; refine the time sampling"
        )


def eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a square complex matrix, with multiplicity.

    Backed by LAPACK's Hessenberg-reduction + implicitly shifted QR, which
    is backward stable; sizes here never exceed a few dozen.

    Parameters
    ----------
    m : (n, n) array_like
        Square matrix with finite entries.

    Returns
    -------
    ndarray of complex
        The ``n`` eigenvalues in LAPACK order (no sorting is applied).
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix entries must be finite")
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise EigenvalueError(f"eigenvalue iteration did not converge: {exc}") from exc


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of an ODE system.

    ``states[k]`` is the flat complex state vector at ``times[k]``; all
    state vectors share one length and ``times`` is strictly increasing.
    """

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=complex)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("times must be a non-empty 1-d array")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if s.ndim != 2 or s.shape[0] != t.size:
            raise ValueError("states must have one row per time")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    @property
    def dim(self) -> int:
        return self.states.shape[1]


# dense-output weights matched to the Dormand-Prince pair; together with
# the four Hermite-type terms below they give a fifth-order-accurate
# interpolant, which the finite-difference residual checks need (a plain
# cubic Hermite loses two orders under d^2/dt^2 amplification)
_DP_D = np.array(
    [
        -12715105075 / 11282082432,
        0.0,
        87487479700 / 32700410799,
        -10690763975 / 1880347072,
        701980252875 / 199316789632,
        -1453857185 / 822651844,
        69997945 / 29380423,
    ]
)


class DenseSolution:
    """Piecewise interpolant over the accepted steps (fifth order)."""

    def __init__(self, ts, segments):
        # segments[k] = (h, rcont1..rcont5) for [ts[k], ts[k+1]]
        self.ts = np.asarray(ts, dtype=float)
        self.segments = segments

    def __call__(self, t: float) -> np.ndarray:
        ts = self.ts
        if not ts[0] <= t <= ts[-1] + 1e-12 * max(1.0, abs(ts[-1])):
            raise ValueError(f"t = {t} outside integrated range [{ts[0]}, {ts[-1]}]")
        k = int(np.searchsorted(ts, t, side="right") - 1)
        k = min(max(k, 0), len(ts) - 2)
        h, r1, r2, r3, r4, r5 = self.segments[k]
        s = (t - ts[k]) / h
        s1 = 1.0 - s
        return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)))


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th- and embedded 4th-order weights
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


def integrate_ode(rhs, y0, t_span, tol=1e-10, t_eval=None, return_dense=False):
    """Integrate ``dy/dt = rhs(t, y)`` over a complexified state.

    Adaptive Dormand-Prince 5(4): fifth-order propagation with a
    fourth-order embedded error estimate; per-step local error is kept
    below ``tol`` componentwise (relative to ``1 + |y|``). Dense output at
    ``t_eval`` uses cubic Hermite interpolation between accepted steps.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt`` with ``t`` real and ``y`` complex.
    y0 : array_like of complex
        Initial state.
    t_span : (float, float)
        Integration window ``(t0, t1)`` with ``t1 > t0``.
    tol : float
        Local error tolerance, in ``[1e-14, 1e-4]``.
    t_eval : array_like of float, optional
        Sample times (must lie inside ``t_span``); defaults to the
        accepted step points.
    return_dense : bool
        Also return the dense interpolant (used internally for eigenvalue
        path refinement).

    Raises
    ------
    MovableSingularityError
        On step-size underflow (the hallmark of a movable pole); carries
        the last reliable time.
    """
    if not 1e-14 <= tol <= 1e-4:
        raise ValueError(f"tol must lie in [1e-14, 1e-4], got {tol}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    y = np.asarray(y0, dtype=complex).copy()
    if y.ndim != 1:
        raise ValueError("y0 must be a flat vector")
    if not np.all(np.isfinite(y.view(float))):
        raise ValueError("y0 must be finite")

    f = np.asarray(rhs(t0, y), dtype=complex)
    if f.shape != y.shape or not np.all(np.isfinite(f.view(float))):
        raise ValueError("rhs is not finite on the initial state")

    # conservative initial step from the first derivative scale
    fscale = float(np.max(np.abs(f) / (1.0 + np.abs(y))))
    h = 0.1 * (t1 - t0)
    if fscale > 0:
        h = min(h, 0.1 / fscale)
    h = max(h, STEP_FLOOR * 10)

    ts = [t0]
    ys = [y.copy()]
    segments = []
    t = t0
    k = np.empty((7, y.size), dtype=complex)
    k[0] = f
    nsteps = 0
    while t < t1:
        if nsteps > MAX_STEPS:
            raise IntegrationError("integration exceeded the step cap")
        h = min(h, t1 - t)
        if h < STEP_FLOOR:
            raise MovableSingularityError(t)
        for i in range(1, 7):
            yi = y + h * sum(a * k[j] for j, a in enumerate(_DP_A[i]))
            k[i] = rhs(t + _DP_C[i] * h, yi)
        y_new = y + h * (_DP_B5 @ k)
        err_vec = h * (_DP_E @ k)
        finite = np.all(np.isfinite(y_new.view(float))) and np.all(
            np.isfinite(err_vec.view(float))
        )
        if finite:
            sc = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
            err = float(np.max(np.abs(err_vec) / sc))
        else:
            err = np.inf
        if err <= 1.0:
            k7 = np.asarray(rhs(t + h, y_new), dtype=complex)
            if not np.all(np.isfinite(k7.view(float))):
                raise MovableSingularityError(t)
            dy = y_new - y
            r3 = h * k[0] - dy
            r5 = h * (np.tensordot(_DP_D[:6], k[:6], axes=1) + _DP_D[6] * k7)
            seg = (h, y.copy(), dy, r3, -h * k7 + dy - r3, r5)
            t += h
            y = y_new
            k[0] = k7  # FSAL stage reused as next first stage
            ts.append(t)
            ys.append(y.copy())
            segments.append(seg)
        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
        nsteps += 1

    dense = DenseSolution(ts, segments)
    if t_eval is None:
        traj = Trajectory(np.array(ts), np.array(ys))
    else:
        te = np.asarray(t_eval, dtype=float)
        traj = Trajectory(te, np.array([dense(tv) for tv in te]))
    if return_dense:
        return traj, dense
    return traj


@dataclass(frozen=True)
class TrackedPaths:
    """Continuously labelled eigenvalue branches.

    ``paths[k, j]`` is branch ``k`` at ``times[j]``; at every time the
    branch values are exactly a permutation of the input frame (tracking
    relabels, it never alters values).  ``monodromy`` is the composition
    of all frame-to-frame assignments: branch ``k`` ends on the slot
    ``monodromy[k]`` of the final frame.
    """

    times: np.ndarray
    paths: np.ndarray
    monodromy: tuple[int, ...] = field(default=())

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]


def permutation_order(perm) -> int:
    """Multiplicative order of a permutation given in one-line notation."""
    n = len(perm)
    seen = [False] * n
    order = 1
    for i in range(n):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        order = order * length // np.gcd(order, length)
    return int(order)


def _match_frames(prev: np.ndarray, new: np.ndarray):
    """Min-cost assignment of ``new`` values to ``prev`` slots."""
    cost = np.abs(prev[:, None] - new[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(prev), dtype=int)
    perm[rows] = cols
    return perm


def track_trajectories(frames, times) -> TrackedPaths:
    """Thread eigenvalue multisets into continuous branches.

    Consecutive frames are matched by minimum total squared displacement.
    The matching is accepted only when the largest displacement stays
    below half the smallest eigenvalue gap in the new frame, so the
    assignment is provably unambiguous; otherwise
    :class:`AmbiguousTrackingError` asks the caller to refine sampling.
    """
    frames = [np.asarray(fr, dtype=complex) for fr in frames]
    times = np.asarray(times, dtype=float)
    if len(frames) != times.size:
        raise ValueError("one frame per time is required")
    n = frames[0].size
    if any(fr.size != n for fr in frames):
        raise ValueError("all frames must have equal cardinality")

    paths = np.empty((n, len(frames)), dtype=complex)
    paths[:, 0] = frames[0]
    monodromy = np.arange(n)
    current = frames[0].copy()
    for j in range(1, len(frames)):
        new = frames[j]
        perm = _match_frames(current, new)
        matched = new[perm]
        if n > 1:
            disp = float(np.max(np.abs(matched - current)))
            diffs = np.abs(new[:, None] - new[None, :])
            gap = float(np.min(diffs[~np.eye(n, dtype=bool)]))
            if disp >= 0.5 * gap:
                raise AmbiguousTrackingError(j - 1, disp, gap)
        paths[:, j] = matched
        # perm is indexed by branch, so it already is the composition of
        # all slot-to-slot assignments up to frame j
        monodromy = perm
        current = matched
    return TrackedPaths(times, paths, tuple(int(p) for p in monodromy))
