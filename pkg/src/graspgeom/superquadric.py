"""Superquadric shape model and regularized recovery from surface points.

The implicit (inside-outside) function in the canonical frame is

    F(x, y, z) = ((|x|/a1)^(2/e2) + (|y|/a2)^(2/e2))^(e2/e1) + (|z|/a3)^(2/e1)

with F < 1 inside, F = 1 on the surface, F > 1 outside. Recovery minimizes
the radial point-to-surface distance of the input cloud jointly with a
regularizer that pulls the superquadric surface onto the mesh, evaluated
through the mesh's signed-distance grid: points of the superquadric surface
that sit far from the mesh (inside or outside alike) are penalized.

Optimization is bounded multi-start nonlinear least squares; the starts are
the principal-axis box of the input points under all six axis permutations,
which plays the role of EMS-style switching between equivalent
parameterizations.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from .mesh import principal_axes
from .sdf import SdfGrid, query
from .transforms import matrix_to_quat, quat_normalize, quat_to_matrix

EXPONENT_BOUNDS = (0.1, 1.9)   # numerical-stability range
SCALE_BOUNDS = (1e-4, 1.0)     # meters

_PERMUTATIONS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
_F_FLOOR = 1e-30  # keeps F^(-e1/2) finite near the center


class FitError(RuntimeError):
    """Raised when recovery cannot produce a finite result."""


@dataclass(eq=False)
class Superquadric:
    """11-DoF shape: scale (a1, a2, a3), exponents (e1, e2), pose."""

    scale: np.ndarray       # (3,) m, each > 0
    exponents: np.ndarray   # (2,), each within EXPONENT_BOUNDS
    position: np.ndarray    # (3,) m
    quaternion: np.ndarray  # (4,) unit, (w, x, y, z)

    def __post_init__(self):
        s = np.asarray(self.scale, dtype=np.float64).reshape(3).copy()
        e = np.asarray(self.exponents, dtype=np.float64).reshape(2).copy()
        p = np.asarray(self.position, dtype=np.float64).reshape(3).copy()
        q = np.asarray(self.quaternion, dtype=np.float64).reshape(4).copy()
        if not (np.all(np.isfinite(s)) and np.all(s > 0)):
            raise ValueError(f"scale must be positive and finite, got {s}")
        lo, hi = EXPONENT_BOUNDS
        if not (np.all(e >= lo - 1e-12) and np.all(e <= hi + 1e-12)):
            raise ValueError(f"exponents must lie in [{lo}, {hi}], got {e}")
        if not np.all(np.isfinite(p)):
            raise ValueError("position must be finite")
        if abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise ValueError(f"quaternion is not unit norm: {q}")
        q = quat_normalize(q)
        for a in (s, e, p, q):
            a.flags.writeable = False
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "exponents", np.clip(e, lo, hi))
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "quaternion", q)

    @property
    def rotation(self):
        return quat_to_matrix(self.quaternion)

    def to_canonical(self, points):
        pts = np.asarray(points, dtype=np.float64)
        return (pts - self.position) @ self.rotation


@dataclass
class FitConfig:
    """Recovery hyperparameters; `lam` is the regularization weight."""

    lam: float = 1.0
    n_surface_samples: int = 500
    n_starts: int = 6
    max_iters: int = 200
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        for name in ("n_surface_samples", "n_starts", "max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(eq=False)
class FitResult:
    superquadric: Superquadric
    data_loss: float   # mean point-to-superquadric radial distance (m)
    reg_loss: float    # mean |SDF| over superquadric surface samples (m)
    converged: bool
    start_index: int
    start_losses: tuple = field(default=())


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def _implicit_canonical(local, scale, exponents):
    a1, a2, a3 = scale
    e1, e2 = exponents
    x = np.abs(local[..., 0]) / a1
    y = np.abs(local[..., 1]) / a2
    z = np.abs(local[..., 2]) / a3
    xy = np.power(x, 2.0 / e2) + np.power(y, 2.0 / e2)
    return np.power(xy, e2 / e1) + np.power(z, 2.0 / e1)


def implicit_value(sq: Superquadric, points):
    """Barr inside-outside function F; < 1 inside, 1 on surface, > 1 outside."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    local = sq.to_canonical(pts.reshape(-1, 3))
    f = _implicit_canonical(local, sq.scale, sq.exponents)
    return float(f[0]) if single else f


def _signed_power(base, exponent):
    return np.sign(base) * np.power(np.abs(base), exponent)


def _surface_from_angles(eta, omega, scale, exponents):
    a1, a2, a3 = scale
    e1, e2 = exponents
    ce = _signed_power(np.cos(eta), e1)
    se = _signed_power(np.sin(eta), e1)
    co = _signed_power(np.cos(omega), e2)
    so = _signed_power(np.sin(omega), e2)
    return np.column_stack([a1 * ce * co, a2 * ce * so, a3 * se])


def _stratified_angles(n, rng):
    """n (eta, omega) pairs, one per cell of a jittered grid over the
    parameter rectangle [-pi/2, pi/2] x [-pi, pi)."""
    n_eta = max(1, int(math.ceil(math.sqrt(n))))
    n_om = int(math.ceil(n / n_eta))
    cells = n_eta * n_om
    je = rng.random(cells)
    jo = rng.random(cells)
    k = np.arange(cells)
    row = k // n_om
    col = k % n_om
    eta = -0.5 * np.pi + (row + je) * (np.pi / n_eta)
    omega = -np.pi + (col + jo) * (2.0 * np.pi / n_om)
    return eta[:n], omega[:n]


def sq_surface_sample(sq: Superquadric, n: int, seed: int):
    """n world-frame points on the superquadric surface (|F - 1| <= 1e-6),
    stratified over the trigonometric parameterization with seeded jitter."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    eta, omega = _stratified_angles(n, rng)
    local = _surface_from_angles(eta, omega, sq.scale, sq.exponents)
    return local @ sq.rotation.T + sq.position


def radial_distance(sq: Superquadric, points):
    """Radial Euclidean distance estimate ||x0|| * |1 - F(x0)^(-e1/2)|.

    Exact for spheres; the standard distance proxy for superquadric fitting.
    Undefined at the center (direction is ambiguous) -> ValueError.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    local = sq.to_canonical(pts.reshape(-1, 3))
    r = np.linalg.norm(local, axis=1)
    if np.any(r < 1e-12):
        raise ValueError("radial_distance is undefined at the superquadric center")
    f = _implicit_canonical(local, sq.scale, sq.exponents)
    d = r * np.abs(1.0 - np.power(np.maximum(f, _F_FLOOR), -sq.exponents[0] / 2.0))
    return float(d[0]) if single else d


# ---------------------------------------------------------------------------
# recovery
# ---------------------------------------------------------------------------

def _unpack(theta):
    scale = theta[0:3]
    exponents = theta[3:5]
    position = theta[5:8]
    rotmat = Rotation.from_rotvec(theta[8:11]).as_matrix()
    return scale, exponents, position, rotmat


def _signed_radial(points, theta):
    scale, exponents, position, rotmat = _unpack(theta)
    local = (points - position) @ rotmat
    r = np.linalg.norm(local, axis=1)
    r = np.maximum(r, 1e-12)
    f = _implicit_canonical(local, scale, exponents)
    g = np.power(np.maximum(f, _F_FLOOR), -exponents[0] / 2.0)
    return r - r * g  # positive outside the surface, negative inside


def _perm_starts(points, axes, n_starts, rng):
    proj = points @ axes
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    center = axes @ ((lo + hi) / 2.0)
    half = np.maximum((hi - lo) / 2.0, 1e-3)
    starts = []
    for k in range(n_starts):
        perm = _PERMUTATIONS[k % len(_PERMUTATIONS)]
        r = axes[:, perm].copy()
        if np.linalg.det(r) < 0:
            r[:, 2] = -r[:, 2]
        scale0 = np.clip(half[list(perm)], SCALE_BOUNDS[0] * 10, SCALE_BOUNDS[1])
        if k < len(_PERMUTATIONS):
            exp0 = np.ones(2)
        else:  # extra starts beyond the six permutations get jittered shapes
            exp0 = rng.uniform(0.4, 1.6, size=2)
        theta0 = np.concatenate([scale0, exp0, center, Rotation.from_matrix(r).as_rotvec()])
        starts.append(theta0)
    return starts


def _volume_refined_axes(points, base_axes):
    """Frame minimizing the projected bounding-box volume.

    PCA axes of symmetric clouds (cubes, near-spheres) are arbitrary because
    the covariance eigenvalues tie; the minimum-volume frame is face-aligned
    for boxy shapes and therefore a far better descent start. Local
    Nelder-Mead refinements from a handful of 45-degree offsets are enough
    at initialization accuracy.
    """
    from scipy.optimize import minimize

    sub = points[:: max(1, len(points) // 800)]

    def volume(rotvec):
        r = base_axes @ Rotation.from_rotvec(rotvec).as_matrix()
        proj = sub @ r
        ext = proj.max(axis=0) - proj.min(axis=0)
        return float(ext[0] * ext[1] * ext[2])

    quarter = np.pi / 4.0
    seeds = [np.zeros(3),
             np.array([quarter, 0, 0]), np.array([0, quarter, 0]),
             np.array([0, 0, quarter]), np.array([quarter, quarter, 0]),
             np.array([0, quarter, quarter]), np.array([quarter, 0, quarter])]
    best = None
    for seed in seeds:
        res = minimize(volume, seed, method="Nelder-Mead",
                       options={"xatol": 1e-4, "fatol": 1e-12, "maxiter": 300})
        if best is None or res.fun < best.fun:
            best = res
    return base_axes @ Rotation.from_rotvec(best.x).as_matrix()


def _initial_starts(points, n_starts, rng):
    """Principal-axis box of the cloud under each axis permutation; when the
    covariance spectrum is degenerate (frame unreliable), the same
    permutations of the minimum-volume frame are appended."""
    axes = principal_axes(points)
    starts = _perm_starts(points, axes, n_starts, rng)
    centered = points - points.mean(axis=0)
    eigvals = np.sort(np.linalg.eigvalsh(centered.T @ centered / len(points)))
    top = max(eigvals[2], 1e-30)
    degenerate = (eigvals[2] - eigvals[1] <= 0.1 * top
                  or eigvals[1] - eigvals[0] <= 0.1 * top)
    if degenerate:
        refined = _volume_refined_axes(points, axes)
        starts += _perm_starts(points, refined, min(n_starts, 6), rng)
    return starts


def _switch_candidates(theta):
    """Reparameterization candidates in the spirit of EMS switching.

    A square cross-section is representable either aligned (e2 -> 0) or
    rotated 45 degrees as a diamond (e2 -> 2); PCA frames of symmetric clouds
    are arbitrary, so a converged fit may sit in the wrong one of the two
    basins. Offer the dual as a fresh start and let the descent decide.
    """
    scale, exponents, position, rotmat = _unpack(theta)
    a1, a2, a3 = scale
    e2 = exponents[1]
    if abs(a1 - a2) > 0.25 * max(a1, a2):
        return []
    rot45 = rotmat @ Rotation.from_rotvec([0.0, 0.0, np.pi / 4.0]).as_matrix()
    mean_a = (a1 + a2) / 2.0
    out = []
    if e2 >= 1.4:  # diamond-like: offer the aligned square
        scale_new = np.array([mean_a / math.sqrt(2.0), mean_a / math.sqrt(2.0), a3])
        exps_new = np.array([exponents[0], 0.2])
    elif e2 <= 0.6:  # square-like: offer the rotated diamond
        scale_new = np.array([mean_a * math.sqrt(2.0), mean_a * math.sqrt(2.0), a3])
        exps_new = np.array([exponents[0], 1.8])
    else:
        return out
    theta_new = np.concatenate([
        np.clip(scale_new, *SCALE_BOUNDS),
        np.clip(exps_new, *EXPONENT_BOUNDS),
        position,
        Rotation.from_matrix(rot45).as_rotvec()])
    out.append(theta_new)
    return out


def fit_superquadric(points, mesh_sdf: SdfGrid = None,
                     config: FitConfig = None) -> FitResult:
    """Recover a superquadric from surface points of an object.

    Minimizes the squared radial distances of `points` to the superquadric
    surface plus `config.lam` times the squared mesh SDF sampled on the
    superquadric surface (`mesh_sdf` must cover the same object in the same
    frame; it may be omitted when lam == 0). The reported data_loss/reg_loss
    are the mean absolute radial distance and the mean |SDF|, and the start
    with the smallest data_loss + lam * reg_loss wins.
    """
    if config is None:
        config = FitConfig()
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    if len(pts) < 11:
        raise FitError(f"need at least 11 points to fit 11 DoF, got {len(pts)}")
    if config.lam > 0 and mesh_sdf is None:
        raise FitError("a mesh SDF grid is required when lam > 0")

    rng = np.random.default_rng(config.seed)
    starts = _initial_starts(pts, config.n_starts, rng)
    n = len(pts)
    m = config.n_surface_samples
    span = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    lb = np.array([SCALE_BOUNDS[0]] * 3 + [EXPONENT_BOUNDS[0]] * 2 + [-np.inf] * 6)
    ub = np.array([SCALE_BOUNDS[1]] * 3 + [EXPONENT_BOUNDS[1]] * 2 + [np.inf] * 6)

    w_data = 1.0 / math.sqrt(n)

    x_scale = np.concatenate([np.full(3, max(span, 1e-3)), np.ones(2),
                              np.full(3, max(span, 1e-3)), np.ones(3)])

    def descend(theta0, angle_seed):
        # one fixed jittered angle set per descent keeps the objective smooth
        angle_rng = np.random.default_rng([config.seed, angle_seed])
        eta, omega = _stratified_angles(m, angle_rng)

        if config.lam > 0:
            def residuals(theta):
                res = _signed_radial(pts, theta) * w_data
                scale, exponents, position, rotmat = _unpack(theta)
                surf = _surface_from_angles(eta, omega, scale, exponents)
                world = surf @ rotmat.T + position
                # weight by the local area element so the corner-clustered
                # parameterization does not dominate the penalty
                d = 1e-3
                de = (_surface_from_angles(eta + d, omega, scale, exponents)
                      - _surface_from_angles(eta - d, omega, scale, exponents))
                do = (_surface_from_angles(eta, omega + d, scale, exponents)
                      - _surface_from_angles(eta, omega - d, scale, exponents))
                w = np.linalg.norm(np.cross(de, do), axis=1)
                total = w.sum()
                if total > 0:
                    w = w / total
                else:
                    w = np.full(len(w), 1.0 / len(w))
                reg = query(mesh_sdf, world) * np.sqrt(config.lam * w)
                return np.concatenate([res, reg])
        else:
            def residuals(theta):
                return _signed_radial(pts, theta) * w_data

        sol = least_squares(
            residuals, theta0, bounds=(lb, ub), method="trf",
            ftol=config.tol, xtol=config.tol, gtol=config.tol,
            max_nfev=config.max_iters * (len(theta0) + 1),
            x_scale=x_scale)
        scale, exponents, position, rotmat = _unpack(sol.x)
        sq = Superquadric(scale=np.clip(scale, *SCALE_BOUNDS),
                          exponents=np.clip(exponents, *EXPONENT_BOUNDS),
                          position=position,
                          quaternion=matrix_to_quat(rotmat))
        data_loss = float(np.mean(radial_distance(sq, pts)))
        if mesh_sdf is not None:
            surf = sq_surface_sample(sq, m, config.seed)
            reg_loss = float(np.mean(np.abs(query(mesh_sdf, surf))))
        else:
            reg_loss = 0.0
        loss = data_loss + config.lam * reg_loss
        return loss, sol.x, sq, data_loss, reg_loss, sol.status > 0

    candidates = []
    start_losses = []
    solutions = []
    for start_index, theta0 in enumerate(starts):
        try:
            loss, theta, sq, data_loss, reg_loss, ok = descend(theta0, start_index)
        except ValueError:
            start_losses.append(np.inf)
            continue
        start_losses.append(loss if np.isfinite(loss) else np.inf)
        if np.isfinite(loss):
            solutions.append(theta)
            candidates.append((loss, start_index,
                               FitResult(superquadric=sq, data_loss=data_loss,
                                         reg_loss=reg_loss, converged=ok,
                                         start_index=start_index)))

    # switching stage: descend the duality reparameterizations of each solution
    switch_seen = len(starts)
    for theta in list(solutions):
        for theta0 in _switch_candidates(theta):
            idx = switch_seen
            switch_seen += 1
            try:
                loss, _, sq, data_loss, reg_loss, ok = descend(theta0, idx)
            except ValueError:
                start_losses.append(np.inf)
                continue
            start_losses.append(loss if np.isfinite(loss) else np.inf)
            if np.isfinite(loss):
                candidates.append((loss, idx,
                                   FitResult(superquadric=sq, data_loss=data_loss,
                                             reg_loss=reg_loss, converged=ok,
                                             start_index=idx)))

    if not candidates:
        raise FitError("all starts produced non-finite losses")
    candidates.sort(key=lambda c: (c[0], c[1]))
    best = candidates[0][2]
    best.start_losses = tuple(start_losses)
    return best


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_fit_result(result: FitResult, path) -> None:
    sq = result.superquadric
    doc = {
        "scale": list(map(float, sq.scale)),
        "exponents": list(map(float, sq.exponents)),
        "position": list(map(float, sq.position)),
        "quaternion_wxyz": list(map(float, sq.quaternion)),
        "data_loss": float(result.data_loss),
        "reg_loss": float(result.reg_loss),
        "converged": bool(result.converged),
        "start_index": int(result.start_index),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_fit_result(path) -> FitResult:
    with open(path) as fh:
        doc = json.load(fh)
    sq = Superquadric(scale=np.array(doc["scale"]),
                      exponents=np.array(doc["exponents"]),
                      position=np.array(doc["position"]),
                      quaternion=np.array(doc["quaternion_wxyz"]))
    return FitResult(superquadric=sq, data_loss=doc["data_loss"],
                     reg_loss=doc["reg_loss"], converged=doc["converged"],
                     start_index=doc["start_index"])
