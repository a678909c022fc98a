"""Profile curves of rotationally invariant surfaces in E(k, tau).

A rotationally invariant surface projects to a curve gamma(s) = (u(s), v(s))
in the orbit-quotient half-plane, parametrized by quotient arclength s.
With sigma the angle between the curve tangent and the u-axis, a surface of
mean curvature H satisfies

    u' = (1 + k u^2/4) cos(sigma)
    v' = sqrt(1 + tau^2 u^2) sin(sigma)
    sigma' = 2 H - (1/u - k u/4) sin(sigma)

which conserves J = u (sin(sigma) - H u) / (1 + k u^2/4).  Spheres are the
J = 0 trajectories: they run from an axis touchdown (u = 0, sigma = 0) to
the opposite one (u = 0, sigma = pi) and obey sin(sigma) = H u throughout,
forcing the apex u = 1/H at the equator.  A closed sphere of constant mean
curvature H exists iff H^2 > -k/4 (for k <= 0), respectively H != 0 (for
k > 0, where the domain is unbounded but a minimal sphere still cannot
close up).

The axis is a removable singularity of the sigma equation: on the sphere
branch sin(sigma)/u -> H, so integration starts a small arclength
``AXIS_SERIES_S0`` off the pole with the first-order series u = s,
sigma = H s, v = v0.

Perturbed (non-CMC) competitor spheres come from the explicit family
u(sigma) = (1/H) sin(sigma) (1 + sum_m c_m cos(2 m sigma)), reconstructing
the arclength from ds/dsigma = u'(sigma) / ((1 + k u^2/4) cos(sigma)).
The cos(sigma) zero at the equator cancels exactly against the factor
sin(2 m sigma) in u'(sigma), so the reconstruction uses the reduced
identity sin(2 m sigma)/cos(sigma) = 2 sum_j (-1)^j sin((2m-1-2j) sigma)
and is smooth through the equator.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

from .geometry import GeometryParams

__all__ = [
    "AXIS_EPSILON",
    "AXIS_SERIES_S0",
    "SIGMA_STOP_MARGIN",
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
    "CONSERVATION_TOL",
    "CLOSURE_IDENTITY_TOL",
    "DEFAULT_SAMPLES",
    "ExistenceViolation",
    "IntegrationError",
    "InadmissiblePerturbation",
    "Closure",
    "ProfileState",
    "Profile",
    "PerturbationSpec",
    "StopCondition",
    "ode_rhs",
    "first_integral",
    "profile_first_integral",
    "integrate",
    "generate_cmc_sphere",
    "cmc_sigma_rate",
    "perturbed_sphere",
    "sphere_from_modes",
    "mode_shape_functions",
]

# Closure acceptance: how close to the axis the profile must return.
AXIS_EPSILON = 1e-5
# Offset of the series start from the pole; the start error is O(s0^2).
AXIS_SERIES_S0 = 1e-6
# Integration stops at sigma = pi - margin; on the exact sphere the
# residual u there measures the accumulated error.
SIGMA_STOP_MARGIN = 1e-7
# Integrator tolerances.  Conservation of J to 1e-8 and the closure
# identity to 1e-8 must hold on arclengths up to ~20 near the existence
# boundary, which needs tighter tolerances than the conservation target.
DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-14
CONSERVATION_TOL = 1e-8
CLOSURE_IDENTITY_TOL = 1e-8
# Uniform resampling: 2048 panels.
DEFAULT_SAMPLES = 2049

_U_AXIS_COLLISION = 1e-10


class ExistenceViolation(ValueError):
    """No CMC sphere exists for the requested (k, tau, H)."""


class IntegrationError(RuntimeError):
    """Trajectory integration failed or violated a post-condition."""


class InadmissiblePerturbation(ValueError):
    """A perturbed sphere shape is not a regular profile."""


class Closure(enum.Enum):
    CLOSED_SPHERE = "ClosedSphere"
    OPEN = "Open"


@dataclass(frozen=True)
class ProfileState:
    """One point (s, u, v, sigma) on a profile curve."""

    s: float
    u: float
    v: float
    sigma: float


@dataclass(frozen=True)
class StopCondition:
    """Termination rule for trajectory integration.

    With ``sigma_target`` set, integration stops when sigma reaches it and
    it is an error to run past ``max_arclength`` without getting there.
    Without it, the trajectory is simply integrated out to
    ``max_arclength``.
    """

    max_arclength: float
    sigma_target: float | None = None

    def __post_init__(self):
        if not self.max_arclength > 0.0:
            raise ValueError("max_arclength must be positive")

    @classmethod
    def sphere_closure(cls, max_arclength: float, margin: float = SIGMA_STOP_MARGIN):
        return cls(max_arclength=max_arclength, sigma_target=math.pi - margin)

    @classmethod
    def arclength(cls, max_arclength: float):
        return cls(max_arclength=max_arclength)


@dataclass(eq=False)
class Profile:
    """A sampled profile curve with geometry and closure metadata.

    Samples are uniform in arclength.  ``mean_curvature`` is set only for
    profiles generated as CMC spheres and stores the canonical positive H;
    ``orientation`` is -1 when the profile represents the mirror surface of
    a negative requested H.
    """

    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    sigma: np.ndarray
    geometry: GeometryParams
    mean_curvature: float | None = None
    closure: Closure = Closure.OPEN
    orientation: int = 1
    j_drift: float | None = None
    closure_residual: float | None = None
    tolerances: dict | None = None

    def __post_init__(self):
        # Own copies, frozen: profiles are safe to share across threads.
        for name in ("s", "u", "v", "sigma"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            setattr(self, name, arr)
        n = self.s.size
        if n < 5:
            raise ValueError("profile needs at least 5 samples")
        if any(getattr(self, name).size != n for name in ("u", "v", "sigma")):
            raise ValueError("sample arrays must have equal length")
        if not np.all(np.diff(self.s) > 0.0):
            raise ValueError("samples must be strictly increasing in s")
        if np.any(self.u < 0.0):
            raise ValueError("u must be nonnegative")
        if np.any(self.u[1:-1] <= 0.0):
            raise ValueError("interior samples must have u > 0")
        if np.any(self.u >= self.geometry.domain_radius):
            raise ValueError("profile leaves the domain of the geometry")
        if self.closure is Closure.CLOSED_SPHERE:
            if self.u[0] > AXIS_EPSILON or self.u[-1] > AXIS_EPSILON:
                raise ValueError("closed sphere must start and end on the axis")
            if abs(self.sigma[0]) > 1e-3 or abs(self.sigma[-1] - math.pi) > 1e-3:
                raise ValueError("closed sphere must turn from sigma=0 to sigma=pi")

    def __len__(self) -> int:
        return self.s.size

    @property
    def arclength(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def spacing(self) -> float:
        """Uniform grid step; raises if the samples are not uniform."""
        d = np.diff(self.s)
        h = float(d.mean())
        if not np.allclose(d, h, rtol=1e-8, atol=1e-13):
            raise ValueError("profile samples are not uniformly spaced")
        return h

    def state(self, i: int) -> ProfileState:
        return ProfileState(
            s=float(self.s[i]), u=float(self.u[i]), v=float(self.v[i]), sigma=float(self.sigma[i])
        )

    # -- serialization ---------------------------------------------------

    def to_csv(self, path, metadata: dict | None = None) -> None:
        """Write samples as CSV plus a JSON sidecar ``<path>.json``.

        Floats use shortest round-trip formatting, so reading the file back
        reproduces the arrays bit for bit.
        """
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "u", "v", "sigma"])
            for row in zip(self.s, self.u, self.v, self.sigma):
                writer.writerow([repr(float(x)) for x in row])
        sidecar = {
            "schema": "profile/1",
            "geometry": self.geometry.to_dict(),
            "mean_curvature": self.mean_curvature,
            "closure": self.closure.value,
            "orientation": self.orientation,
            "n_samples": int(self.s.size),
            "j_drift": self.j_drift,
            "closure_residual": self.closure_residual,
            "tolerances": self.tolerances,
        }
        if metadata:
            sidecar.update(metadata)
        with self._sidecar_path(path).open("w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def _sidecar_path(path: Path) -> Path:
        return path.with_name(path.name + ".json")

    @classmethod
    def from_csv(cls, path) -> "Profile":
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
        if data.shape[1] != 4:
            raise ValueError(f"profile CSV must have 4 columns s,u,v,sigma, got {data.shape[1]}")
        sidecar_path = cls._sidecar_path(path)
        if not sidecar_path.exists():
            raise FileNotFoundError(f"missing profile sidecar {sidecar_path}")
        with sidecar_path.open() as fh:
            meta = json.load(fh)
        mean_curvature = meta.get("mean_curvature")
        return cls(
            s=data[:, 0],
            u=data[:, 1],
            v=data[:, 2],
            sigma=data[:, 3],
            geometry=GeometryParams.from_dict(meta["geometry"]),
            mean_curvature=None if mean_curvature is None else float(mean_curvature),
            closure=Closure(meta.get("closure", "Open")),
            orientation=int(meta.get("orientation", 1)),
            j_drift=meta.get("j_drift"),
            closure_residual=meta.get("closure_residual"),
            tolerances=meta.get("tolerances"),
        )


@dataclass(frozen=True)
class PerturbationSpec:
    """Amplitude and angular frequency of a sphere shape modulation.

    The amplitude bound keeping the reconstructed profile regular
    (ds/dsigma > 0 everywhere) depends on the mode and is enforced when the
    profile is constructed, not here.
    """

    epsilon: float
    mode: int

    def __post_init__(self):
        if not math.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")
        if int(self.mode) != self.mode or self.mode < 1:
            raise ValueError(f"mode must be a positive integer, got {self.mode}")
        object.__setattr__(self, "mode", int(self.mode))
        object.__setattr__(self, "epsilon", float(self.epsilon))


# -- the ODE system -------------------------------------------------------


def ode_rhs(g: GeometryParams, H: float, state: ProfileState) -> tuple[float, float, float]:
    """Right-hand side (du/ds, dv/ds, dsigma/ds) of the profile system.

    The sigma equation carries a 1/u term: axis points are rejected and
    must be handled through the series start in :func:`integrate`.
    """
    if not state.u > 0.0:
        raise ValueError("ode_rhs requires u > 0; use the axis series start instead")
    u, sig = state.u, state.sigma
    b = 1.0 + 0.25 * g.k * u * u
    du = b * math.cos(sig)
    dv = math.sqrt(1.0 + g.tau**2 * u * u) * math.sin(sig)
    dsig = 2.0 * H - (1.0 / u - 0.25 * g.k * u) * math.sin(sig)
    return du, dv, dsig


def first_integral(g: GeometryParams, H: float, state: ProfileState) -> float:
    """Conserved quantity J = u (sin(sigma) - H u) / (1 + k u^2/4)."""
    u = state.u
    return u * (math.sin(state.sigma) - H * u) / (1.0 + 0.25 * g.k * u * u)


def profile_first_integral(g: GeometryParams, H: float, profile: Profile) -> np.ndarray:
    """J evaluated at every sample of a profile."""
    u = profile.u
    return u * (np.sin(profile.sigma) - H * u) / (1.0 + 0.25 * g.k * u * u)


def cmc_sigma_rate(g: GeometryParams, H: float, u) -> float | np.ndarray:
    """Turning rate dsigma/ds on a CMC sphere: H (1 + k u^2/4).

    Follows from substituting the sphere identity sin(sigma) = H u into the
    sigma equation; serves as an independent oracle for the integrator.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0.0) or np.any(u_arr > 1.0 / abs(H) + 1e-9):
        raise ValueError("u must lie in [0, 1/|H|] on a CMC sphere")
    if np.any(u_arr >= g.domain_radius):
        raise ValueError("u must stay below the domain radius")
    out = H * (1.0 + 0.25 * g.k * u_arr * u_arr)
    return out if out.ndim else float(out)


def _is_axis_start(state: ProfileState) -> bool:
    return state.u < AXIS_SERIES_S0


def _make_rhs(g: GeometryParams, H: float):
    k, tau2 = g.k, g.tau**2

    def rhs(s, y):
        u, _, sig = y
        # Floor only shields trial evaluations past the axis event; accepted
        # steps are terminated by the event before reaching it.
        ui = u if u > 1e-13 else 1e-13
        b = 1.0 + 0.25 * k * u * u
        return (
            b * math.cos(sig),
            math.sqrt(1.0 + tau2 * u * u) * math.sin(sig),
            2.0 * H - (1.0 / ui - 0.25 * k * u) * math.sin(sig),
        )

    return rhs


def _initial_point(start: ProfileState, H: float):
    """Initial solver state; axis starts get the series point off the pole."""
    if not start.u >= 0.0:
        raise ValueError(f"start radius must be nonnegative, got {start.u}")
    if not _is_axis_start(start):
        return start.s, (start.u, start.v, start.sigma), None
    sig0 = start.sigma % (2.0 * math.pi)
    if min(abs(sig0), abs(sig0 - 2.0 * math.pi)) < 1e-9:
        base = 0.0
    elif abs(sig0 - math.pi) < 1e-9:
        base = math.pi
    else:
        raise ValueError("axis starts require sigma = 0 or pi")
    s_begin = start.s + AXIS_SERIES_S0
    sign = 1.0 if base == 0.0 else -1.0
    y0 = (AXIS_SERIES_S0, start.v, base + sign * H * AXIS_SERIES_S0)
    return s_begin, y0, AXIS_SERIES_S0 / 4.0


def _solve_trajectory(
    g: GeometryParams,
    H: float,
    start: ProfileState,
    stop: StopCondition,
    rtol: float,
    atol: float,
):
    """Run the ODE solver; returns (solution, s_begin, s_end)."""
    if start.u >= g.domain_radius:
        raise ValueError(
            f"start radius {start.u} lies outside the domain (radius {g.domain_radius})"
        )
    rhs = _make_rhs(g, H)
    s_begin, y0, first_step = _initial_point(start, H)

    events = []

    def ev_axis(s, y):
        return y[0] - _U_AXIS_COLLISION

    def ev_sigma(s, y):
        return y[2] - stop.sigma_target

    def ev_exit(s, y):
        return y[0] - g.domain_radius * (1.0 - 1e-12)

    ev_axis.terminal = True
    ev_axis.direction = -1.0
    events.append(ev_axis)
    if stop.sigma_target is not None:
        ev_sigma.terminal = True
        ev_sigma.direction = 1.0
        events.append(ev_sigma)
    if math.isfinite(g.domain_radius):
        ev_exit.terminal = True
        ev_exit.direction = 1.0
        events.append(ev_exit)

    sol = solve_ivp(
        rhs,
        (s_begin, s_begin + stop.max_arclength),
        y0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=events,
        first_step=first_step,
    )
    if sol.status == -1:
        raise IntegrationError(f"integration failed: {sol.message}")
    if sol.t_events[0].size:
        raise IntegrationError("trajectory collided with the rotation axis")
    if math.isfinite(g.domain_radius) and sol.t_events[-1].size:
        raise IntegrationError("trajectory left the domain of the geometry")
    if stop.sigma_target is not None:
        if not sol.t_events[1].size:
            raise IntegrationError(
                f"sigma target {stop.sigma_target} not reached within arclength "
                f"{stop.max_arclength}"
            )
        s_end = float(sol.t_events[1][0])
    else:
        s_end = float(sol.t[-1])
    return sol, s_begin, s_end


def _sample_trajectory(
    g: GeometryParams,
    H: float,
    sol,
    s_begin: float,
    s_end: float,
    n_samples: int,
    conservation_tol: float,
) -> Profile:
    grid = np.linspace(s_begin, s_end, n_samples)
    u, v, sigma = sol.sol(grid)
    profile = Profile(s=grid, u=u, v=v, sigma=sigma, geometry=g)
    j = profile_first_integral(g, H, profile)
    drift = float(np.max(np.abs(j - j[0])))
    if drift > conservation_tol:
        raise IntegrationError(
            f"first-integral drift {drift:.3e} exceeds tolerance {conservation_tol:.1e}"
        )
    return replace(profile, j_drift=drift)


def integrate(
    g: GeometryParams,
    H: float,
    start: ProfileState,
    stop: StopCondition,
    *,
    n_samples: int = DEFAULT_SAMPLES,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    conservation_tol: float = CONSERVATION_TOL,
) -> Profile:
    """Integrate the profile system from ``start`` until ``stop``.

    Axis starts (u = 0 with sigma near 0 or pi) are replaced by the series
    point a distance ``AXIS_SERIES_S0`` along the sphere branch.  The
    result is resampled on a uniform arclength grid, and the drift of the
    first integral over the returned samples must stay below
    ``conservation_tol``.
    """
    sol, s_begin, s_end = _solve_trajectory(g, H, start, stop, rtol, atol)
    profile = _sample_trajectory(g, H, sol, s_begin, s_end, n_samples, conservation_tol)
    return replace(
        profile,
        tolerances={"rtol": rtol, "atol": atol, "conservation": conservation_tol},
    )


def _require_sphere_exists(g: GeometryParams, H: float) -> None:
    if g.k > 0.0:
        if H == 0.0:
            raise ExistenceViolation(
                f"no CMC sphere in E(k={g.k}, tau={g.tau}): requires H != 0 for k > 0"
            )
        return
    if H * H <= -0.25 * g.k + 1e-12:
        raise ExistenceViolation(
            f"no CMC sphere in E(k={g.k}, tau={g.tau}) with H={H}: requires H^2 > -k/4"
        )


def generate_cmc_sphere(
    g: GeometryParams,
    H: float,
    *,
    n_samples: int = DEFAULT_SAMPLES,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    axis_epsilon: float = AXIS_EPSILON,
    identity_tol: float = CLOSURE_IDENTITY_TOL,
    conservation_tol: float = CONSERVATION_TOL,
) -> Profile:
    """Shoot the rotationally invariant CMC sphere of mean curvature H.

    Integrates from the axis until the radius returns through the
    series-start value on the far side (the trajectory's axis touchdown,
    reached just before sigma = pi), then verifies closure there: u must be
    back below ``axis_epsilon`` and sigma within 1e-3 of pi, with the
    branch deviation |sin(sigma) - |H| u| at the return point recorded as
    ``closure_residual``.  Stopping on a bare sigma threshold like
    pi - 1e-7 is not robust: u at such a stop is of the order of the
    margin and the branch deviation there equals |J| (1 + k u^2/4)/u, so
    the roundoff-level sign of the drift of J decides whether sigma ever
    gets that far.

    The returned samples combine the integrated half up to the equator with
    its image under the exact reflection symmetry (s, u, v, sigma) ->
    (L - s, u, 2 v_eq - v, pi - sigma) of the profile system.  The shot
    second half drifts off the J = 0 branch at the roundoff level, which
    the pole factor amplifies; the mirrored half is an exact solution with
    the first half's accuracy, and the shot-versus-mirror gap stays
    separately testable through :func:`integrate`.

    On the returned samples the identity sin(sigma) = |H| u must hold to
    ``identity_tol``.  A negative H requests the mirror surface: the
    returned samples are the canonical H > 0 profile with ``orientation``
    set to -1.  ``n_samples`` must be odd so the equator is a sample.
    """
    _require_sphere_exists(g, H)
    if n_samples < 9 or n_samples % 2 == 0:
        raise ValueError("n_samples must be odd and at least 9")
    h_abs = abs(H)
    u_apex = 1.0 / h_abs
    factor = 1.0 + 0.25 * g.k * u_apex * u_apex if g.k < 0.0 else 1.0
    max_arclength = 4.0 * math.pi / (h_abs * min(1.0, factor))
    start = ProfileState(s=0.0, u=0.0, v=0.0, sigma=0.0)

    rhs = _make_rhs(g, h_abs)
    s_begin, y0, first_step = _initial_point(start, h_abs)

    def ev_return(s, y):
        # Strictly below the start radius so the event is not already zero
        # at the initial point; fires on the descent to the far pole.
        return y[0] - AXIS_SERIES_S0 * (1.0 - 1e-3)

    def ev_exit(s, y):
        return y[0] - g.domain_radius * (1.0 - 1e-12)

    ev_return.terminal = True
    ev_return.direction = -1.0
    events = [ev_return]
    if math.isfinite(g.domain_radius):
        ev_exit.terminal = True
        ev_exit.direction = 1.0
        events.append(ev_exit)

    sol = solve_ivp(
        rhs,
        (s_begin, s_begin + max_arclength),
        y0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=events,
        first_step=first_step,
    )
    if sol.status == -1:
        raise IntegrationError(f"integration failed: {sol.message}")
    if math.isfinite(g.domain_radius) and sol.t_events[1].size:
        raise IntegrationError("trajectory left the domain of the geometry")
    if not sol.t_events[0].size:
        raise IntegrationError(
            f"trajectory did not return to the axis within arclength {max_arclength:.3f}"
        )
    s_stop = float(sol.t_events[0][0])
    u_stop, _, sigma_stop = sol.sol(s_stop)
    if u_stop > axis_epsilon:
        raise IntegrationError(
            f"sphere failed to close: u = {u_stop:.3e} at the stop exceeds {axis_epsilon:.1e}"
        )
    if abs(sigma_stop - math.pi) > 1e-3:
        raise IntegrationError(
            f"sphere failed to close: sigma = {sigma_stop:.6f} at the axis return is not pi"
        )
    # Branch deviation at the return point; carries the drift of J amplified
    # by 1/u, so it is recorded as a diagnostic rather than thresholded.
    closure_residual = abs(math.sin(sigma_stop) - h_abs * u_stop)

    s_equator = brentq(lambda s: sol.sol(s)[2] - 0.5 * math.pi, s_begin, s_stop, xtol=1e-14)
    n_half = (n_samples + 1) // 2
    half_grid = np.linspace(s_begin, s_equator, n_half)
    u_half, v_half, sigma_half = sol.sol(half_grid)
    v_eq = v_half[-1]
    grid = np.linspace(s_begin, 2.0 * s_equator - s_begin, n_samples)
    u = np.concatenate((u_half, u_half[-2::-1]))
    v = np.concatenate((v_half, 2.0 * v_eq - v_half[-2::-1]))
    sigma = np.concatenate((sigma_half, math.pi - sigma_half[-2::-1]))

    profile = Profile(s=grid, u=u, v=v, sigma=sigma, geometry=g)
    j = profile_first_integral(g, h_abs, profile)
    drift = float(np.max(np.abs(j - j[0])))
    if drift > conservation_tol:
        raise IntegrationError(
            f"first-integral drift {drift:.3e} exceeds tolerance {conservation_tol:.1e}"
        )
    if not np.all(np.diff(sigma) > 0.0):
        raise IntegrationError("sigma is not monotone along the generated sphere")
    identity = float(np.max(np.abs(np.sin(sigma) - h_abs * u)))
    if identity > identity_tol:
        raise IntegrationError(
            f"sphere identity residual {identity:.3e} exceeds {identity_tol:.1e}"
        )
    return replace(
        profile,
        mean_curvature=h_abs,
        closure=Closure.CLOSED_SPHERE,
        orientation=1 if H > 0 else -1,
        j_drift=drift,
        closure_residual=closure_residual,
        tolerances={
            "rtol": rtol,
            "atol": atol,
            "conservation": conservation_tol,
            "closure_identity": identity_tol,
            "axis_epsilon": axis_epsilon,
        },
    )


# -- the explicit competitor family ---------------------------------------


def _reduced_sine_ratio(sigma: np.ndarray, m: int) -> np.ndarray:
    """sin(2 m sigma) / cos(sigma), evaluated through its removable zeros."""
    out = np.zeros_like(sigma)
    for j in range(m):
        out += (-1.0) ** j * np.sin((2 * m - 1 - 2 * j) * sigma)
    return 2.0 * out


def mode_shape_functions(H: float, coeffs: np.ndarray):
    """Closures (u, modulation, regularity numerator) of the mode family.

    The family is u(sigma) = (1/H) sin(sigma) P(sigma) with modulation
    P = 1 + sum_m c_m cos(2 m sigma).  The numerator N = u'(sigma)/cos(sigma)
    (computed through the removable equator zero) determines regularity:
    ds/dsigma = N / (H (1 + k u^2/4)) must stay positive.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    h_abs = abs(H)

    def modulation(sigma):
        p = np.ones_like(sigma)
        for m, c in enumerate(coeffs, start=1):
            p = p + c * np.cos(2 * m * sigma)
        return p

    def numerator(sigma):
        n = modulation(sigma)
        sin_sig = np.sin(sigma)
        for m, c in enumerate(coeffs, start=1):
            if c != 0.0:
                n = n - 2 * m * c * sin_sig * _reduced_sine_ratio(sigma, m)
        return n

    def radius(sigma):
        return np.sin(sigma) * modulation(sigma) / h_abs

    return radius, modulation, numerator


_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _panel_nodes(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on each interval of ``edges``."""
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    nodes = 0.5 * (b - a) * (_GL8_NODES[None, :] + 1.0) + a
    weights = 0.5 * (b - a) * _GL8_WEIGHTS[None, :]
    return nodes, weights


def sphere_from_modes(
    g: GeometryParams,
    H: float,
    coeffs,
    *,
    n_samples: int = DEFAULT_SAMPLES,
    construction_panels: int = 2048,
) -> Profile:
    """Build the rotationally invariant sphere with shape coefficients ``coeffs``.

    With all coefficients zero this reproduces the CMC sphere of mean
    curvature |H| from its closed form, independently of the shooting
    integrator.  Raises :class:`InadmissiblePerturbation` when the shape is
    not a regular profile (ds/dsigma <= 0 somewhere) or leaves the domain.
    """
    _require_sphere_exists(g, H)
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    h_abs = abs(H)
    radius, modulation, numerator = mode_shape_functions(h_abs, coeffs)

    check = np.linspace(0.0, math.pi, 8193)
    n_check = numerator(check)
    if np.min(n_check) <= 0.0:
        raise InadmissiblePerturbation(
            f"ds/dsigma <= 0 (min numerator {np.min(n_check):.3e}): profile not regular"
        )
    p_check = modulation(check)
    if np.min(p_check) <= 0.0:
        raise InadmissiblePerturbation("profile radius is not positive on the interior")
    u_check = radius(check)
    if np.max(u_check) >= g.domain_radius * (1.0 - 1e-9):
        raise InadmissiblePerturbation(
            f"profile apex {np.max(u_check):.6f} leaves the domain "
            f"(radius {g.domain_radius:.6f})"
        )

    def ds_dsigma(sigma):
        u = radius(sigma)
        return numerator(sigma) / (h_abs * (1.0 + 0.25 * g.k * u * u))

    def dv_dsigma(sigma):
        u = radius(sigma)
        return np.sqrt(1.0 + g.tau**2 * u * u) * np.sin(sigma) * ds_dsigma(sigma)

    edges = np.linspace(0.0, math.pi, construction_panels + 1)
    nodes, weights = _panel_nodes(edges)
    s_edges = np.concatenate(([0.0], np.cumsum(np.sum(ds_dsigma(nodes) * weights, axis=1))))
    v_edges = np.concatenate(([0.0], np.cumsum(np.sum(dv_dsigma(nodes) * weights, axis=1))))

    f_ends = ds_dsigma(np.array([0.0, math.pi]))
    # Near-degenerate shapes (numerator close to zero) get a monotone C1
    # interpolant; regular shapes a clamped C2 spline.
    f_all = ds_dsigma(check)
    if np.min(f_all) > 1e-3 * np.median(f_all):
        sigma_of_s = CubicSpline(s_edges, edges, bc_type=((1, 1.0 / f_ends[0]), (1, 1.0 / f_ends[1])))
    else:
        sigma_of_s = PchipInterpolator(s_edges, edges)
    v_of_s = CubicSpline(s_edges, v_edges, bc_type=((1, 0.0), (1, 0.0)))

    grid = np.linspace(0.0, float(s_edges[-1]), n_samples)
    sigma = np.clip(sigma_of_s(grid), 0.0, math.pi)
    sigma[0] = 0.0
    sigma[-1] = math.pi
    u = radius(sigma)
    u[0] = 0.0
    u[-1] = 0.0
    v = v_of_s(grid)

    is_cmc = bool(np.all(coeffs == 0.0))
    return Profile(
        s=grid,
        u=u,
        v=v,
        sigma=sigma,
        geometry=g,
        mean_curvature=h_abs if is_cmc else None,
        closure=Closure.CLOSED_SPHERE,
        orientation=1 if H > 0 else -1,
        tolerances={"construction_panels": construction_panels},
    )


def perturbed_sphere(
    g: GeometryParams,
    H: float,
    spec: PerturbationSpec,
    *,
    n_samples: int = DEFAULT_SAMPLES,
) -> Profile:
    """Sphere with a single-mode shape modulation 1 + epsilon cos(2 mode sigma).

    Not CMC for epsilon != 0; reduces to the CMC sphere at epsilon = 0.
    """
    coeffs = np.zeros(spec.mode)
    coeffs[spec.mode - 1] = spec.epsilon
    return sphere_from_modes(g, H, coeffs, n_samples=n_samples)
