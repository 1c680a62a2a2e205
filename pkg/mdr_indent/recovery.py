"""
Empirical recovery model for foams palpated before they fully relax.

E(t) = c1·exp(c2·t) + c3·exp(c4·t), with t the rest time (s) since the previous
palpation and E in Pa. Fits are weighted non-linear least squares solved with
Levenberg-Marquardt (scipy) from a deterministic grid of starting rates.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import norm

from .errors import FitFailedError, InsufficientDataError, ModelDomainError

LOGGER = logging.getLogger(__name__)

MIN_SAMPLES = 4
_EXP_LIMIT = 700.0

# (c2, c4) starting rates in units of 1 / (largest sample time)
RATE_STARTS: Tuple[Tuple[float, float], ...] = (
    (-1.0, 0.0),
    (-5.0, 0.0),
    (-1.0, -10.0),
    (-0.2, -3.0),
    (1.0, -1.0),
    (0.5, -5.0),
    (-3.0, -30.0),
)


def _exp(x: np.ndarray) -> np.ndarray:
    return np.exp(np.clip(x, -_EXP_LIMIT, _EXP_LIMIT))


@dataclass(frozen=True, slots=True)
class RecoveryParams:
    """Amplitudes c1, c3 (Pa) and rates c2, c4 (1/s)."""

    c1: float
    c2: float
    c3: float
    c4: float

    @classmethod
    def bounded(cls, e_inf: float, amplitude: float, rate: float) -> "RecoveryParams":
        """E(t) = E∞ + amplitude·exp(rate·t); requires rate < 0 for a finite asymptote."""
        if not rate < 0.0:
            raise ModelDomainError(f"recovery rate must be < 0 1/s for a bounded curve, got {rate!r}")
        return cls(c1=amplitude, c2=rate, c3=e_inf, c4=0.0)

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        t_arr = np.asarray(t, dtype=float)
        value = self.c1 * _exp(self.c2 * t_arr) + self.c3 * _exp(self.c4 * t_arr)
        return float(value) if value.ndim == 0 else value

    def gradient(self, t: Union[float, np.ndarray]) -> np.ndarray:
        """∂E/∂(c1, c2, c3, c4), one row per time."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        e2 = _exp(self.c2 * t_arr)
        e4 = _exp(self.c4 * t_arr)
        return np.column_stack([e2, self.c1 * t_arr * e2, e4, self.c3 * t_arr * e4])

    def is_positive_over(self, t_lo: float, t_hi: float, extra: Sequence[float] = ()) -> bool:
        grid = np.concatenate([np.linspace(t_lo, t_hi, 257), np.asarray(extra, dtype=float)])
        values = np.asarray(self.evaluate(grid))
        return bool(np.all(np.isfinite(values)) and np.all(values > 0.0))


def eval_recovery(params: RecoveryParams, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """E(t) = c1·e^(c2·t) + c3·e^(c4·t)."""
    return params.evaluate(t)


class RecoverySample(NamedTuple):
    t: float
    e: float
    sigma: Optional[float] = None


@dataclass(frozen=True)
class RecoveryFit:
    params: RecoveryParams
    loss: float
    covariance: np.ndarray
    n_samples: int
    start: int


def _coerce_samples(samples: Sequence[Any]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = [RecoverySample(*s) if not isinstance(s, RecoverySample) else s for s in samples]
    t = np.array([r.t for r in rows], dtype=float)
    e = np.array([r.e for r in rows], dtype=float)
    sigma = np.array([1.0 if r.sigma is None else r.sigma for r in rows], dtype=float)
    if any(r.sigma is None for r in rows) and not all(r.sigma is None for r in rows):
        raise ModelDomainError("either every recovery sample carries a sigma or none does")
    if all(r.sigma is None for r in rows):
        sigma = np.full_like(e, max(float(np.max(np.abs(e))), 1.0) if e.size else 1.0)
    if np.any(~np.isfinite(t)) or np.any(~np.isfinite(e)):
        raise ModelDomainError("recovery samples must be finite")
    if np.any(sigma <= 0.0):
        raise ModelDomainError("recovery sample sigma must be > 0 Pa")
    return t, e, sigma


class _Problem:
    """Weighted problem in normalised units: u = t / t_scale, y = E / e_scale."""

    def __init__(self, t: np.ndarray, e: np.ndarray, sigma: np.ndarray) -> None:
        self.t_scale = float(np.max(np.abs(t))) or 1.0
        self.e_scale = float(np.max(np.abs(e))) or 1.0
        self.u = t / self.t_scale
        self.y = e / self.e_scale
        self.w = sigma / self.e_scale

    def residuals(self, x: np.ndarray) -> np.ndarray:
        model = np.zeros_like(self.u)
        for amp, rate in zip(x[0::2], x[1::2]):
            model = model + amp * _exp(rate * self.u)
        return (model - self.y) / self.w

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        cols = []
        for amp, rate in zip(x[0::2], x[1::2]):
            ex = _exp(rate * self.u)
            cols.extend([ex, amp * self.u * ex])
        return np.column_stack(cols) / self.w[:, None]

    def amplitudes_for(self, rates: Sequence[float]) -> np.ndarray:
        """Weighted linear least-squares amplitudes for fixed rates."""
        basis = np.column_stack([_exp(r * self.u) for r in rates]) / self.w[:, None]
        amps, *_ = np.linalg.lstsq(basis, self.y / self.w, rcond=None)
        return amps

    def to_params(self, x: np.ndarray) -> RecoveryParams:
        x = np.concatenate([x, np.zeros(4 - x.size)])
        return RecoveryParams(
            c1=float(x[0] * self.e_scale),
            c2=float(x[1] / self.t_scale),
            c3=float(x[2] * self.e_scale),
            c4=float(x[3] / self.t_scale),
        )

    def physical_covariance(self, x: np.ndarray, cost: float) -> np.ndarray:
        jac = self.jacobian(x)
        dof = self.u.size - x.size
        scale = 2.0 * cost / dof if dof > 0 else math.nan
        cov = np.linalg.pinv(jac.T @ jac) * scale
        units = np.tile([self.e_scale, 1.0 / self.t_scale], x.size // 2)
        cov = cov * np.outer(units, units)
        full = np.zeros((4, 4))
        full[: x.size, : x.size] = cov
        return full


def _solve(problem: _Problem, x0: np.ndarray) -> Any:
    with np.errstate(over="ignore", invalid="ignore"):
        return least_squares(
            problem.residuals,
            x0,
            jac=problem.jacobian,
            method="lm",
            xtol=1e-12,
            ftol=1e-12,
            gtol=1e-12,
            max_nfev=4000,
        )


def _check_samples(t: np.ndarray, minimum: int) -> None:
    if t.size < minimum:
        raise InsufficientDataError(
            f"need >= {minimum} samples to fit the recovery model, got {t.size}", n_available=t.size
        )
    if np.unique(t).size != t.size:
        raise ModelDomainError("recovery sample times must be distinct")


def fit_single_exponential(samples: Sequence[Any]) -> RecoveryFit:
    """Best fit of E(t) = c1·exp(c2·t) (c3 = c4 = 0), used to seed the full model."""
    t, e, sigma = _coerce_samples(samples)
    _check_samples(t, 2)
    problem = _Problem(t, e, sigma)
    rate_starts = [0.0, -1.0, -5.0, 1.0]
    if np.all(problem.y > 0.0) and np.ptp(problem.u) > 0.0:
        rate_starts.insert(0, float(np.polyfit(problem.u, np.log(problem.y), 1)[0]))
    best: Optional[RecoveryFit] = None
    for index, rate in enumerate(rate_starts):
        x0 = np.array([problem.amplitudes_for([rate])[0], rate])
        result = _solve(problem, x0)
        if not np.all(np.isfinite(result.x)):
            continue
        params = problem.to_params(result.x)
        if not params.is_positive_over(float(t.min()), float(t.max()), t):
            continue
        fit = RecoveryFit(params, float(result.cost), problem.physical_covariance(result.x, result.cost), t.size, index)
        if best is None or fit.loss < best.loss:
            best = fit
    if best is None:
        raise FitFailedError("single-exponential fit failed for every start")
    return best


def fit_recovery_detailed(samples: Sequence[Any]) -> RecoveryFit:
    """
    Fit the two-exponential model and keep the parameter covariance.

    Starts: the best single-exponential fit (with c3 = 0), then one start per
    entry of RATE_STARTS whose amplitudes come from a linear solve. The lowest
    loss among starts that converge and stay positive over the sample span
    wins; ties go to the earlier start.
    """
    t, e, sigma = _coerce_samples(samples)
    _check_samples(t, MIN_SAMPLES)
    problem = _Problem(t, e, sigma)
    t_lo, t_hi = float(t.min()), float(t.max())

    starts: List[np.ndarray] = []
    try:
        seed = fit_single_exponential(samples)
        starts.append(np.array([seed.params.c1 / problem.e_scale, seed.params.c2 * problem.t_scale, 0.0, 0.0]))
    except FitFailedError as exc:
        LOGGER.debug("Single-exponential seed unavailable: %s", exc)
        starts.append(np.array([problem.amplitudes_for([0.0])[0], 0.0, 0.0, -1.0]))
    for rates in RATE_STARTS:
        amps = problem.amplitudes_for(rates)
        starts.append(np.array([amps[0], rates[0], amps[1], rates[1]]))

    candidates: List[RecoveryFit] = []
    diagnostics: List[Dict[str, Any]] = []
    for index, x0 in enumerate(starts):
        result = _solve(problem, x0)
        if not np.all(np.isfinite(result.x)) or not math.isfinite(result.cost):
            diagnostics.append({"start": index, "reason": "non-finite solution"})
            continue
        if result.status <= 0:
            diagnostics.append({"start": index, "reason": f"no convergence: {result.message}"})
            continue
        params = problem.to_params(result.x)
        if not params.is_positive_over(t_lo, t_hi, t):
            diagnostics.append({"start": index, "reason": "E(t) not positive over the sample span"})
            continue
        candidates.append(
            RecoveryFit(params, float(result.cost), problem.physical_covariance(result.x, result.cost), t.size, index)
        )

    for entry in diagnostics:
        LOGGER.debug("Recovery start %s rejected: %s", entry["start"], entry["reason"])
    if not candidates:
        raise FitFailedError("recovery fit failed for every start", diagnostics)
    best = min(candidates, key=lambda fit: (fit.loss, fit.start))
    LOGGER.info(
        "Recovery fit: start %d of %d, loss %.6g, params %s", best.start, len(starts), best.loss, best.params
    )
    return best


def fit_recovery(samples: Sequence[Any]) -> RecoveryParams:
    """Weighted (1/σ²) fit of the two-exponential recovery model."""
    return fit_recovery_detailed(samples).params


def recovery_band(fit: RecoveryFit, t: np.ndarray, level: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper confidence band of the fitted curve by the delta method."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    grad = fit.params.gradient(t)
    variance = np.einsum("ij,jk,ik->i", grad, fit.covariance, grad)
    half = norm.ppf(0.5 + level / 2.0) * np.sqrt(np.clip(variance, 0.0, None))
    centre = np.asarray(fit.params.evaluate(t))
    return centre - half, centre + half
