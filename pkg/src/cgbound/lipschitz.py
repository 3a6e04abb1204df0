"""Sensitivity constants of the unrolled networks.

Builds the full chain from per-step contraction constants of a single scale
update, through their aggregation over the J updates of one layer and the K
layers of the network, up to the end-to-end coefficients that bound how much
the network output can move when the covariance or any scale-update
parameter moves.

The aggregated constants grow geometrically in K*J and overflow float64 at
the sizes the scaling studies use, so every chained quantity is also carried
in log form (``log_*`` fields); the generalization-bound evaluators consume
only the logs.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "H_MAX",
    "TAU_H",
    "StepConstants",
    "AggregateStep",
    "AggregateConstants",
    "step_constants",
    "cgnet_step_constants",
    "drcgnet_step_constants",
    "aggregate_step",
    "tikhonov_constants",
    "tikhonov_constants_exact",
    "network_constants",
    "network_constants_exact",
    "datafit_grad_constants",
    "fc_lipschitz",
]

# Extrema of the exp-scale regularizer derivatives over the clamp interval
# [1, e^3]: max of log(z)/z is 1/e (at z = e), and max of its derivative
# magnitude bound (1 - log z)/z^2 is 1 (at z = 1).
H_MAX = math.exp(-1.0)
TAU_H = 1.0


def _safe_log(x):
    if x < 0:
        raise ValueError(f"expected a nonnegative value, got {x}")
    return -math.inf if x == 0.0 else math.log(x)


def _logsumexp(values):
    values = np.asarray(values, dtype=np.float64)
    hi = values.max()
    if hi == -math.inf:
        return -math.inf
    return float(hi + np.log(np.exp(values - hi).sum()))


@dataclass(frozen=True)
class StepConstants:
    """Contraction constants of one scale update.

    ``r1`` multiplies the scale perturbation, ``r2`` the Gaussian-estimate
    perturbation, and ``r3[d-1]`` the perturbation of parameter block d.
    """

    r1: float
    r2: float
    r3: tuple

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0 or any(r < 0 for r in self.r3):
            raise ValueError("step constants must be nonnegative")


@dataclass(frozen=True)
class AggregateStep:
    """Constants of the J-fold composition of scale updates in one layer."""

    r_hat1: float
    r_hat2: float
    r_hat3: np.ndarray  # shape (J, D), entry [j-1, d-1]


@dataclass(frozen=True)
class AggregateConstants:
    """End-to-end sensitivity coefficients of the unrolled network.

    ``kappa`` bounds the output movement per unit covariance movement,
    ``kappa_kdj[k-1, j-1, d-1]`` per unit movement of parameter block d of
    scale update j in layer k. Linear values may overflow to ``inf`` for
    large networks; the ``log_*`` fields are always finite (or ``-inf``).
    """

    c1: float
    c2: float
    r_hat1: float
    r_hat2: float
    r_hat3: np.ndarray
    c_hat1: float
    c_hat2: np.ndarray
    kappa: float
    kappa_kdj: np.ndarray
    log_kappa: float
    log_kappa_kdj: np.ndarray


def cgnet_step_constants(z_inf, xi, p_max, mu_bound, y_max, model):
    """Contraction constants of the projected steepest-descent scale update."""
    if y_max < 0:
        raise ValueError("y_max must be nonnegative")
    a2, ainf = model.norm2, model.norm_inf
    core = z_inf * p_max * y_max * a2 * ainf
    r1 = 1.0 + p_max * (core**2 + mu_bound * TAU_H)
    r2 = p_max * y_max * a2 * (1.0 + z_inf**2 * p_max * a2 * (a2 + ainf))
    return StepConstants(r1=r1, r2=r2, r3=(xi, p_max * H_MAX))


def drcgnet_step_constants(n, z_inf, xi, p_max, delta, weight_bounds, y_max, model):
    """Contraction constants of the learned-correction scale update."""
    if y_max < 0:
        raise ValueError("y_max must be nonnegative")
    a2, ainf = model.norm2, model.norm_inf
    core = z_inf * p_max * y_max * a2 * ainf
    wprod = float(np.prod(weight_bounds))
    r1 = 1.0 + delta * core**2 + wprod
    r2 = delta * y_max * a2 * (1.0 + z_inf**2 * p_max * a2 * (a2 + ainf))
    r3 = []
    for d in range(1, len(weight_bounds) + 1):
        others = [w for ell, w in enumerate(weight_bounds, start=1) if ell != d]
        r3.append(math.sqrt(n) * z_inf * float(np.prod(others)))
    r3.append(xi)
    return StepConstants(r1=r1, r2=r2, r3=tuple(r3))


def step_constants(config, model, y_max):
    """Per-step contraction constants for the configured variant.

    All parameter blocks range over their admissible balls and measurements
    over the radius-``y_max`` ball, so these are worst-case constants.
    """
    b = config.bounds
    if config.variant == "cgnet":
        return cgnet_step_constants(b.z_inf, b.xi, config.p_max, config.mu_bound, y_max, model)
    return drcgnet_step_constants(
        config.n, b.z_inf, b.xi, config.p_max, config.delta, config.weight_bounds, y_max, model
    )


def aggregate_step(rc, J):
    """Compose J identical scale updates.

    ``r_hat1 = r1^J``; ``r_hat2`` is evaluated as the explicit geometric sum
    ``r2 * sum_j r1^(J-j)`` (finite at r1 = 1 where the quotient form is
    singular); ``r_hat3[j-1, d-1] = r3[d] * r1^(J-j)``.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    powers = rc.r1 ** np.arange(J - 1, -1, -1, dtype=np.float64)  # r1^(J-j), j=1..J
    r_hat3 = powers[:, None] * np.asarray(rc.r3, dtype=np.float64)[None, :]
    return AggregateStep(
        r_hat1=float(rc.r1**J),
        r_hat2=float(rc.r2 * powers.sum()),
        r_hat3=r_hat3,
    )


def tikhonov_constants(y_norm2, z_inf, p_max, p_min, model):
    """Worst-case sensitivity of the regularized least-squares estimate.

    ``c1`` multiplies scale movement, ``c2`` covariance movement, maximized
    over all SPD matrices with spectrum in [p_min, p_max].
    """
    if p_min > p_max:
        raise ValueError("require p_min <= p_max")
    a2 = model.norm2
    c1 = p_max * y_norm2 * a2 * (1.0 + 2.0 * z_inf**2 * p_max * a2**2)
    c2 = z_inf * y_norm2 * a2 * (p_max / p_min) ** 2
    return c1, c2


def tikhonov_constants_exact(y_norm2, z_inf, P, P_tilde, model):
    """Instance-exact version of :func:`tikhonov_constants` for a given pair."""
    a2 = model.norm2
    c1 = P.p_max * a2 * y_norm2 * (1.0 + 2.0 * z_inf**2 * P_tilde.p_max * a2**2)
    c2 = z_inf * a2 * y_norm2 * P.cond * P_tilde.cond
    return c1, c2


def datafit_grad_constants(z_inf, p_max, y_norm2, model):
    """Joint Lipschitz coefficients of the data-fidelity gradient.

    Returns ``(Lz, Lu)`` multiplying scale and Gaussian-estimate movement,
    valid when the Gaussian estimates are regularized least-squares images
    of admissible scales.
    """
    a2, ainf = model.norm2, model.norm_inf
    Lz = (z_inf * p_max * y_norm2 * a2 * ainf) ** 2
    Lu = y_norm2 * a2 * (1.0 + z_inf**2 * p_max * a2 * (a2 + ainf))
    return Lz, Lu


def fc_lipschitz(weight_norms, tau, x_norm):
    """Input and per-weight Lipschitz coefficients of a dense ReLU chain.

    For T layers with spectral-norm caps ``weight_norms`` and a
    ``tau``-Lipschitz activation: the input coefficient is
    ``tau^(T-1) * prod(weight_norms)`` and weight t's coefficient is
    ``tau^(T-t) * prod(other norms) * x_norm``.
    """
    w = [float(v) for v in weight_norms]
    T = len(w)
    if T < 1:
        raise ValueError("need at least one layer")
    input_coeff = tau ** (T - 1) * float(np.prod(w))
    weight_coeffs = []
    for t in range(1, T + 1):
        others = float(np.prod([w[i] for i in range(T) if i != t - 1]))
        weight_coeffs.append(tau ** (T - t) * others * x_norm)
    return input_coeff, weight_coeffs


def _assemble(config, c1, c2, rc, kappa_prefactor):
    """Log-domain assembly of the layer-chained constants."""
    K, J, D = config.K, config.J, config.D
    log_r1 = _safe_log(rc.r1)
    log_r2 = _safe_log(rc.r2)
    log_c1 = _safe_log(c1)
    log_c2 = _safe_log(c2)
    exps = np.arange(J - 1, -1, -1, dtype=np.float64)  # J - j for j = 1..J
    log_rhat1 = J * log_r1
    log_rhat2 = log_r2 + _logsumexp(exps * log_r1)
    log_r3 = np.array([_safe_log(r) for r in rc.r3])
    log_rhat3 = exps[:, None] * log_r1 + log_r3[None, :]  # (J, D)

    # per-layer growth factor r_hat1 + r_hat2 * c1, chained over layers above k
    log_q = np.logaddexp(log_rhat1, log_rhat2 + log_c1)
    tail = np.arange(K - 1, -1, -1, dtype=np.float64)  # K - k for k = 1..K
    log_chat1 = log_c2 + log_rhat2 + _logsumexp(tail * log_q)
    log_chat2 = tail[:, None, None] * log_q + log_rhat3[None, :, :]  # (K, J, D)

    log_pref = _safe_log(kappa_prefactor)
    log_kappa = np.logaddexp(log_pref + log_chat1, _safe_log(config.bounds.z_inf * c2))
    log_kappa_kdj = log_pref + log_chat2

    with np.errstate(over="ignore"):
        agg = AggregateConstants(
            c1=c1,
            c2=c2,
            r_hat1=float(np.exp(log_rhat1)),
            r_hat2=float(np.exp(log_rhat2)),
            r_hat3=np.exp(log_rhat3),
            c_hat1=float(np.exp(log_chat1)),
            c_hat2=np.exp(log_chat2),
            kappa=float(np.exp(log_kappa)),
            kappa_kdj=np.exp(log_kappa_kdj),
            log_kappa=float(log_kappa),
            log_kappa_kdj=log_kappa_kdj,
        )
    return agg


def network_constants(config, model, y_max):
    """Worst-case end-to-end sensitivity constants of the network.

    Maximizes over the admissible parameter balls and the radius-``y_max``
    measurement ball, matching the constants that enter the generalization
    bound.
    """
    b = config.bounds
    c1, c2 = tikhonov_constants(y_max, b.z_inf, config.p_max, config.p_min, model)
    rc = step_constants(config, model, y_max)
    pref = b.z_inf * (c1 + config.p_max * y_max * model.norm_inf)
    return _assemble(config, c1, c2, rc, pref)


def network_constants_exact(config, model, y, P, P_tilde):
    """Instance-exact sensitivity constants for one measurement and pair.

    The regularized-solve coefficients use the actual spectra and condition
    numbers of ``(P, P_tilde)`` and the actual measurement norms; the
    per-step constants still range over the parameter balls.
    """
    y = np.asarray(y, dtype=np.float64)
    y2 = float(np.linalg.norm(y))
    y_inf = float(np.abs(y).max()) if y.size else 0.0
    b = config.bounds
    c1, c2 = tikhonov_constants_exact(y2, b.z_inf, P, P_tilde, model)
    rc = step_constants(config, model, y2)
    pref = b.z_inf * (c1 + P.p_max * model.norm_inf * y_inf)
    return _assemble(config, c1, c2, rc, pref)
