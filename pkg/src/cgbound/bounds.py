"""Generalization-error bound assembly and its scaling-law evaluators.

Puts together the three-term high-probability bound on the gap between
population and training loss of the unrolled networks: the (supplied)
empirical loss, a complexity term built from covering numbers of the
parameter balls through a closed-form entropy-integral bound, and a
confidence term. Also provides the closed-form integral bound itself with
an independent quadrature oracle, training-measurement radius estimates,
sample-complexity inversion, and log-log slope fits of the bound against
signal dimension, network size, and sample count.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .lipschitz import network_constants
from .model import MeasurementModel

__all__ = [
    "LossSpec",
    "BoundReport",
    "ScalingFit",
    "SweepSpec",
    "dim_cov",
    "covering_log_bound",
    "dudley_closed_form",
    "dudley_integral_quad",
    "ymax_estimate",
    "geb_bound",
    "sweep_bound",
    "scaling_fit",
    "sample_complexity",
    "cor1_comparator",
    "cor2_comparator",
    "norm_log_sum",
]

# high-probability white-noise inflation of the measurement radius
# (normal quantile at per-entry failure probability 1e-9)
WHITE_NOISE_QUANTILE = 6.11

NS_CEILING = 2**62


@dataclass(frozen=True)
class LossSpec:
    """Loss-function constants: Lipschitz coefficient tau and range bound c."""

    tau: float
    c: float
    name: str

    def __post_init__(self):
        if self.tau <= 0 or self.c <= 0:
            raise ValueError("tau and c must be positive")

    @classmethod
    def mae(cls, n, c_max):
        """Mean absolute error on the radius-c_max ball."""
        return cls(tau=1.0 / math.sqrt(n), c=c_max / math.sqrt(n), name="mae")

    @classmethod
    def ssim(cls, tau=None):
        """Structural-similarity loss; its Lipschitz constant must be supplied."""
        if tau is None:
            raise ValueError(
                "the structural-similarity loss needs an explicit tau; "
                "no default is provided"
            )
        return cls(tau=float(tau), c=2.0, name="ssim")


@dataclass(frozen=True)
class BoundReport:
    """Three-term generalization bound with its constants and inputs.

    ``term2_cov``, ``term2_weights``, ``term2_scalars`` split the complexity
    term into the covariance block, the matrix-parameter blocks, and the
    scalar-parameter blocks (they sum to ``term2``).
    """

    term1: float
    term2: float
    term3: float
    total: float
    term2_cov: float
    term2_weights: float
    term2_scalars: float
    constants: object
    inputs: dict = field(repr=False)

    def to_dict(self):
        cns = self.constants
        return {
            "term1": self.term1,
            "term2": self.term2,
            "term3": self.term3,
            "total": self.total,
            "term2_cov": self.term2_cov,
            "term2_weights": self.term2_weights,
            "term2_scalars": self.term2_scalars,
            "constants": {
                "c1": cns.c1,
                "c2": cns.c2,
                "r_hat1": cns.r_hat1,
                "r_hat2": cns.r_hat2,
                "c_hat1": cns.c_hat1,
                "kappa": cns.kappa,
                "log_kappa": cns.log_kappa,
            },
            "inputs": self.inputs,
        }


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares log-log slope of the complexity term along one axis."""

    exponent: float
    r_squared: float
    axis: str
    values: tuple
    fitted: tuple
    r_diagnostic: tuple  # per-point log(y_max) + log(||A||_2) + log(||A||_inf)


@dataclass(frozen=True)
class SweepSpec:
    """One-axis sweep description for the scaling studies.

    axis = "n":  rebuilds the model per point as ``n^norm_power`` times the
    all-ones m x n matrix (operator norms grow polynomially, as the scaling
    laws assume) and resizes the network; axis = "kj": fixed model, K and J
    are factored from each value (square when possible); axis = "ns": only
    the sample count varies.
    """

    axis: str
    values: tuple
    Ns: int = 10000
    eps_conf: float = 0.05
    m: int = 1
    norm_power: float = 3.0

    def __post_init__(self):
        if self.axis not in ("n", "kj", "ns"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if len(self.values) < 4:
            raise ValueError("sweep needs at least 4 points")
        vals = sorted(float(v) for v in self.values)
        if vals[0] <= 0 or vals[-1] / vals[0] < 10.0:
            raise ValueError("sweep must span at least one decade of positive values")


def dim_cov(structure, n):
    """Free-parameter count of each covariance structure."""
    if n < 1:
        raise ValueError("n must be >= 1")
    table = {
        "scaled_identity": 1,
        "diagonal": n,
        "tridiagonal": 2 * n - 1,
        "full": n * (n + 1) // 2,
    }
    try:
        return table[structure]
    except KeyError:
        raise ValueError(f"unknown covariance structure {structure!r}") from None


def covering_log_bound(omega, alpha, eps):
    """Log covering number bound of a radius-omega ball of dimension alpha.

    A radius-omega ball in any norm on R^alpha is covered by at most
    ``(1 + 2*omega/eps)^alpha`` balls of radius eps.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if alpha < 0 or omega <= 0:
        raise ValueError("alpha must be nonnegative and omega positive")
    return alpha * math.log1p(2.0 * omega / eps)


def dudley_closed_form(beta, nu):
    """Closed-form upper bound ``beta * sqrt(ln(e*(1 + nu/beta)))``.

    Dominates ``integral_0^beta sqrt(ln(1 + nu/eps)) d eps`` for every
    nu >= 0, beta > 0.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    return beta * math.sqrt(1.0 + math.log1p(nu / beta))


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    flm = f(0.5 * (a + m))
    frm = f(0.5 * (m + b))
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _adaptive_simpson(
        f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1
    ) + _adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)


def dudley_integral_quad(beta, nu, tol=1e-8):
    """Adaptive-Simpson value of ``integral_0^beta sqrt(ln(1 + nu/eps)) d eps``.

    The integrand has an integrable singularity at 0; the substitution
    ``eps = beta * u^2`` removes it before quadrature. Serves as the
    independent oracle for :func:`dudley_closed_form`.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    if nu == 0:
        return 0.0

    def h(u):
        if u == 0.0:
            return 0.0
        return 2.0 * beta * u * math.sqrt(math.log1p(nu / (beta * u * u)))

    fa, fm, fb = h(0.0), h(0.5), h(1.0)
    whole = (fa + 4.0 * fm + fb) / 6.0
    return _adaptive_simpson(h, 0.0, 1.0, fa, fm, fb, whole, tol, 50)


def ymax_estimate(model, c_max, mode, dataset=None):
    """Radius of the training measurements.

    ``"noiseless"`` uses ``c_max * ||A||_2``; ``"white_noise"`` adds the
    high-probability noise inflation ``6.11 * sigma``; ``"dataset"`` takes
    the largest Euclidean norm over the provided measurements.
    """
    if mode == "noiseless":
        return c_max * model.norm2
    if mode == "white_noise":
        return c_max * model.norm2 + WHITE_NOISE_QUANTILE * model.sigma
    if mode == "dataset":
        if dataset is None or len(dataset) == 0:
            raise ValueError("dataset mode requires a nonempty dataset")
        return float(max(np.linalg.norm(np.asarray(y, dtype=np.float64)) for y in dataset))
    raise ValueError(f"unknown mode {mode!r}")


def norm_log_sum(model, y_max):
    """Diagnostic ``log(y_max) + log(||A||_2) + log(||A||_inf)``."""
    return math.log(y_max) + math.log(model.norm2) + math.log(model.norm_inf)


def _log_factor(log_coeff, log_kappa):
    # ln(e * (1 + coeff * kappa)) evaluated from logs, stable for huge kappa
    return 1.0 + np.logaddexp(0.0, log_coeff + log_kappa)


def geb_bound(config, model, loss, Ns, eps_conf, y_max, empirical_loss=0.0):
    """Assemble the three-term generalization bound.

    term1 is the supplied empirical loss; term2 the complexity block
    ``8 * tau * c_max / sqrt(Ns)`` times the covering-entropy sum over the
    covariance ball and every per-step parameter ball; term3 the confidence
    block ``4 * c * sqrt(2 * ln(4 / eps_conf) / Ns)``.
    """
    if Ns < 1:
        raise ValueError("Ns must be >= 1")
    if not (0.0 < eps_conf < 1.0):
        raise ValueError("eps_conf must lie in (0, 1)")
    if y_max < 0:
        raise ValueError("y_max must be nonnegative")
    if config.n != model.n:
        raise ValueError("config.n and model.n disagree")

    cns = network_constants(config, model, y_max)
    c_max = config.bounds.c_max
    kjd1 = config.K * config.J * config.D + 1
    dim_p = dim_cov(config.cov_structure, config.n)

    cov_factor = _log_factor(math.log(4.0 * config.p_max * kjd1 / c_max), cns.log_kappa)
    term2_cov = math.sqrt(dim_p * cov_factor)

    dims = config.parameter_dims()
    alphas = np.array([a for a, _ in dims], dtype=np.float64)
    omegas = np.array([w for _, w in dims], dtype=np.float64)
    log_coeffs = np.log(4.0 * omegas * kjd1 / c_max)
    factors = _log_factor(log_coeffs[None, None, :], cns.log_kappa_kdj)  # (K, J, D)
    block_sums = np.sqrt(alphas[None, None, :] * factors).sum(axis=(0, 1))  # per d

    is_matrix = alphas > 1.5  # scalar blocks have dimension 1
    term2_weights = float(block_sums[is_matrix].sum())
    term2_scalars = float(block_sums[~is_matrix].sum())

    scale = 8.0 * loss.tau * c_max / math.sqrt(Ns)
    term2 = scale * (term2_cov + term2_weights + term2_scalars)
    term3 = 4.0 * loss.c * math.sqrt(2.0 * math.log(4.0 / eps_conf) / Ns)

    return BoundReport(
        term1=float(empirical_loss),
        term2=float(term2),
        term3=float(term3),
        total=float(empirical_loss + term2 + term3),
        term2_cov=float(scale * term2_cov),
        term2_weights=float(scale * term2_weights),
        term2_scalars=float(scale * term2_scalars),
        constants=cns,
        inputs={
            "Ns": int(Ns),
            "eps_conf": float(eps_conf),
            "y_max": float(y_max),
            "dim_P": int(dim_p),
            "alphas": [float(a) for a in alphas],
            "omegas": [float(w) for w in omegas],
            "tau": float(loss.tau),
            "c": float(loss.c),
            "KJD_plus_1": int(kjd1),
        },
    )


# ---------------------------------------------------------------------------
# sweeps and scaling-law fits
# ---------------------------------------------------------------------------

def _sweep_model(spec, n):
    A = (float(n) ** spec.norm_power) * np.ones((spec.m, n))
    return MeasurementModel(A)


def _factor_kj(v):
    r = int(round(math.sqrt(v)))
    if r * r == v:
        return r, r
    return int(v), 1


def _resize_config(config, n=None, K=None, J=None):
    from dataclasses import replace

    kwargs = {}
    if n is not None:
        kwargs["n"] = int(n)
    if K is not None:
        kwargs["K"] = int(K)
    if J is not None:
        kwargs["J"] = int(J)
    return replace(config, **kwargs)


def sweep_bound(config, model, loss, spec):
    """Evaluate the bound along one axis; rows of (axis, report, r)."""
    rows = []
    for v in spec.values:
        if spec.axis == "n":
            n = int(v)
            cfg = _resize_config(config, n=n)
            mdl = _sweep_model(spec, n)
            lss = LossSpec.mae(n, cfg.bounds.c_max) if loss.name == "mae" else loss
            y_max = ymax_estimate(mdl, cfg.bounds.c_max, "noiseless")
            rep = geb_bound(cfg, mdl, lss, spec.Ns, spec.eps_conf, y_max)
            rows.append((float(v), rep, norm_log_sum(mdl, y_max)))
        elif spec.axis == "kj":
            K, J = _factor_kj(int(v))
            cfg = _resize_config(config, K=K, J=J)
            y_max = ymax_estimate(model, cfg.bounds.c_max, "noiseless")
            rep = geb_bound(cfg, model, loss, spec.Ns, spec.eps_conf, y_max)
            rows.append((float(v), rep, norm_log_sum(model, y_max)))
        else:  # ns
            y_max = ymax_estimate(model, config.bounds.c_max, "noiseless")
            rep = geb_bound(config, model, loss, int(v), spec.eps_conf, y_max)
            rows.append((float(v), rep, norm_log_sum(model, y_max)))
    return rows


def _least_squares_loglog(xs, ys):
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_res = float(((ly - fitted) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def scaling_fit(config, model, loss, spec):
    """Log-log slope of the complexity term along the sweep axis.

    Along ``n`` the fit uses the matrix-parameter block of the complexity
    term (the part whose dimension count grows with n; the covariance and
    scalar blocks are lower order) divided by ``sqrt(ln n)``. Along ``kj``
    every block grows alike, so the fit uses the full term divided by the
    constant ``sqrt(ln m + ln n)``. Along ``ns`` the raw term is fitted.
    """
    rows = sweep_bound(config, model, loss, spec)
    xs = [v for v, _, _ in rows]
    if spec.axis == "n":
        ys = [rep.term2_weights / math.sqrt(math.log(v)) for v, rep, _ in rows]
    elif spec.axis == "kj":
        log_mn = math.log(model.m) + math.log(config.n)
        corr = math.sqrt(log_mn) if log_mn > 0 else 1.0
        ys = [rep.term2 / corr for _, rep, _ in rows]
    else:
        ys = [rep.term2 for _, rep, _ in rows]
    exponent, r2 = _least_squares_loglog(xs, ys)
    return ScalingFit(
        exponent=exponent,
        r_squared=r2,
        axis=spec.axis,
        values=tuple(xs),
        fitted=tuple(float(y) for y in ys),
        r_diagnostic=tuple(float(r) for _, _, r in rows),
    )


def cor1_comparator(n, m, network_size, Ns):
    """Dominant scaling expression of the quadratic-update network's bound."""
    return n * math.sqrt(network_size**3 * (math.log(m) + math.log(n)) / Ns)


def cor2_comparator(n, m, network_size, Ns):
    """Dominant scaling expression of the learned-regularizer network's bound."""
    return math.sqrt(network_size**3 * (math.log(m) + math.log(n)) / Ns)


def sample_complexity(config, model, loss, gap, eps_conf, y_max):
    """Smallest sample count whose complexity-plus-confidence block is <= gap.

    The block decays like 1/sqrt(Ns), so a binary search over
    [1, 2^62] is monotone correct.
    """
    if gap <= 0:
        raise ValueError("gap must be positive")

    def block(ns):
        rep = geb_bound(config, model, loss, ns, eps_conf, y_max)
        return rep.term2 + rep.term3

    if block(1) <= gap:
        return 1
    lo, hi = 1, NS_CEILING  # invariant: block(lo) > gap >= block(hi)
    if block(hi) > gap:
        raise ValueError("gap unattainable below the sample-count ceiling")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if block(mid) <= gap:
            hi = mid
        else:
            lo = mid
    return hi
