"""Zero-inflated, censored negative-binomial scoring model.

Runs per innings are negative binomial with player-specific dispersion;
the log mean is a sum of player ability, year, ageing and game-context
effects.  A not-out innings contributes a survival (tail) factor, and a
completed duck a two-component mixture of the count model's zero mass and
an early-innings frailty term.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, gammaln, logsumexp

from .data import AWAY, Dataset, InningsRecord


@dataclass(frozen=True)
class PriorConfig:
    """Every prior constant in one place.

    Defaults encode: median runs around 20 with mild uncertainty; ability
    spread roughly four-fold; smooth year effects with variance mean 0.01;
    game effects within a ~2.7-fold band; peak age near 30 with gentle
    curvature; dispersion with unit prior median; duck inflation mean 0.1.
    """

    m_mu: float = float(np.log(20.0))
    s_mu: float = 0.25
    a_sigma: float = 3.0
    b_sigma: float = 1.0
    a_delta: float = 2.0
    b_delta: float = 0.01
    game_effect_sd: float = 0.5
    alpha1_mean: float = 30.0
    alpha1_var: float = 4.0
    alpha2_logmean: float = -3.0
    alpha2_logvar: float = 9.0
    eta_logmean: float = 0.0
    eta_logvar: float = 1.0
    a_pi: float = 1.0
    b_pi: float = 9.0

    def __post_init__(self):
        for name in ("s_mu", "a_sigma", "b_sigma", "a_delta", "b_delta",
                     "game_effect_sd", "alpha1_var", "alpha2_logvar",
                     "eta_logvar", "a_pi", "b_pi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ParamState:
    """One point in parameter space.

    Identifiability pins are structural: the final-year effect, the home
    effect, the first-innings effect, the reference-opposition effect and
    the pinned interaction row/column are not stored and contribute exact
    zeros to the log rate.
    """

    theta: np.ndarray        # (P,) log peak ability
    delta: np.ndarray        # (Y-1,) year effects, final year pinned
    sigma2_delta: float
    alpha1: np.ndarray       # (P,) peak age
    alpha2: np.ndarray       # (P,) ageing curvature, positive
    zeta2: float             # away effect
    nu: np.ndarray           # (3,) innings 2-4 effects
    xi: np.ndarray           # (O-1,) opposition effects
    omega: np.ndarray        # (O-1, D-1) opposition x decade interactions
    eta: np.ndarray          # (P,) dispersion, positive
    pi: np.ndarray           # (P,) zero inflation, in (0, 1)
    mu_theta: float
    sigma2_theta: float

    def __post_init__(self):
        if np.any(self.alpha2 <= 0) or np.any(self.eta <= 0):
            raise ValueError("alpha2 and eta must be strictly positive")
        if np.any(self.pi <= 0) or np.any(self.pi >= 1):
            raise ValueError("pi must lie strictly inside (0, 1)")
        if self.sigma2_delta <= 0 or self.sigma2_theta <= 0:
            raise ValueError("variances must be strictly positive")
        if self.nu.shape != (3,):
            raise ValueError("nu must cover innings 2-4")
        if self.omega.shape[0] != self.xi.shape[0]:
            raise ValueError("omega rows must match xi length")

    @property
    def n_players(self) -> int:
        return self.theta.size

    def copy(self) -> "ParamState":
        return ParamState(
            theta=self.theta.copy(), delta=self.delta.copy(),
            sigma2_delta=self.sigma2_delta, alpha1=self.alpha1.copy(),
            alpha2=self.alpha2.copy(), zeta2=self.zeta2, nu=self.nu.copy(),
            xi=self.xi.copy(), omega=self.omega.copy(), eta=self.eta.copy(),
            pi=self.pi.copy(), mu_theta=self.mu_theta,
            sigma2_theta=self.sigma2_theta,
        )


def delta_full(delta: np.ndarray) -> np.ndarray:
    """Year effects extended with the pinned final year."""
    return np.append(delta, 0.0)


def nu_full(nu: np.ndarray) -> np.ndarray:
    """Innings effects extended with the pinned first innings."""
    return np.concatenate(([0.0], nu))


def xi_full(xi: np.ndarray) -> np.ndarray:
    """Opposition effects extended with the pinned reference country."""
    return np.concatenate(([0.0], xi))


def omega_full(omega: np.ndarray, n_oppositions: int,
               n_decades: int) -> np.ndarray:
    """Interaction grid extended with the pinned row and final-decade column."""
    full = np.zeros((n_oppositions, n_decades))
    if omega.size:
        full[1:, :-1] = omega
    return full


def ageing(alpha1: float, alpha2: float, age) -> float:
    """Quadratic ageing curve, zero at the peak age and negative elsewhere."""
    if np.any(np.asarray(alpha2) <= 0):
        raise ValueError("alpha2 must be positive")
    return -alpha2 * (np.asarray(age, dtype=float) - alpha1) ** 2


def log_rate(state: ParamState, rec: InningsRecord, ds: Dataset) -> float:
    """Log scoring rate of one innings under the additive log-linear model."""
    _, n_years, n_decades, _ = ds.dims
    i = ds.player_index[rec.player_id] - 1
    year = ds.year_index[rec.calendar_year]
    dec = ds.decade_of_year[year]
    out = state.theta[i]
    if year < n_years:
        out += state.delta[year - 1]
    out += ageing(state.alpha1[i], state.alpha2[i], rec.age)
    if rec.home == AWAY:
        out += state.zeta2
    if rec.match_innings > 1:
        out += state.nu[rec.match_innings - 2]
    if rec.opposition > 1:
        out += state.xi[rec.opposition - 2]
        if dec < n_decades:
            out += state.omega[rec.opposition - 2, dec - 1]
    return float(out)


def log_rate_all(state: ParamState, ds: Dataset) -> np.ndarray:
    """Vectorised log_rate over every record."""
    _, _, n_decades, n_oppositions = ds.dims
    a = ds.arrays
    f = -state.alpha2[a.player] * (a.age - state.alpha1[a.player]) ** 2
    return (state.theta[a.player]
            + delta_full(state.delta)[a.year]
            + f
            + state.zeta2 * a.away
            + nu_full(state.nu)[a.innings]
            + xi_full(state.xi)[a.opposition]
            + omega_full(state.omega, n_oppositions, n_decades)[a.opposition,
                                                                a.decade])


def _check_domain(eta, lam):
    if np.any(np.asarray(eta) <= 0):
        raise ValueError("eta must be strictly positive")
    if np.any(np.asarray(lam) <= 0):
        raise ValueError("lambda must be strictly positive")


def nb_log_pmf(x, eta, lam):
    """Log pmf of the gamma-mixed Poisson count model.

    Uses the log-gamma form of the generalised binomial coefficient, so
    non-integer dispersion is exact: lgamma(x+eta) - lgamma(eta)
    - lgamma(x+1) + x log(beta) - (eta+x) log(1+beta) with beta = lam/eta.
    """
    _check_domain(eta, lam)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    eta = np.asarray(eta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    log_ratio = np.log(lam) - np.log(eta)
    log1p_beta = np.logaddexp(0.0, log_ratio)
    out = (gammaln(x + eta) - gammaln(eta) - gammaln(x + 1)
           + x * log_ratio - (eta + x) * log1p_beta)
    return out if out.ndim else float(out)

def _log_sf_by_summation(x: int, eta: float, lam: float) -> float:
    """Tail log-probability by direct pmf summation; underflow fallback."""
    ratio_limit = lam / (lam + eta)
    size = 4096
    while True:
        ks = np.arange(x, x + size, dtype=float)
        terms = nb_log_pmf(ks, eta, lam)
        total = float(logsumexp(terms))
        k_next = x + size
        step = np.log((k_next - 1 + eta) / k_next) + np.log(ratio_limit)
        t_next = terms[-1] + step
        r = max((k_next + eta) / (k_next + 1.0) * ratio_limit, ratio_limit)
        if r < 1.0 and t_next - np.log1p(-r) < total - 36.0:
            return total
        if size >= 1 << 22:
            return total
        size *= 4


def nb_log_sf(x, eta, lam):
    """Log of P(X >= x) for the count model.

    Evaluated through the regularised incomplete beta identity
    P(X >= x) = I_{lam/(eta+lam)}(x, eta) for x >= 1 (and exactly 1 at
    x = 0), falling back to log-space tail summation when the beta
    function underflows.
    """
    _check_domain(eta, lam)
    x_arr = np.atleast_1d(np.asarray(x))
    if np.any(x_arr < 0):
        raise ValueError("x must be non-negative")
    eta_arr, lam_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(eta, dtype=float)),
        np.atleast_1d(np.asarray(lam, dtype=float)))
    x_b = np.broadcast_to(x_arr.astype(float), eta_arr.shape)

    out = np.zeros(x_b.shape)
    pos = x_b >= 1
    if np.any(pos):
        q = lam_arr[pos] / (eta_arr[pos] + lam_arr[pos])
        sf = betainc(x_b[pos], eta_arr[pos], q)
        with np.errstate(divide="ignore"):
            vals = np.log(sf)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            idx = np.where(bad)[0]
            xs, es, ls = x_b[pos][idx], eta_arr[pos][idx], lam_arr[pos][idx]
            vals[idx] = [_log_sf_by_summation(int(xi), ei, li)
                         for xi, ei, li in zip(xs, es, ls)]
        out[pos] = vals
    return out if np.asarray(x).ndim else float(out[0])


def duck_prob(pi, eta, lam):
    """Probability of a completed duck: pi + (1-pi) / (1+beta)^eta."""
    _check_domain(eta, lam)
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0) or np.any(pi >= 1):
        raise ValueError("pi must lie strictly inside (0, 1)")
    eta = np.asarray(eta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    log1p_beta = np.logaddexp(0.0, np.log(lam) - np.log(eta))
    out = pi + (1.0 - pi) * np.exp(-eta * log1p_beta)
    return out if out.ndim else float(out)


def record_log_liks(runs, not_out, duck, log_lam, eta, log_pi, log1m_pi,
                    pmf_const=None) -> np.ndarray:
    """Per-record log-likelihood contributions, all inputs equal-length.

    `pmf_const` is the lambda-free part of the pmf, lgamma(x+eta)
    - lgamma(eta) - lgamma(x+1); callers that sweep lambda repeatedly
    pass it in precomputed.
    """
    runs = np.asarray(runs)
    eta = np.asarray(eta, dtype=float)
    log_lam = np.asarray(log_lam, dtype=float)
    x = runs.astype(float)
    if pmf_const is None:
        pmf_const = gammaln(x + eta) - gammaln(eta) - gammaln(x + 1)
    log1p_beta = np.logaddexp(0.0, log_lam - np.log(eta))

    out = np.empty(x.shape)
    completed = ~not_out
    m = completed & ~duck
    if np.any(m):
        out[m] = (log1m_pi[m] + pmf_const[m]
                  + x[m] * (log_lam[m] - np.log(eta[m]))
                  - (eta[m] + x[m]) * log1p_beta[m])
    m = completed & duck
    if np.any(m):
        out[m] = np.logaddexp(log_pi[m], log1m_pi[m] - eta[m] * log1p_beta[m])
    m = not_out
    if np.any(m):
        with np.errstate(over="ignore"):
            lam_m = np.exp(log_lam[m])
        out[m] = log1m_pi[m] + nb_log_sf(runs[m], eta[m], lam_m)
    return out


def innings_log_lik(state: ParamState, rec: InningsRecord,
                    ds: Dataset) -> float:
    """Log-likelihood contribution of a single innings.

    Completed duck: log of the zero mixture.  Completed non-duck:
    log(1-pi) plus the pmf.  Not out: log(1-pi) plus the tail probability
    of the recorded score (which for a censored zero is just log(1-pi)).
    """
    i = ds.player_index[rec.player_id] - 1
    ll = record_log_liks(
        runs=np.array([rec.runs]),
        not_out=np.array([rec.not_out]),
        duck=np.array([rec.duck]),
        log_lam=np.array([log_rate(state, rec, ds)]),
        eta=np.array([state.eta[i]]),
        log_pi=np.array([np.log(state.pi[i])]),
        log1m_pi=np.array([np.log1p(-state.pi[i])]),
    )
    return float(ll[0])


def total_log_lik(state: ParamState, ds: Dataset) -> float:
    """Sum of per-innings log-likelihood terms over the whole dataset."""
    a = ds.arrays
    if a.n == 0:
        return 0.0
    ll = record_log_liks(
        runs=a.runs,
        not_out=a.not_out,
        duck=a.duck,
        log_lam=log_rate_all(state, ds),
        eta=state.eta[a.player],
        log_pi=np.log(state.pi)[a.player],
        log1m_pi=np.log1p(-state.pi)[a.player],
    )
    return float(np.sum(ll))
