"""Probit and Poisson maximum likelihood with dummy fixed effects and
firm-clustered sandwich standard errors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.linalg import qr
from scipy.special import gammaln, log_ndtr

from .errors import RankDeficiencyError, SeparationError, SpecificationError

FAMILIES = ("probit", "poisson")


@dataclass(frozen=True)
class RegressionSpec:
    dependent: str
    regressors: tuple
    fixed_effects: tuple = ("year",)
    cluster: str = "firm"
    family: str = "probit"
    # equality filters applied before estimation, e.g. {"export_lag": 0}
    sample: tuple = ()
    drop: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        object.__setattr__(self, "fixed_effects", tuple(self.fixed_effects))
        object.__setattr__(self, "drop", tuple(self.drop))
        sample = self.sample.items() if isinstance(self.sample, dict) else self.sample
        object.__setattr__(self, "sample", tuple((str(k), v) for k, v in sample))
        if self.family not in FAMILIES:
            raise SpecificationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.dependent in self.regressors:
            raise SpecificationError(f"dependent variable {self.dependent!r} also listed as a regressor")
        if len(set(self.regressors)) != len(self.regressors):
            raise SpecificationError("duplicate regressor names")

    def columns(self):
        return [self.dependent, *self.regressors, *self.fixed_effects, self.cluster, *(k for k, _ in self.sample)]


@dataclass
class Design:
    X: np.ndarray
    y: np.ndarray
    cluster: np.ndarray
    names: list
    n_dropped: int = 0


@dataclass
class FitResult:
    names: list
    params: np.ndarray
    vcov: np.ndarray
    log_likelihood: float
    n_obs: int
    converged: bool
    iterations: int
    grad_norm: float
    family: str = ""
    n_clusters: int = 0
    ll_path: list = field(default_factory=list)

    @property
    def coefficients(self):
        return dict(zip(self.names, self.params))

    @property
    def clustered_se(self):
        return dict(zip(self.names, np.sqrt(np.clip(np.diag(self.vcov), 0.0, None))))

    @property
    def z_stats(self):
        se = np.sqrt(np.clip(np.diag(self.vcov), 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            return dict(zip(self.names, self.params / se))

    def table(self) -> pd.DataFrame:
        se = self.clustered_se
        z = self.z_stats
        return pd.DataFrame({
            "term": self.names,
            "estimate": self.params,
            "clustered_se": [se[n] for n in self.names],
            "z": [z[n] for n in self.names],
        })


def build_design(panel: pd.DataFrame, spec: RegressionSpec) -> Design:
    """Dense design matrix: intercept, regressors, then one dummy per non-reference FE level."""
    missing = [c for c in dict.fromkeys(spec.columns()) if c not in panel.columns]
    if missing:
        raise SpecificationError(f"missing column(s): {', '.join(missing)}")
    unknown = [d for d in spec.drop if d not in spec.regressors and not any(d.startswith(f + "[") for f in spec.fixed_effects)]
    if unknown:
        raise SpecificationError(f"drop list names unknown column(s): {', '.join(unknown)}")

    df = panel
    for col, val in spec.sample:
        df = df[df[col] == val]
    used = [spec.dependent, *spec.regressors, spec.cluster]
    keep = df[used].notna().all(axis=1) & df[list(spec.fixed_effects)].notna().all(axis=1)
    n_dropped = int((~keep).sum())
    df = df[keep]
    if len(df) == 0:
        raise SpecificationError("no rows left after sample filters and missing-value removal")

    names = ["const"]
    cols = [np.ones(len(df))]
    for r in spec.regressors:
        if r in spec.drop:
            continue
        x = df[r].to_numpy(dtype=float)
        if np.all(x == x[0]):
            raise SpecificationError(f"regressor {r!r} is constant and collinear with the intercept")
        names.append(r)
        cols.append(x)
    for fe in spec.fixed_effects:
        vals = df[fe].to_numpy()
        levels = np.unique(vals)
        for lev in levels[1:]:
            name = f"{fe}[{lev}]"
            if name in spec.drop:
                continue
            names.append(name)
            cols.append((vals == lev).astype(float))
    X = np.column_stack(cols)
    _check_rank(X, names)
    y = df[spec.dependent].to_numpy(dtype=float)
    _, cluster = np.unique(df[spec.cluster].to_numpy(), return_inverse=True)
    return Design(X, y, cluster, names, n_dropped)


def _check_rank(X, names):
    scale = np.sqrt((X * X).sum(axis=0))
    _, r, piv = qr(X / scale, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(X.shape) * np.finfo(float).eps * 1e3
    rank = int((diag > tol).sum())
    if rank < X.shape[1]:
        bad = sorted(names[i] for i in piv[rank:])
        raise SpecificationError(f"design is rank deficient; collinear column(s): {', '.join(bad)}")


def detect_separation(X, y, names, family="probit"):
    """Raise :class:`SeparationError` if a single column makes the likelihood unbounded."""
    if family == "probit":
        if np.all(y == y[0]):
            raise SeparationError("response is constant", column="const")
        for j, name in enumerate(names):
            x = X[:, j]
            if name == "const" or np.all(x == x[0]):
                continue
            if np.isin(x, (0.0, 1.0)).all():
                on = x == 1.0
                for part in (on, ~on):
                    yy = y[part]
                    if np.all(yy == yy[0]):
                        raise SeparationError(f"column {name!r} perfectly predicts the response in a subgroup", column=name)
            else:
                x0, x1 = x[y == 0], x[y == 1]
                if x0.max() < x1.min() or x1.max() < x0.min():
                    raise SeparationError(f"column {name!r} separates the response completely", column=name)
    else:
        if np.all(y == 0):
            raise SeparationError("response is identically zero", column="const")
        for j, name in enumerate(names):
            x = X[:, j]
            if name == "const" or not np.isin(x, (0.0, 1.0)).all():
                continue
            for level in (1.0, 0.0):
                part = x == level
                if part.any() and np.all(y[part] == 0):
                    raise SeparationError(f"response is zero wherever column {name!r} equals {level:g}", column=name)


# -- likelihoods -------------------------------------------------------------

def _probit_parts(beta, X, y):
    z = X @ beta
    q = 2.0 * y - 1.0
    qz = q * z
    logcdf = log_ndtr(qz)
    lam = np.exp(-0.5 * qz * qz - 0.5 * np.log(2 * np.pi) - logcdf)
    ll = logcdf.sum()
    s = (q * lam)[:, None] * X
    w = lam * (lam + qz)
    return ll, s, w


def _poisson_parts(beta, X, y, offset=0.0):
    eta = X @ beta + offset
    mu = np.exp(eta)
    ll = np.sum(y * eta - mu) - _log_factorial_sum(y)
    s = (y - mu)[:, None] * X
    return ll, s, mu


def _log_factorial_sum(y):
    return gammaln(y + 1.0).sum()


def _loglik(family, beta, X, y):
    if family == "probit":
        return float(log_ndtr((2.0 * y - 1.0) * (X @ beta)).sum())
    eta = X @ beta
    return float(np.sum(y * eta - np.exp(eta)) - _log_factorial_sum(y))


def _newton(family, X, y, tol, max_iter, start=None):
    k = X.shape[1]
    beta = np.zeros(k) if start is None else np.asarray(start, dtype=float).copy()
    if family == "poisson" and start is None:
        beta[0] = np.log(y.mean())
    parts = _probit_parts if family == "probit" else _poisson_parts
    ll, s, w = parts(beta, X, y)
    path = [ll]
    converged = False
    it = 0
    while True:
        g = s.sum(axis=0)
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        info = (X * w[:, None]).T @ X
        try:
            step = np.linalg.solve(info, g)
        except np.linalg.LinAlgError as exc:
            raise RankDeficiencyError("information matrix is singular") from exc
        # near the optimum the change in ll drops below summation rounding;
        # a step inside that band is taken only if it shrinks the gradient
        noise = 64 * np.finfo(float).eps * (abs(ll) + X.shape[0])
        t = 1.0
        for _ in range(60):
            cand = beta + t * step
            ll_new = _loglik(family, cand, X, y)
            if np.isfinite(ll_new):
                if ll_new > ll:
                    parts_new = parts(cand, X, y)
                    break
                if ll_new >= ll - noise:
                    parts_new = parts(cand, X, y)
                    if np.max(np.abs(parts_new[1].sum(axis=0))) < gnorm:
                        break
            t *= 0.5
        else:
            break  # no ascent possible at machine precision
        it += 1
        assert ll_new >= ll - noise, "log-likelihood decreased"
        beta = cand
        ll, s, w = parts_new
        path.append(ll)
    H = -(X * w[:, None]).T @ X
    return beta, ll, s, H, converged, it, gnorm, path


def _fit(family, X, y, cluster, names, tol, max_iter, small_sample, check_separation, start):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    if family == "probit" and not np.isin(y, (0.0, 1.0)).all():
        raise SpecificationError("probit response must be 0/1")
    if family == "poisson" and (np.any(y < 0) or np.any(y != np.floor(y))):
        raise SpecificationError("poisson response must be a non-negative integer")
    if check_separation:
        detect_separation(X, y, names, family)
    beta, ll, s, H, conv, it, gnorm, path = _newton(family, X, y, tol, max_iter, start)
    cluster = np.arange(len(y)) if cluster is None else np.asarray(cluster)
    V = clustered_vcov(s, H, cluster, small_sample=small_sample)
    return FitResult(names, beta, V, ll, len(y), conv, it, gnorm, family, len(np.unique(cluster)), path)


def fit_probit(X, y, cluster=None, names=None, tol=1e-8, max_iter=100, small_sample=False,
               check_separation=True, start=None) -> FitResult:
    return _fit("probit", X, y, cluster, names, tol, max_iter, small_sample, check_separation, start)


def fit_poisson(X, y, cluster=None, names=None, tol=1e-8, max_iter=100, small_sample=False,
                check_separation=True, start=None) -> FitResult:
    return _fit("poisson", X, y, cluster, names, tol, max_iter, small_sample, check_separation, start)


def clustered_vcov(scores, hessian, cluster, small_sample=False):
    """H^-1 (sum_g s_g s_g') H^-1 with s_g the within-cluster score sums.

    ``small_sample`` applies the G/(G-1) * (n-1)/(n-k) factor.
    """
    scores = np.asarray(scores, dtype=float)
    H = np.asarray(hessian, dtype=float)
    n, k = scores.shape
    if np.linalg.cond(H) > 1e14 or not np.all(np.isfinite(H)):
        raise RankDeficiencyError("hessian is singular or ill-conditioned")
    Hinv = np.linalg.inv(H)
    _, codes = np.unique(np.asarray(cluster), return_inverse=True)
    G = codes.max() + 1
    sg = np.zeros((G, k))
    np.add.at(sg, codes, scores)
    meat = sg.T @ sg
    V = Hinv @ meat @ Hinv
    V = 0.5 * (V + V.T)
    if small_sample:
        if G < 2 or n <= k:
            raise RankDeficiencyError("small-sample correction needs G >= 2 and n > k")
        V *= G / (G - 1) * (n - 1) / (n - k)
    return V


def fit(panel: pd.DataFrame, spec: RegressionSpec, **kw) -> FitResult:
    d = build_design(panel, spec)
    fn = fit_probit if spec.family == "probit" else fit_poisson
    return fn(d.X, d.y, d.cluster, d.names, **kw)


# -- presets -----------------------------------------------------------------
# Table presets.  Probit columns estimate on the
# at-risk sample (not exporting to the country last period): with no market
# exit the lagged export flag would otherwise predict the outcome perfectly.
# gamma is constant within an industry, so the industry effect is taken at the
# coarser sector level.

NETWORK = ("N_sk", "ind_dist", "dens_dist")
INTERACT = ("gamma", "gamma_N", "gamma_dens")
FIRM = ("markets", "firm_dist")
CONTROLS = ("scale", "gdp", "d_home", "d_world", "imports_home", "imports_world")
COUNTRY_FREE = ("scale", "imports_home", "imports_world")
RISK = (("export_lag", 0),)
FE = ("year", "sector")


def _probit(regs, fe=FE):
    return RegressionSpec("export", regs, fe, "firm", "probit", RISK)


def _poisson(regs, fe=FE):
    return RegressionSpec("N_sk_now", regs, fe, "firm", "poisson")


PRESETS = {
    "table3-col1": _probit(NETWORK + FIRM),
    "table3-col2": _probit(NETWORK + INTERACT[1:] + FIRM + ("gamma",)),
    "table3-col3": _probit(NETWORK + INTERACT[1:] + FIRM + ("gamma",) + CONTROLS),
    "table3-col4": _probit(FIRM + ("gamma",) + CONTROLS),
    "table3-col5": _probit(CONTROLS),
    "table4-col1": _poisson(("gamma",)),
    "table4-col2": _poisson(("gamma", "N_sk", "firm_dist") + CONTROLS[1:]),
    "table4-col3": _poisson(("gamma",) + NETWORK + FIRM + CONTROLS),
    "table5-col1": _probit(NETWORK + INTERACT[1:] + FIRM + ("gamma",) + COUNTRY_FREE, FE + ("country",)),
    "table5-col2": _poisson(NETWORK + FIRM + ("gamma",) + COUNTRY_FREE, FE + ("country",)),
    "table5-col3": _probit(NETWORK + INTERACT[1:] + FIRM + ("gamma",) + COUNTRY_FREE, FE + ("region",)),
    "table5-col4": _poisson(NETWORK + FIRM + ("gamma",) + COUNTRY_FREE, FE + ("region",)),
}

# Expected signs used by the sign-reproduction check.
SIGNS = {
    "table3-col3": {"N_sk": 1, "ind_dist": -1, "dens_dist": 1, "gamma_N": -1, "gamma_dens": 1},
    "table4-col3": {"gamma": 1},
}


def preset(name: str) -> RegressionSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise SpecificationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def sign_match(result: FitResult, expected: dict) -> dict:
    coef = result.coefficients
    return {k: bool(np.sign(coef[k]) == s) for k, s in expected.items()}
