"""L1-penalized logistic regression fit by coordinate descent.

The maximized objective is the summed (not averaged) Bernoulli
log-likelihood minus ``lam * sum(|beta_j|)``, with an unpenalized intercept.
Predictors are standardized on the training data (population variance);
the penalty acts on the standardized coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import expit

from ..errors import DegenerateFold, EmptyTrainingSet, NonConvergence

N_LAMBDA = 100
LAMBDA_MIN_RATIO = 1e-4
# the path stops once the fit explains this share of the null deviance
# (near-separable data); smaller penalties reuse the last fit
MAX_DEVIANCE_RATIO = 0.999
WEIGHT_FLOOR = 1e-5


def soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _loglik(eta: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^eta) computed without overflow
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def penalized_objective(b0: float, beta: np.ndarray, Z: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Negative penalized log-likelihood (the quantity minimized)."""
    return -_loglik(b0 + Z @ beta, y) + lam * float(np.sum(np.abs(beta)))


def _standardize(X: np.ndarray):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    active = sd > 0
    sd = np.where(active, sd, 1.0)
    return (X - mu) / sd, mu, sd, active


@njit(cache=True, nogil=True)
def _cd_sweep(Z, w, r, denom, lam, nbeta, cols, ncols, b0, wsum):
    """One pass over the intercept and ``cols[:ncols]``; returns (b0, largest objective-scale step)."""
    n = Z.shape[0]
    shift = 0.0
    for i in range(n):
        shift += w[i] * r[i]
    shift /= wsum
    b0 += shift
    for i in range(n):
        r[i] -= shift
    worst = wsum * shift * shift
    for k in range(ncols):
        j = cols[k]
        old = nbeta[j]
        rho = denom[j] * old
        for i in range(n):
            rho += w[i] * Z[i, j] * r[i]
        if rho > lam:
            new = (rho - lam) / denom[j]
        elif rho < -lam:
            new = (rho + lam) / denom[j]
        else:
            new = 0.0
        if new != old:
            d = new - old
            for i in range(n):
                r[i] -= Z[i, j] * d
            nbeta[j] = new
            step = denom[j] * d * d
            if step > worst:
                worst = step
    return b0, worst


@njit(cache=True, nogil=True)
def _weighted_cd(Z, Zsq, w, z, lam, b0, beta, active, cd_tol, max_cd):
    """Coordinate descent on 0.5 * sum w (z - b0 - Z beta)^2 + lam * |beta|_1.

    Full sweeps alternate with sweeps over the current nonzero set; the
    solve stops when a full sweep's largest objective-scale step
    ``denom_j * d_j**2`` falls below ``cd_tol``.
    """
    n, p = Z.shape
    nbeta = beta.copy()
    r = z - b0 - Z @ nbeta
    wsum = w.sum()
    denom = np.zeros(p)
    for j in range(p):
        for i in range(n):
            denom[j] += w[i] * Zsq[i, j]
    full = np.zeros(p, dtype=np.int64)
    nfull = 0
    for j in range(p):
        if active[j]:
            full[nfull] = j
            nfull += 1
    support = np.zeros(p, dtype=np.int64)
    sweeps = 0
    while sweeps < max_cd:
        b0, worst = _cd_sweep(Z, w, r, denom, lam, nbeta, full, nfull, b0, wsum)
        sweeps += 1
        if worst < cd_tol:
            break
        nsup = 0
        for k in range(nfull):
            if nbeta[full[k]] != 0.0:
                support[nsup] = full[k]
                nsup += 1
        while sweeps < max_cd:
            b0, worst = _cd_sweep(Z, w, r, denom, lam, nbeta, support, nsup, b0, wsum)
            sweeps += 1
            if worst < cd_tol:
                break
    return b0, nbeta


def _fit_standardized(Z, y, lam, b0, beta, active, tol=1e-8, max_iter=500, cd_tol=1e-12,
                      max_cd=10_000):
    """Proximal Newton: IRLS quadratic model, coordinate descent inside, step halving outside."""
    n, p = Z.shape
    beta = beta.copy()
    obj = penalized_objective(b0, beta, Z, y, lam)
    Zsq = Z * Z
    for it in range(max_iter):
        eta = b0 + Z @ beta
        prob = expit(eta)
        w = np.clip(prob * (1 - prob), WEIGHT_FLOOR, None)
        z = eta + (y - prob) / w
        nb0, nbeta = _weighted_cd(Z, Zsq, w, z, lam, b0, beta, active, cd_tol, max_cd)
        # backtrack if the quadratic step overshoots
        step = 1.0
        cand_b0, cand_beta = nb0, nbeta
        new_obj = penalized_objective(cand_b0, cand_beta, Z, y, lam)
        while new_obj > obj and step > 1e-10:
            step *= 0.5
            cand_b0 = b0 + step * (nb0 - b0)
            cand_beta = beta + step * (nbeta - beta)
            new_obj = penalized_objective(cand_b0, cand_beta, Z, y, lam)
        rel = abs(obj - new_obj) / max(abs(obj), 1e-300)
        if new_obj <= obj:
            b0, beta, obj = cand_b0, cand_beta, new_obj
        # objective-based stop: along nearly collinear predictors the
        # coefficients can keep drifting while the objective is flat
        if rel < tol:
            return b0, beta, obj, it + 1
    raise NonConvergence(f"lasso did not converge in {max_iter} iterations (lambda={lam:g})")


def lambda_max(Z: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which every slope is zero."""
    return float(np.max(np.abs(Z.T @ (y - y.mean())), initial=0.0))


def lambda_grid(Z: np.ndarray, y: np.ndarray, n: int = N_LAMBDA, ratio: float = LAMBDA_MIN_RATIO) -> np.ndarray:
    top = lambda_max(Z, y)
    if top == 0:
        return np.zeros(1)
    return np.geomspace(top, top * ratio, n)


@dataclass(frozen=True)
class LassoModel:
    intercept: float
    coef: np.ndarray                # standardized scale, aligned with predictor order
    lam: float
    mean: np.ndarray
    scale: np.ndarray
    objective: float = math.nan
    cv: dict = field(default_factory=dict, compare=False)

    @property
    def coef_original(self) -> np.ndarray:
        return self.coef / self.scale

    @property
    def intercept_original(self) -> float:
        return float(self.intercept - np.sum(self.coef * self.mean / self.scale))

    def decision_function(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean) / self.scale
        return self.intercept + Z @ self.coef

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) > threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {"intercept": self.intercept, "coef": self.coef.tolist(), "lambda": self.lam,
                "mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LassoModel":
        return cls(d["intercept"], np.array(d["coef"]), d["lambda"], np.array(d["mean"]), np.array(d["scale"]))


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("no training rows")
    return X, y


def lasso_path(X, y, lambdas, tol: float = 1e-8, max_iter: int = 500,
               max_dev_ratio: float = MAX_DEVIANCE_RATIO) -> list[LassoModel]:
    """Fits along ``lambdas`` (in the given order) with warm starts.

    Once a fit reaches ``max_dev_ratio`` of explained deviance the remaining
    penalties return copies of that fit, since the unpenalized optimum does
    not exist on separable data.
    """
    X, y = _check_xy(X, y)
    Z, mu, sd, active = _standardize(X)
    ybar = y.mean()
    if ybar in (0.0, 1.0):
        raise DegenerateFold("training labels contain a single class")
    b0 = math.log(ybar / (1 - ybar))
    beta = np.zeros(X.shape[1])
    null_dev = -2.0 * _loglik(np.full(y.size, b0), y)
    out = []
    saturated = False
    for lam in lambdas:
        if not saturated:
            b0, beta, obj, _ = _fit_standardized(Z, y, float(lam), b0, beta, active, tol=tol, max_iter=max_iter)
            dev = -2.0 * _loglik(b0 + Z @ beta, y)
            saturated = 1.0 - dev / null_dev >= max_dev_ratio
        out.append(LassoModel(b0, beta.copy(), float(lam), mu, sd, obj))
    return out


def fit_lasso_at(X, y, lam: float, **kw) -> LassoModel:
    return lasso_path(X, y, [lam], **kw)[0]


def fit_lasso(X, y, lambdas=None, folds: int = 15, seed: int = 0, tol: float = 1e-8) -> LassoModel:
    """Lasso logit with the penalty chosen by ``folds``-fold cross-validation.

    The CV criterion is the mean squared error between held-out labels and
    predicted probabilities (Brier score); among equal scores the largest
    penalty is kept. The default grid has 100 log-spaced values from the
    data's ``lambda_max`` down to ``1e-4 * lambda_max``.
    """
    X, y = _check_xy(X, y)
    n = X.shape[0]
    if n < folds:
        raise DegenerateFold(f"{n} rows cannot be split into {folds} folds")
    if lambdas is None:
        Z, *_ = _standardize(X)
        lambdas = lambda_grid(Z, y)
    lambdas = np.sort(np.asarray(lambdas, dtype=float))[::-1]
    perm = np.random.default_rng(seed).permutation(n)
    sq_err = np.zeros(lambdas.size)
    for hold in np.array_split(perm, folds):
        train = np.setdiff1d(perm, hold, assume_unique=True)
        path = lasso_path(X[train], y[train], lambdas, tol=tol)
        for i, m in enumerate(path):
            sq_err[i] += float(np.sum((y[hold] - m.predict_proba(X[hold])) ** 2))
    cv_mse = sq_err / n
    best = int(np.argmin(cv_mse))
    # refit on all rows, warm-started down the grid to the chosen penalty
    final = lasso_path(X, y, lambdas[: best + 1], tol=tol)[-1]
    return LassoModel(final.intercept, final.coef, final.lam, final.mean, final.scale, final.objective,
                      {"lambdas": lambdas, "mse": cv_mse, "folds": folds})


class LassoClassifier:
    def __init__(self, folds: int = 15, seed: int = 0, threshold: float = 0.5, lambdas=None):
        self.folds = folds
        self.seed = seed
        self.threshold = threshold
        self.lambdas = lambdas

    def fit(self, X, y, names=None) -> "LassoClassifier":
        self.model_ = fit_lasso(X, y, lambdas=self.lambdas, folds=self.folds, seed=self.seed)
        self.importances_ = np.abs(self.model_.coef)
        return self

    def predict(self, X) -> np.ndarray:
        return self.model_.predict(X, self.threshold)
