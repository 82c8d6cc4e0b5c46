"""RBF-kernel soft-margin SVM trained with SMO, plus leave-one-out evaluation.

The solver works on the standard dual

    minimize  f(a) = 1/2 a'Qa - e'a,   Q_ij = y_i y_j k(x_i, x_j)
    s.t.      0 <= a_i <= C,  y'a = 0

and picks, at every step, the maximal violating pair (first-order working
set selection).  It stops when the violation gap drops below ``tol``, which
is exactly the KKT condition of the dual.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .features import FEATURE_NAMES, feature_subset

logger = logging.getLogger(__name__)

SEMINAR, NORMAL = 1, -1
MODEL_MAGIC = "seminar-svm"
MODEL_VERSION = 1
_TAU = 1e-12


class DegenerateLabels(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


def rbf_kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d = x - y
    return math.exp(-gamma * float(d @ d))


def rbf_matrix(A, B, gamma: float, chunk: int = 2048) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    out = np.empty((A.shape[0], B.shape[0]))
    for s in range(0, A.shape[0], chunk):
        d = A[s:s + chunk, None, :] - B[None, :, :]
        out[s:s + chunk] = np.exp(-gamma * np.einsum("ijk,ijk->ij", d, d))
    return out


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    n_iter: int
    converged: bool
    gap: float


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_passes: int = 1000) -> SmoResult:
    """Solve the SVM dual for a precomputed kernel matrix.

    ``max_passes`` caps the work at ``max_passes * n`` pair updates.  On
    hitting the cap the current iterate is returned with ``converged=False``.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if C <= 0:
        raise ValueError("C must be positive")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateLabels("degenerate labels: both classes are required")
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    max_iter = max(1, max_passes) * max(n, 1)
    it = 0
    gap = math.inf
    converged = False
    while it < max_iter:
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        i = int(np.argmax(np.where(up, yG, -np.inf)))
        j = int(np.argmin(np.where(low, yG, np.inf)))
        gap = float(yG[i] - yG[j]) if up[i] and low[j] else 0.0
        if gap < tol:
            converged = True
            break
        it += 1
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2 * Q[i, j]
            delta = (-G[i] - G[j]) / max(quad, _TAU)
            diff = ai - aj
            a_i, a_j = ai + delta, aj + delta
            if diff > 0:
                if a_j < 0:
                    a_j, a_i = 0.0, diff
            elif a_i < 0:
                a_i, a_j = 0.0, -diff
            if diff > 0:
                if a_i > C:
                    a_i, a_j = C, C - diff
            elif a_j > C:
                a_j, a_i = C, C + diff
        else:
            quad = QD[i] + QD[j] - 2 * Q[i, j]
            delta = (G[i] - G[j]) / max(quad, _TAU)
            total = ai + aj
            a_i, a_j = ai - delta, aj + delta
            if total > C:
                if a_i > C:
                    a_i, a_j = C, total - C
                if a_j > C:
                    a_j, a_i = C, total - C
            else:
                if a_j < 0:
                    a_j, a_i = 0.0, total
                if a_i < 0:
                    a_i, a_j = 0.0, total
        alpha[i], alpha[j] = a_i, a_j
        G += Q[i] * (a_i - ai) + Q[j] * (a_j - aj)
    if not converged:
        warnings.warn(f"SMO stopped after {it} updates with gap {gap:.3g} > tol {tol}",
                      ConvergenceWarning, stacklevel=2)
    return SmoResult(alpha, _bias(alpha, y, G, C), it, converged, gap)


def _bias(alpha, y, G, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (~at_upper & (y < 0))
        ub = float(yG[ub_mask].min()) if ub_mask.any() else math.inf
        lb = float(yG[lb_mask].max()) if lb_mask.any() else -math.inf
        rho = (ub + lb) / 2
    return -rho


def dual_objective(alpha, y, K) -> float:
    """The maximized dual value: sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij."""
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def kkt_violation(alpha, y, K, C, bias) -> float:
    """Largest violation of the soft-margin KKT conditions at the given solution."""
    alpha = np.asarray(alpha, dtype=float)
    y = np.asarray(y, dtype=float)
    yf = y * (K @ (alpha * y) + bias)
    viol = np.where(alpha <= 0, np.maximum(0.0, 1 - yf),
                    np.where(alpha >= C, np.maximum(0.0, yf - 1), np.abs(yf - 1)))
    return float(viol.max()) if len(viol) else 0.0


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass
class KernelSvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray
    labels: np.ndarray
    bias: float
    gamma: float
    C: float
    feature_order: list[str]
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    converged: bool = True
    meta: dict = field(default_factory=dict)

    def _prep(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_order):
            raise ValueError(f"dimension mismatch: expected {len(self.feature_order)} "
                             f"features, got {X.shape[1]}")
        if self.mean is not None:
            X = (X - self.mean) / self.scale
        return X

    def decision_function(self, X) -> np.ndarray:
        X = self._prep(X)
        if len(self.alphas) == 0:
            return np.full(X.shape[0], self.bias)
        K = rbf_matrix(X, self.support_vectors, self.gamma)
        return K @ (self.alphas * self.labels) + self.bias

    def predict(self, X) -> np.ndarray:
        # exact ties go to the normal class
        return np.where(self.decision_function(X) > 0, SEMINAR, NORMAL)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    def dumps(self) -> str:
        r = lambda v: repr(float(v))  # noqa: E731
        lines = [
            f"{MODEL_MAGIC} {MODEL_VERSION}",
            "kernel rbf",
            f"gamma {r(self.gamma)}",
            f"C {r(self.C)}",
            f"bias {r(self.bias)}",
            f"converged {int(self.converged)}",
            "features " + " ".join(self.feature_order),
            "standardize " + ("1" if self.mean is not None else "0"),
        ]
        if self.mean is not None:
            lines.append("mean " + " ".join(r(v) for v in self.mean))
            lines.append("scale " + " ".join(r(v) for v in self.scale))
        lines.append(f"support_vectors {len(self.alphas)}")
        for a, lab, sv in zip(self.alphas, self.labels, self.support_vectors):
            lines.append(" ".join([r(a), str(int(lab))] + [r(v) for v in sv]))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path) -> "KernelSvmModel":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def loads(cls, text: str) -> "KernelSvmModel":
        lines = text.splitlines()
        head = lines[0].split()
        if len(head) != 2 or head[0] != MODEL_MAGIC:
            raise ValueError("not a seminar-svm model file")
        if int(head[1]) != MODEL_VERSION:
            raise ValueError(f"unsupported model version {head[1]}")
        kv = {}
        idx = 1
        while idx < len(lines):
            key, _, rest = lines[idx].partition(" ")
            idx += 1
            kv[key] = rest
            if key == "support_vectors":
                break
        feats = kv["features"].split()
        n_sv = int(kv["support_vectors"])
        rows = [lines[idx + k].split() for k in range(n_sv)]
        alphas = np.array([float(p[0]) for p in rows])
        labels = np.array([int(p[1]) for p in rows])
        svs = np.array([[float(v) for v in p[2:]] for p in rows]).reshape(n_sv, len(feats))
        std = kv.get("standardize", "0") == "1"
        return cls(
            support_vectors=svs, alphas=alphas, labels=labels,
            bias=float(kv["bias"]), gamma=float(kv["gamma"]), C=float(kv["C"]),
            feature_order=feats,
            mean=np.array([float(v) for v in kv["mean"].split()]) if std else None,
            scale=np.array([float(v) for v in kv["scale"].split()]) if std else None,
            converged=kv.get("converged", "1") == "1",
        )


def _as_pm1(y) -> np.ndarray:
    y = np.asarray(y)
    vals = set(np.unique(y).tolist())
    if not vals <= {-1, 1}:
        raise ValueError(f"labels must be +1 (seminar) or -1 (normal), got {sorted(vals)}")
    return y.astype(float)


class SeminarSVC(ClassifierMixin, BaseEstimator):
    """RBF-kernel SVM over the user feature matrix.

    ``feature_subset`` selects feature groups (``"all"``, ``"interaction"``,
    ``"interaction+diversity"``, ...) or explicit column names; the other
    columns of ``X`` are ignored.  ``gamma="auto"`` means 1/n_selected.
    Rows are put in a canonical order before solving, so the fitted model
    does not depend on row order.
    """

    def __init__(self, C=1.0, gamma="auto", tol=1e-3, max_passes=1000,
                 standardize=False, feature_subset="all", feature_names=FEATURE_NAMES):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes
        self.standardize = standardize
        self.feature_subset = feature_subset
        self.feature_names = feature_names

    def _columns(self, n_features: int) -> tuple[list[int], list[str]]:
        names = list(self.feature_names)
        if len(names) != n_features:
            raise ValueError(f"expected {len(names)} feature columns, got {n_features}")
        fs = self.feature_subset
        if isinstance(fs, str):
            wanted = feature_subset(fs)
        else:
            wanted = list(fs)
            unknown = set(wanted) - set(names)
            if unknown:
                raise ValueError(f"unknown features {sorted(unknown)}")
        cols = [i for i, n in enumerate(names) if n in set(wanted)]
        return cols, [names[i] for i in cols]

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if X.shape[0] < 2:
            raise ValueError("need at least 2 training rows")
        y = _as_pm1(y)
        self.classes_ = np.array([NORMAL, SEMINAR])
        self.n_features_in_ = X.shape[1]
        cols, order = self._columns(X.shape[1])
        Xs = X[:, cols]
        mean = scale = None
        if self.standardize:
            mean = Xs.mean(axis=0)
            scale = Xs.std(axis=0)
            scale[scale == 0] = 1.0
            Xs = (Xs - mean) / scale
        gamma = 1.0 / len(cols) if self.gamma == "auto" else float(self.gamma)
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        perm = np.lexsort(np.column_stack([Xs, y]).T[::-1])
        Xs, y = Xs[perm], y[perm]
        K = rbf_matrix(Xs, Xs, gamma)
        res = smo_solve(K, y, float(self.C), self.tol, self.max_passes)
        sv = res.alpha > 0
        self.columns_ = cols
        self.gamma_ = gamma
        self.n_iter_ = res.n_iter
        self.converged_ = res.converged
        self.dual_gap_ = res.gap
        self.model_ = KernelSvmModel(
            support_vectors=Xs[sv], alphas=res.alpha[sv], labels=y[sv].astype(int),
            bias=res.bias, gamma=gamma, C=float(self.C), feature_order=order,
            mean=mean, scale=scale, converged=res.converged,
        )
        # training-set view for invariant checks
        self.train_alpha_ = res.alpha
        self.train_y_ = y
        self.train_K_ = K
        return self

    @property
    def support_vectors_(self):
        return self.model_.support_vectors

    @property
    def dual_coef_(self):
        return self.model_.alphas * self.model_.labels

    @property
    def intercept_(self):
        return self.model_.bias

    def _select(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"dimension mismatch: expected {self.n_features_in_} "
                             f"features, got {X.shape[1]}")
        return X[:, self.columns_]

    def decision_function(self, X) -> np.ndarray:
        Xs = self._select(X)
        if self.model_.mean is not None:
            Xs = (Xs - self.model_.mean) / self.model_.scale
        if len(self.model_.alphas) == 0:
            return np.full(Xs.shape[0], self.model_.bias)
        K = rbf_matrix(Xs, self.model_.support_vectors, self.gamma_)
        return K @ self.dual_coef_ + self.model_.bias

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) > 0, SEMINAR, NORMAL)

    @classmethod
    def from_model(cls, model: KernelSvmModel, feature_names=None) -> "SeminarSVC":
        """Rebuild a fitted estimator from a saved model (columns matched by name)."""
        names = list(feature_names or model.feature_order)
        missing = [f for f in model.feature_order if f not in names]
        if missing:
            raise ValueError(f"feature_order mismatch: input lacks {missing}")
        est = cls(C=model.C, gamma=model.gamma, standardize=model.mean is not None,
                  feature_subset=list(model.feature_order), feature_names=tuple(names))
        est.classes_ = np.array([NORMAL, SEMINAR])
        est.n_features_in_ = len(names)
        est.columns_ = [names.index(f) for f in model.feature_order]
        est.gamma_ = model.gamma
        est.converged_ = model.converged
        est.model_ = model
        return est


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts with the seminar class as positive.  Metrics are fractions."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def seminar(self) -> tuple[float, float, float]:
        return _prf(self.tp, self.fp, self.fn)

    @property
    def normal(self) -> tuple[float, float, float]:
        return _prf(self.tn, self.fn, self.fp)

    @property
    def macro_f1(self) -> float:
        return (self.seminar[2] + self.normal[2]) / 2

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else 0.0

    def row(self) -> list[float]:
        """Seminar P/R/F1, normal P/R/F1, macro-F1, as percentages to one decimal."""
        return [round(100 * v, 1) for v in (*self.seminar, *self.normal, self.macro_f1)]


def evaluate(predictions: Sequence[int], gold: Sequence[int]) -> EvalReport:
    pred = np.asarray(predictions)
    gold = np.asarray(gold)
    if pred.shape != gold.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {gold.shape}")
    ps, gs = pred == SEMINAR, gold == SEMINAR
    return EvalReport(int(np.sum(ps & gs)), int(np.sum(ps & ~gs)),
                      int(np.sum(~ps & gs)), int(np.sum(~ps & ~gs)))


TABLE_HEADER = ("Features", "Sem P", "Sem R", "Sem F1", "Nor P", "Nor R", "Nor F1", "Macro F1")


def format_table(reports: dict[str, EvalReport]) -> str:
    """Plain-text results table, one row per feature set."""
    width = max([len(TABLE_HEADER[0])] + [len(k) for k in reports])
    out = [f"{'':>{width}} | {'Seminar':^20} | {'Normal':^20} | Macro",
           f"{TABLE_HEADER[0]:>{width}} | {'P':>6} {'R':>6} {'F1':>6} | "
           f"{'P':>6} {'R':>6} {'F1':>6} | {'F1':>5}",
           "-" * (width + 56)]
    for name, rep in reports.items():
        v = rep.row()
        out.append(f"{name:>{width}} | {v[0]:6.1f} {v[1]:6.1f} {v[2]:6.1f} | "
                   f"{v[3]:6.1f} {v[4]:6.1f} {v[5]:6.1f} | {v[6]:5.1f}")
    return "\n".join(out) + "\n"


def format_tsv(reports: dict[str, EvalReport]) -> str:
    cols = ["features", "seminar_p", "seminar_r", "seminar_f1", "normal_p", "normal_r",
            "normal_f1", "macro_f1", "tp", "fp", "fn", "tn"]
    out = ["\t".join(cols)]
    for name, rep in reports.items():
        vals = [rep.seminar[0], rep.seminar[1], rep.seminar[2],
                rep.normal[0], rep.normal[1], rep.normal[2], rep.macro_f1]
        out.append("\t".join([name] + [f"{v:.6f}" for v in vals]
                             + [str(c) for c in (rep.tp, rep.fp, rep.fn, rep.tn)]))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = (0.01, 0.05, 0.25, 1.0)


def grid_search(X, y, params: dict, Cs: Iterable[float] = DEFAULT_C_GRID,
                gammas: Iterable[float] = DEFAULT_GAMMA_GRID, folds: int = 5) -> dict:
    """Pick (C, gamma) by stratified k-fold macro-F1 on the given rows only.

    Ties keep the earliest grid point.
    """
    from sklearn.model_selection import StratifiedKFold

    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n_splits = max(2, min(folds, int(np.min(np.bincount((y > 0).astype(int))))))
    skf = StratifiedKFold(n_splits=n_splits)
    best, best_score = None, -1.0
    for C in Cs:
        for g in gammas:
            pred = np.empty(len(y), dtype=int)
            for tr, te in skf.split(X, y):
                est = SeminarSVC(**{**params, "C": C, "gamma": g})
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    pred[te] = est.fit(X[tr], y[tr]).predict(X[te])
            score = evaluate(pred, y).macro_f1
            if score > best_score:
                best, best_score = {"C": C, "gamma": g}, score
    return best


def _fold(args):
    X, y, i, params, tune = args
    mask = np.arange(len(y)) != i
    p = dict(params)
    if tune:
        p.update(grid_search(X[mask], y[mask], params))
    est = SeminarSVC(**p).fit(X[mask], y[mask])
    margin = float(est.decision_function(X[i:i + 1])[0])
    return (SEMINAR if margin > 0 else NORMAL), margin, est.converged_


@dataclass
class LoocvResult:
    report: EvalReport
    predictions: np.ndarray
    margins: np.ndarray
    all_converged: bool


def loocv(X, y, threads: int = 1, tune: bool = False, **params) -> LoocvResult:
    """Leave-one-out: train on all rows but one, predict the held-out row, repeat.

    ``params`` go to :class:`SeminarSVC`.  With ``tune`` a grid search runs
    inside each training fold.  Results do not depend on ``threads``.
    """
    X = np.asarray(X, dtype=float)
    y = _as_pm1(y).astype(int)
    if len(y) < 3:
        raise ValueError("leave-one-out needs at least 3 rows")
    jobs = [(X, y, i, params, tune) for i in range(len(y))]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(_fold, jobs))
    else:
        out = [_fold(j) for j in jobs]
    pred = np.array([o[0] for o in out], dtype=int)
    margins = np.array([o[1] for o in out])
    return LoocvResult(evaluate(pred, y), pred, margins, all(o[2] for o in out))
