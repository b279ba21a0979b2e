"""Binary classifiers trained from scratch on sparse feature matrices.

Eight model kinds: logistic regression (lr), decision tree (dt), random
forest (rf), multinomial naive Bayes (mnb), per-sample SGD (sgd), linear
SVM via Pegasos (svm), a voting ensemble (vc), and a one-hidden-layer
perceptron (mlp).  Everything trains on scipy CSR matrices, is
deterministic given its seed, and serializes to a checksummed JSON file.

Score semantics: lr, mnb, rf, mlp, and soft vc emit probabilities with
label = [score >= 0.5] (a tie goes to machine).  svm and hinge sgd emit
the signed margin with label = [margin >= 0].  dt and hard vc follow
their own vote rules and the score is informational.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from mgtd.errors import (
    ChecksumMismatch,
    DimensionMismatch,
    EmptyEnsemble,
    EmptyTrainingSet,
    MixedDimensions,
    NegativeFeature,
    SingleClassTraining,
    VersionMismatch,
)
from mgtd.utils import canonical_json, derive_seed, sha256_text
from mgtd.vectorize import SparseVector, TfidfModel, stack_vectors

MODEL_FORMAT = "mgtd-model"
MODEL_VERSION = 1

KINDS = ("lr", "dt", "rf", "mnb", "sgd", "svm", "vc", "mlp")


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    feature_dim: int
    seed: int
    training_config: dict
    params: dict
    tfidf: TfidfModel | None = None


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float


# ---------------------------------------------------------------------------
# configs


@dataclass(frozen=True)
class LogRegConfig:
    l2: float = 1e-4
    epochs: int = 20
    batch: int = 64
    lr0: float = 1.0
    lr_schedule: str = "invsqrt"
    seed: int = 42

    def as_dict(self) -> dict:
        return {
            "l2": self.l2,
            "epochs": self.epochs,
            "batch": self.batch,
            "lr0": self.lr0,
            "lr_schedule": self.lr_schedule,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MnbConfig:
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    def as_dict(self) -> dict:
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class SgdConfig:
    loss: str = "hinge"
    l2: float = 1e-4
    epochs: int = 20
    lr0: float = 0.1
    seed: int = 42

    def __post_init__(self) -> None:
        if self.loss not in ("hinge", "log"):
            raise ValueError(f"loss must be 'hinge' or 'log', got {self.loss!r}")

    def as_dict(self) -> dict:
        return {
            "loss": self.loss,
            "l2": self.l2,
            "epochs": self.epochs,
            "lr0": self.lr0,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SvmConfig:
    lam: float = 1e-4
    epochs: int = 20
    seed: int = 42

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "epochs": self.epochs, "seed": self.seed}


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 32
    min_samples_split: int = 2
    seed: int = 42

    def as_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_features: str = "sqrt"
    bootstrap: bool = True
    max_depth: int = 32
    min_samples_split: int = 2
    seed: int = 42

    def __post_init__(self) -> None:
        if self.max_features not in ("sqrt", "all"):
            raise ValueError(f"max_features must be 'sqrt' or 'all'")
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")

    def as_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 128
    epochs: int = 10
    batch: int = 32
    lr: float = 0.1
    seed: int = 42

    def as_dict(self) -> dict:
        return {
            "hidden": self.hidden,
            "epochs": self.epochs,
            "batch": self.batch,
            "lr": self.lr,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# shared plumbing


def _as_csr(X) -> sparse.csr_matrix:
    if sparse.issparse(X):
        return X.tocsr()
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], SparseVector):
        return stack_vectors(list(X))
    arr = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return sparse.csr_matrix(arr)


def _validate_xy(X, y) -> tuple[sparse.csr_matrix, np.ndarray]:
    X = _as_csr(X)
    y = np.asarray(y, dtype=np.int64).ravel()
    if X.shape[0] != len(y):
        raise DimensionMismatch(f"{X.shape[0]} rows but {len(y)} labels")
    if len(y) < 2:
        raise EmptyTrainingSet("need at least two training samples")
    classes = set(np.unique(y).tolist())
    if not classes <= {0, 1}:
        raise ValueError(f"labels must be 0/1, got {sorted(classes)}")
    if len(classes) < 2:
        raise SingleClassTraining("training data contains a single class")
    return X, y


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _check_dim(model: TrainedModel, dim: int) -> None:
    if dim != model.feature_dim:
        raise DimensionMismatch(
            f"input dim {dim} != model dim {model.feature_dim}"
        )


# ---------------------------------------------------------------------------
# logistic regression


def train_logreg(X, y, cfg: LogRegConfig | None = None) -> TrainedModel:
    """Mini-batch gradient descent on average logistic loss + (l2/2)||w||^2.

    The bias stays unregularized.  The learning rate decays as
    lr0 / sqrt(t) over update steps when lr_schedule is "invsqrt".
    """
    cfg = cfg or LogRegConfig()
    X, y = _validate_xy(X, y)
    n, dim = X.shape
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, "train", "lr")))
    yf = y.astype(np.float64)
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch):
            idx = order[start : start + cfg.batch]
            step += 1
            eta = cfg.lr0 / math.sqrt(step) if cfg.lr_schedule == "invsqrt" else cfg.lr0
            Xb = X[idx]
            p = _sigmoid(Xb @ w + b)
            err = (p - yf[idx]) / len(idx)
            grad_w = Xb.T @ err + cfg.l2 * w
            w -= eta * grad_w
            b -= eta * float(err.sum())
    return TrainedModel(
        kind="lr",
        feature_dim=dim,
        seed=cfg.seed,
        training_config=cfg.as_dict(),
        params={"w": w, "b": b},
    )


# ---------------------------------------------------------------------------
# multinomial naive Bayes


def train_mnb(X, y, cfg: MnbConfig | None = None) -> TrainedModel:
    """Laplace-smoothed multinomial Bayes over non-negative feature values.

    TF-IDF inputs are accepted and treated as fractional counts.
    """
    cfg = cfg or MnbConfig()
    X, y = _validate_xy(X, y)
    if X.nnz and X.data.min() < 0:
        raise NegativeFeature("multinomial NB requires non-negative features")
    n, dim = X.shape
    log_prior = np.empty(2, dtype=np.float64)
    log_like = np.empty((2, dim), dtype=np.float64)
    for c in (0, 1):
        mask = y == c
        log_prior[c] = math.log(mask.sum() / n)
        counts = np.asarray(X[mask].sum(axis=0)).ravel() + cfg.alpha
        log_like[c] = np.log(counts / counts.sum())
    return TrainedModel(
        kind="mnb",
        feature_dim=dim,
        seed=0,
        training_config=cfg.as_dict(),
        params={"log_prior": log_prior, "log_like": log_like},
    )


# ---------------------------------------------------------------------------
# per-sample SGD and Pegasos SVM (shared scale-trick loop)


def _sgd_loop(X, y, epochs, seed_tag, seed, update):
    """Visit samples in a seeded shuffled order, calling update per sample.

    update(t, row_slice, target) mutates the weight state it closes over;
    t is the 1-based global step count.
    """
    n = X.shape[0]
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "train", seed_tag)))
    indptr, cols, data = X.indptr, X.indices, X.data
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for i in order:
            t += 1
            lo, hi = indptr[i], indptr[i + 1]
            update(t, cols[lo:hi], data[lo:hi], y[i])


def train_sgd_linear(X, y, cfg: SgdConfig | None = None) -> TrainedModel:
    """Per-sample subgradient descent with inverse-scaling learning rate.

    Hinge loss by default; loss="log" gives per-sample logistic updates.
    L2 shrinkage is applied through a scale factor so each step stays
    O(nnz of the row).
    """
    cfg = cfg or SgdConfig()
    X, y = _validate_xy(X, y)
    n, dim = X.shape
    v = np.zeros(dim, dtype=np.float64)
    state = {"s": 1.0, "b": 0.0}

    def update(t, cols, data, label):
        eta = cfg.lr0 / math.sqrt(t)
        target = 2.0 * label - 1.0
        margin = target * (state["s"] * float(v[cols] @ data) + state["b"])
        shrink = 1.0 - eta * cfg.l2
        if shrink <= 0:
            v[:] = 0.0
            state["s"] = 1.0
        else:
            state["s"] *= shrink
        if cfg.loss == "hinge":
            if margin < 1.0:
                v[cols] += (eta * target / state["s"]) * data
                state["b"] += eta * target
        else:
            # logistic subgradient: sigma(-margin) scales the update
            g = _sigmoid(-margin)
            v[cols] += (eta * target * g / state["s"]) * data
            state["b"] += eta * target * g

    _sgd_loop(X, y, cfg.epochs, "sgd", cfg.seed, update)
    return TrainedModel(
        kind="sgd",
        feature_dim=dim,
        seed=cfg.seed,
        training_config=cfg.as_dict(),
        params={"w": state["s"] * v, "b": state["b"], "loss": cfg.loss},
    )


def train_svm_linear(X, y, cfg: SvmConfig | None = None) -> TrainedModel:
    """Pegasos primal hinge minimization; no bias term, eta_t = 1/(lambda t)."""
    cfg = cfg or SvmConfig()
    X, y = _validate_xy(X, y)
    n, dim = X.shape
    v = np.zeros(dim, dtype=np.float64)
    state = {"s": 1.0}

    def update(t, cols, data, label):
        eta = 1.0 / (cfg.lam * t)
        target = 2.0 * label - 1.0
        margin = target * state["s"] * float(v[cols] @ data)
        shrink = 1.0 - eta * cfg.lam
        if shrink <= 0:
            # t=1 zeroes the weights; restart the scale factor
            v[:] = 0.0
            state["s"] = 1.0
        else:
            state["s"] *= shrink
        if margin < 1.0:
            v[cols] += (eta * target / state["s"]) * data

    _sgd_loop(X, y, cfg.epochs, "svm", cfg.seed, update)
    return TrainedModel(
        kind="svm",
        feature_dim=dim,
        seed=cfg.seed,
        training_config=cfg.as_dict(),
        params={"w": state["s"] * v},
    )


# ---------------------------------------------------------------------------
# CART trees and bagged forests


def _gini_best_split(values: np.ndarray, labels: np.ndarray):
    """Best threshold for one feature; returns (decrease, threshold) or None.

    Split rule is value <= threshold to the left.  Thresholds are
    midpoints between consecutive distinct sorted values.
    """
    n = len(labels)
    order = np.argsort(values, kind="stable")
    sv = values[order]
    sl = labels[order]
    distinct = np.nonzero(np.diff(sv) > 0)[0]
    if len(distinct) == 0:
        return None
    pos_prefix = np.cumsum(sl)
    total_pos = pos_prefix[-1]
    parent = 1.0 - ((total_pos / n) ** 2 + ((n - total_pos) / n) ** 2)

    nl = distinct + 1
    nr = n - nl
    pos_l = pos_prefix[distinct]
    pos_r = total_pos - pos_l
    gini_l = 1.0 - (pos_l / nl) ** 2 - ((nl - pos_l) / nl) ** 2
    gini_r = 1.0 - (pos_r / nr) ** 2 - ((nr - pos_r) / nr) ** 2
    weighted = (nl * gini_l + nr * gini_r) / n
    decrease = parent - weighted

    best = int(np.argmax(decrease))
    if decrease[best] <= 1e-15:
        return None
    threshold = 0.5 * (sv[distinct[best]] + sv[distinct[best] + 1])
    return float(decrease[best]), float(threshold)


def _column_values(Xc: sparse.csc_matrix, feature: int, rows: np.ndarray, marker):
    """Values of one column restricted to the node's rows (zeros included)."""
    lo, hi = Xc.indptr[feature], Xc.indptr[feature + 1]
    col_rows = Xc.indices[lo:hi]
    col_data = Xc.data[lo:hi]
    values = np.zeros(len(rows), dtype=np.float64)
    if hi > lo:
        pos = marker[col_rows]
        inside = pos >= 0
        values[pos[inside]] = col_data[inside]
    return values


def _build_tree(
    Xc: sparse.csc_matrix,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    cfg_depth: int,
    cfg_min_split: int,
    n_sub_features,
    rng,
    marker: np.ndarray,
):
    labels = y[rows]
    n_pos = int(labels.sum())
    n = len(rows)
    counts = [n - n_pos, n_pos]
    if depth >= cfg_depth or n < cfg_min_split or n_pos in (0, n):
        return {"leaf": counts}

    dim = Xc.shape[1]
    if n_sub_features is None or n_sub_features >= dim:
        features = range(dim)
    else:
        features = np.sort(rng.choice(dim, size=n_sub_features, replace=False))

    marker[rows] = np.arange(n)
    best = None
    for feature in features:
        values = _column_values(Xc, int(feature), rows, marker)
        found = _gini_best_split(values, labels)
        if found is None:
            continue
        decrease, threshold = found
        # strict improvement keeps the lowest feature, lowest threshold
        if best is None or decrease > best[0]:
            best = (decrease, int(feature), threshold)
    marker[rows] = -1

    if best is None:
        return {"leaf": counts}
    _, feature, threshold = best
    marker[rows] = np.arange(n)
    values = _column_values(Xc, feature, rows, marker)
    marker[rows] = -1
    go_left = values <= threshold
    left_rows = rows[go_left]
    right_rows = rows[~go_left]
    return {
        "f": feature,
        "t": threshold,
        "l": _build_tree(
            Xc, y, left_rows, depth + 1, cfg_depth, cfg_min_split,
            n_sub_features, rng, marker,
        ),
        "r": _build_tree(
            Xc, y, right_rows, depth + 1, cfg_depth, cfg_min_split,
            n_sub_features, rng, marker,
        ),
    }


def train_dtree(X, y, cfg: TreeConfig | None = None) -> TrainedModel:
    """CART with Gini impurity; ties prefer the lowest feature index."""
    cfg = cfg or TreeConfig()
    X, y = _validate_xy(X, y)
    n, dim = X.shape
    Xc = X.tocsc()
    marker = np.full(n, -1, dtype=np.int64)
    tree = _build_tree(
        Xc, y, np.arange(n), 0, cfg.max_depth, cfg.min_samples_split,
        None, None, marker,
    )
    return TrainedModel(
        kind="dt",
        feature_dim=dim,
        seed=cfg.seed,
        training_config=cfg.as_dict(),
        params={"tree": tree},
    )


def train_rforest(X, y, cfg: ForestConfig | None = None) -> TrainedModel:
    """Bootstrap-bagged CART trees with per-split feature subsampling.

    Tree i draws from a generator seeded with seed + i, so the forest is
    reproducible independent of build order.  With n_trees=1,
    bootstrap=False, and max_features="all" the single tree matches
    train_dtree exactly.
    """
    cfg = cfg or ForestConfig()
    X, y = _validate_xy(X, y)
    n, dim = X.shape
    Xc = X.tocsc()
    if cfg.max_features == "sqrt":
        n_sub = max(1, int(math.isqrt(dim)))
        if n_sub >= dim:
            n_sub = None
    else:
        n_sub = None
    trees = []
    marker = np.full(n, -1, dtype=np.int64)
    for i in range(cfg.n_trees):
        rng = np.random.Generator(np.random.PCG64(cfg.seed + i))
        if cfg.bootstrap:
            # materialize the sample so duplicate rows keep their weight
            sample = np.sort(rng.integers(0, n, size=n))
            Xcb = X[sample].tocsc()
            yb = y[sample]
        else:
            Xcb = Xc
            yb = y
        trees.append(
            _build_tree(
                Xcb, yb, np.arange(Xcb.shape[0]), 0, cfg.max_depth,
                cfg.min_samples_split, n_sub, rng, marker,
            )
        )
    return TrainedModel(
        kind="rf",
        feature_dim=dim,
        seed=cfg.seed,
        training_config=cfg.as_dict(),
        params={"trees": trees},
    )


def _tree_leaf(tree: dict, getval) -> list[int]:
    node = tree
    while "leaf" not in node:
        node = node["l"] if getval(node["f"]) <= node["t"] else node["r"]
    return node["leaf"]


def _leaf_label(counts) -> int:
    n0, n1 = counts
    return 1 if n1 > n0 else 0


# ---------------------------------------------------------------------------
# voting ensemble


def train_voting(members: list[TrainedModel], mode: str = "hard") -> TrainedModel:
    """Combine trained members by majority vote or mean probability."""
    if mode not in ("hard", "soft"):
        raise ValueError(f"mode must be 'hard' or 'soft', got {mode!r}")
    if len(members) < 2:
        raise EmptyEnsemble(f"voting needs >= 2 members, got {len(members)}")
    dims = {m.feature_dim for m in members}
    if len(dims) != 1:
        raise MixedDimensions(f"member feature dims differ: {sorted(dims)}")
    return TrainedModel(
        kind="vc",
        feature_dim=dims.pop(),
        seed=0,
        training_config={"mode": mode, "members": [m.kind for m in members]},
        params={"mode": mode, "members": list(members)},
    )


# ---------------------------------------------------------------------------
# one-hidden-layer MLP


def _mlp_init(dim: int, hidden: int, seed: int) -> dict:
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "train", "mlp")))
    return {
        "W1": rng.normal(0.0, math.sqrt(2.0 / dim), size=(dim, hidden)),
        "b1": np.zeros(hidden, dtype=np.float64),
        "W2": rng.normal(0.0, math.sqrt(2.0 / hidden), size=hidden),
        "b2": 0.0,
    }


def mlp_forward(params: dict, X) -> np.ndarray:
    Z1 = X @ params["W1"] + params["b1"]
    A1 = np.maximum(Z1, 0.0)
    return _sigmoid(A1 @ params["W2"] + params["b2"])


def mlp_loss_and_grads(params: dict, X, y: np.ndarray):
    """Mean binary cross-entropy and analytic gradients.

    Exposed so the finite-difference oracle can check every parameter
    block.  X may be dense or CSR.
    """
    n = X.shape[0]
    Z1 = X @ params["W1"] + params["b1"]
    A1 = np.maximum(Z1, 0.0)
    z2 = A1 @ params["W2"] + params["b2"]
    p = _sigmoid(z2)
    eps = 1e-12
    loss = -float(
        np.mean(y * np.log(p + eps) + (1.0 - y) * np.log(1.0 - p + eps))
    )
    dz2 = (p - y) / n
    gW2 = A1.T @ dz2
    gb2 = float(dz2.sum())
    dA1 = np.outer(dz2, params["W2"])
    dZ1 = dA1 * (Z1 > 0)
    gW1 = (X.T @ dZ1) if sparse.issparse(X) else X.T @ dZ1
    gW1 = np.asarray(gW1)
    gb1 = dZ1.sum(axis=0)
    return loss, {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2}


def train_mlp(X, y, cfg: MlpConfig | None = None) -> TrainedModel:
    """One ReLU hidden layer, sigmoid output, mini-batch gradient descent."""
    cfg = cfg or MlpConfig()
    X, y = _validate_xy(X, y)
    n, dim = X.shape
    params = _mlp_init(dim, cfg.hidden, cfg.seed)
    rng = np.random.Generator(
        np.random.PCG64(derive_seed(cfg.seed, "train", "mlp-batches"))
    )
    yf = y.astype(np.float64)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch):
            idx = order[start : start + cfg.batch]
            _, grads = mlp_loss_and_grads(params, X[idx], yf[idx])
            params["W1"] -= cfg.lr * grads["W1"]
            params["b1"] -= cfg.lr * grads["b1"]
            params["W2"] -= cfg.lr * grads["W2"]
            params["b2"] -= cfg.lr * grads["b2"]
    return TrainedModel(
        kind="mlp",
        feature_dim=dim,
        seed=cfg.seed,
        training_config=cfg.as_dict(),
        params=params,
    )


# ---------------------------------------------------------------------------
# prediction


def _scores_matrix(model: TrainedModel, X: sparse.csr_matrix) -> np.ndarray:
    kind = model.kind
    p = model.params
    if kind == "lr":
        return _sigmoid(X @ p["w"] + p["b"])
    if kind == "svm":
        return np.asarray(X @ p["w"], dtype=np.float64)
    if kind == "sgd":
        margins = np.asarray(X @ p["w"] + p["b"], dtype=np.float64)
        return margins if p["loss"] == "hinge" else _sigmoid(margins)
    if kind == "mnb":
        joint = X @ p["log_like"].T + p["log_prior"]
        return _sigmoid(joint[:, 1] - joint[:, 0])
    if kind == "mlp":
        return mlp_forward(p, X)
    if kind == "rf":
        votes = np.zeros(X.shape[0], dtype=np.float64)
        lil = X.tolil()
        for row in range(X.shape[0]):
            vals = dict(zip(lil.rows[row], lil.data[row]))
            getval = lambda f: vals.get(f, 0.0)
            votes[row] = sum(
                _leaf_label(_tree_leaf(t, getval)) for t in p["trees"]
            ) / len(p["trees"])
        return votes
    if kind == "dt":
        scores = np.zeros(X.shape[0], dtype=np.float64)
        lil = X.tolil()
        for row in range(X.shape[0]):
            vals = dict(zip(lil.rows[row], lil.data[row]))
            counts = _tree_leaf(p["tree"], lambda f: vals.get(f, 0.0))
            total = counts[0] + counts[1]
            scores[row] = counts[1] / total if total else 0.0
        return scores
    if kind == "vc":
        # soft mode: this mean IS the decision score; hard mode reports
        # it for inspection while labels come from the vote rule
        member_scores = np.stack(
            [_problike_matrix(m, X) for m in p["members"]], axis=0
        )
        return member_scores.mean(axis=0)
    raise ValueError(f"unknown model kind {kind!r}")


def _problike_matrix(model: TrainedModel, X) -> np.ndarray:
    """Member score squashed into [0,1] for ensemble averaging."""
    scores = _scores_matrix(model, X)
    if model.kind == "svm" or (
        model.kind == "sgd" and model.params["loss"] == "hinge"
    ):
        return _sigmoid(scores)
    return scores


def _labels_matrix(model: TrainedModel, X) -> np.ndarray:
    kind = model.kind
    p = model.params
    if kind == "vc":
        member_labels = np.stack(
            [_labels_matrix(m, X) for m in p["members"]], axis=0
        )
        problike = np.stack([_problike_matrix(m, X) for m in p["members"]], axis=0)
        if p["mode"] == "soft":
            return (problike.mean(axis=0) >= 0.5).astype(np.int64)
        votes_1 = member_labels.sum(axis=0)
        n_members = member_labels.shape[0]
        labels = np.where(2 * votes_1 > n_members, 1, 0)
        tied = 2 * votes_1 == n_members
        if tied.any():
            labels[tied] = (problike.mean(axis=0)[tied] >= 0.5).astype(np.int64)
        return labels.astype(np.int64)
    scores = _scores_matrix(model, X)
    if kind == "dt":
        labels = np.zeros(X.shape[0], dtype=np.int64)
        Xl = _as_csr(X).tolil()
        for row in range(X.shape[0]):
            vals = dict(zip(Xl.rows[row], Xl.data[row]))
            counts = _tree_leaf(p["tree"], lambda f: vals.get(f, 0.0))
            labels[row] = _leaf_label(counts)
        return labels
    if kind == "svm" or (kind == "sgd" and p["loss"] == "hinge"):
        return (scores >= 0.0).astype(np.int64)
    return (scores >= 0.5).astype(np.int64)


def predict_many(model: TrainedModel, X) -> tuple[np.ndarray, np.ndarray]:
    """(labels, scores) for every row of X."""
    X = _as_csr(X)
    _check_dim(model, X.shape[1])
    return _labels_matrix(model, X), _scores_matrix(model, X)


def predict(model: TrainedModel, x) -> Prediction:
    """Prediction for a single SparseVector (or 1-row matrix)."""
    if isinstance(x, SparseVector):
        _check_dim(model, x.dim)
        row = sparse.csr_matrix(
            (x.values, x.indices, np.array([0, len(x.indices)])),
            shape=(1, x.dim),
        )
    else:
        row = _as_csr(x)
        _check_dim(model, row.shape[1])
    labels, scores = predict_many(model, row)
    return Prediction(label=int(labels[0]), score=float(scores[0]))


# ---------------------------------------------------------------------------
# persistence


def _params_to_json(model: TrainedModel) -> dict:
    p = model.params
    kind = model.kind
    if kind in ("lr", "sgd"):
        out = {"w": p["w"].tolist(), "b": float(p["b"])}
        if kind == "sgd":
            out["loss"] = p["loss"]
        return out
    if kind == "svm":
        return {"w": p["w"].tolist()}
    if kind == "mnb":
        return {
            "log_prior": p["log_prior"].tolist(),
            "log_like": p["log_like"].tolist(),
        }
    if kind == "dt":
        return {"tree": p["tree"]}
    if kind == "rf":
        return {"trees": p["trees"]}
    if kind == "mlp":
        return {
            "W1": p["W1"].tolist(),
            "b1": p["b1"].tolist(),
            "W2": p["W2"].tolist(),
            "b2": float(p["b2"]),
        }
    if kind == "vc":
        return {
            "mode": p["mode"],
            "members": [_model_payload(m) for m in p["members"]],
        }
    raise ValueError(f"unknown model kind {kind!r}")


def _params_from_json(kind: str, data: dict) -> dict:
    if kind in ("lr", "sgd"):
        out = {"w": np.asarray(data["w"], dtype=np.float64), "b": float(data["b"])}
        if kind == "sgd":
            out["loss"] = data["loss"]
        return out
    if kind == "svm":
        return {"w": np.asarray(data["w"], dtype=np.float64)}
    if kind == "mnb":
        return {
            "log_prior": np.asarray(data["log_prior"], dtype=np.float64),
            "log_like": np.asarray(data["log_like"], dtype=np.float64),
        }
    if kind == "dt":
        return {"tree": data["tree"]}
    if kind == "rf":
        return {"trees": data["trees"]}
    if kind == "mlp":
        return {
            "W1": np.asarray(data["W1"], dtype=np.float64),
            "b1": np.asarray(data["b1"], dtype=np.float64),
            "W2": np.asarray(data["W2"], dtype=np.float64),
            "b2": float(data["b2"]),
        }
    if kind == "vc":
        return {
            "mode": data["mode"],
            "members": [_model_from_payload(m) for m in data["members"]],
        }
    raise ValueError(f"unknown model kind {kind!r}")


def _model_payload(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "feature_dim": model.feature_dim,
        "seed": model.seed,
        "training_config": model.training_config,
        "tfidf": model.tfidf.as_dict() if model.tfidf is not None else None,
        "params": _params_to_json(model),
    }


def _model_from_payload(payload: dict) -> TrainedModel:
    kind = payload["kind"]
    tfidf = payload.get("tfidf")
    return TrainedModel(
        kind=kind,
        feature_dim=payload["feature_dim"],
        seed=payload["seed"],
        training_config=payload["training_config"],
        params=_params_from_json(kind, payload["params"]),
        tfidf=TfidfModel.from_dict(tfidf) if tfidf is not None else None,
    )


def save_model(model: TrainedModel, path: str | Path) -> None:
    payload = _model_payload(model)
    payload["sha256"] = sha256_text(canonical_json(payload))
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> TrainedModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise VersionMismatch(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise VersionMismatch(
            f"{path}: version {payload.get('version')} != {MODEL_VERSION}"
        )
    recorded = payload.pop("sha256", None)
    actual = sha256_text(canonical_json(payload))
    if recorded != actual:
        raise ChecksumMismatch(f"{path}: checksum {actual} != recorded {recorded}")
    return _model_from_payload(payload)


# ---------------------------------------------------------------------------
# dispatcher used by the CV harness and the CLI


def train_model(kind: str, X, y, seed: int = 42, **overrides) -> TrainedModel:
    """Train any non-ensemble kind with defaults plus keyword overrides."""
    if kind == "lr":
        return train_logreg(X, y, LogRegConfig(seed=seed, **overrides))
    if kind == "mnb":
        return train_mnb(X, y, MnbConfig(**overrides))
    if kind == "sgd":
        return train_sgd_linear(X, y, SgdConfig(seed=seed, **overrides))
    if kind == "svm":
        return train_svm_linear(X, y, SvmConfig(seed=seed, **overrides))
    if kind == "dt":
        return train_dtree(X, y, TreeConfig(seed=seed, **overrides))
    if kind == "rf":
        return train_rforest(X, y, ForestConfig(seed=seed, **overrides))
    if kind == "mlp":
        return train_mlp(X, y, MlpConfig(seed=seed, **overrides))
    if kind == "vc":
        members = [
            train_model(member, X, y, seed=seed)
            for member in overrides.pop("members", ("lr", "rf", "mnb"))
        ]
        return train_voting(members, mode=overrides.pop("mode", "hard"))
    raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
