"""The classifier zoo, implemented directly on numpy.

Five binary classifiers sharing one informal protocol:

    fit(X, y) -> self
    predict_proba(X) -> (n, 2) array of class probabilities
    predict(X) -> 0/1 labels (ties resolve to class 0)
    to_params() / from_params(...) for artifact round-trips

Labels are {0,1}. Everything is deterministic given the constructor
arguments; only the MLP consumes its seed (weight init).
"""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteFeature, SingleClass


def _check_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected 2-D feature matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix contains NaN or infinity")
    return X


def _check_training(X: np.ndarray, y: np.ndarray, allow_single_class: bool = False):
    X = _check_matrix(X)
    y = np.asarray(y, dtype=int)
    if len(y) != len(X):
        raise ValueError("labels length must match row count")
    classes = np.unique(y)
    if not np.isin(classes, (0, 1)).all():
        raise ValueError(f"labels must be 0/1, got {classes.tolist()}")
    if len(classes) < 2 and not allow_single_class:
        raise SingleClass(f"training labels contain only class {classes.tolist()}")
    return X, y


def _labels_from_proba(proba: np.ndarray) -> np.ndarray:
    # strict > so a 50/50 tie goes to class 0
    return (proba[:, 1] > 0.5).astype(int)


# -- decision tree ---------------------------------------------------------

def _gini_scan(x: np.ndarray, y: np.ndarray):
    """Best threshold for one feature by exhaustive midpoint scan.

    Returns (weighted_gini, threshold) or None when the feature is
    constant. Ties between thresholds keep the smallest one.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    cum_pos = np.cumsum(ys)
    total_pos = cum_pos[-1]
    idx = np.arange(1, n)  # split point: left = [0, i), i = 1..n-1
    valid = xs[1:] != xs[:-1]
    if not valid.any():
        return None
    n_l = idx.astype(float)
    n_r = n - n_l
    pos_l = cum_pos[:-1].astype(float)
    pos_r = total_pos - pos_l
    gini_l = 1.0 - (pos_l / n_l) ** 2 - ((n_l - pos_l) / n_l) ** 2
    gini_r = 1.0 - (pos_r / n_r) ** 2 - ((n_r - pos_r) / n_r) ** 2
    weighted = (n_l * gini_l + n_r * gini_r) / n
    weighted[~valid] = np.inf
    best = int(np.argmin(weighted))  # first minimum = smallest threshold
    return float(weighted[best]), float((xs[best] + xs[best + 1]) / 2.0)


class DecisionTree:
    """CART with gini impurity; split ties prefer the lower feature index."""

    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.root: dict | None = None

    def fit(self, X, y) -> "DecisionTree":
        X, y = _check_training(X, y)
        self.root = self._build(X, y, depth=0)
        return self

    def _leaf(self, y: np.ndarray) -> dict:
        p1 = float(np.mean(y)) if len(y) else 0.0
        return {"proba": [1.0 - p1, p1]}

    def _build(self, X: np.ndarray, y: np.ndarray, depth: int) -> dict:
        n = len(y)
        pure = len(np.unique(y)) == 1
        if pure or n < self.min_samples_split or (self.max_depth is not None and depth >= self.max_depth):
            return self._leaf(y)
        parent_gini = 1.0 - np.mean(y) ** 2 - (1.0 - np.mean(y)) ** 2
        best = None  # (gini, feature, threshold)
        for j in range(X.shape[1]):
            scan = _gini_scan(X[:, j], y)
            if scan is None:
                continue
            gini, threshold = scan
            if best is None or gini < best[0]:
                best = (gini, j, threshold)
        if best is None or best[0] >= parent_gini:
            return self._leaf(y)
        _, feature, threshold = best
        mask = X[:, feature] <= threshold
        return {
            "feature": feature,
            "threshold": threshold,
            "left": self._build(X[mask], y[mask], depth + 1),
            "right": self._build(X[~mask], y[~mask], depth + 1),
        }

    def _route(self, node: dict, row: np.ndarray) -> list[float]:
        while "proba" not in node:
            node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
        return node["proba"]

    def predict_proba(self, X) -> np.ndarray:
        X = _check_matrix(X)
        return np.array([self._route(self.root, row) for row in X])

    def predict(self, X) -> np.ndarray:
        return _labels_from_proba(self.predict_proba(X))

    def depth(self) -> int:
        def walk(node: dict) -> int:
            if "proba" in node:
                return 0
            return 1 + max(walk(node["left"]), walk(node["right"]))

        return walk(self.root) if self.root else 0

    def to_params(self) -> dict:
        return {"tree": self.root}

    @classmethod
    def from_params(cls, hyperparams: dict, params: dict, seed: int = 0) -> "DecisionTree":
        model = cls(**hyperparams)
        model.root = params["tree"]
        return model


# -- k nearest neighbors ---------------------------------------------------

class KNearestNeighbors:
    """Euclidean kNN with stable neighbor ordering (vote = probability)."""

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError(f"k must be ≥ 1, got {k}")
        self.k = k
        self.X: np.ndarray | None = None
        self.y: np.ndarray | None = None

    def fit(self, X, y) -> "KNearestNeighbors":
        self.X, self.y = _check_training(X, y)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = _check_matrix(X)
        k = min(self.k, len(self.X))
        out = np.empty((len(X), 2))
        for i, row in enumerate(X):
            dist = np.sqrt(((self.X - row) ** 2).sum(axis=1))
            neighbors = np.argsort(dist, kind="stable")[:k]
            p1 = float(self.y[neighbors].mean())
            out[i] = (1.0 - p1, p1)
        return out

    def predict(self, X) -> np.ndarray:
        return _labels_from_proba(self.predict_proba(X))

    def to_params(self) -> dict:
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_params(cls, hyperparams: dict, params: dict, seed: int = 0) -> "KNearestNeighbors":
        model = cls(**hyperparams)
        model.X = np.asarray(params["X"], dtype=float)
        model.y = np.asarray(params["y"], dtype=int)
        return model


# -- gaussian naive bayes --------------------------------------------------

class GaussianNaiveBayes:
    """Per-class diagonal Gaussians; tolerates single-class training sets."""

    VAR_EPS = 1e-9

    def __init__(self):
        self.classes: np.ndarray | None = None
        self.priors: np.ndarray | None = None
        self.theta: np.ndarray | None = None
        self.var: np.ndarray | None = None

    def fit(self, X, y) -> "GaussianNaiveBayes":
        X, y = _check_training(X, y, allow_single_class=True)
        self.classes = np.unique(y)
        self.priors = np.array([(y == c).mean() for c in self.classes])
        self.theta = np.array([X[y == c].mean(axis=0) for c in self.classes])
        raw_var = np.array([X[y == c].var(axis=0) for c in self.classes])
        # smoothing keeps zero-variance features from collapsing the density
        self.var = raw_var + self.VAR_EPS * max(float(X.var(axis=0).max()), 1.0)
        return self

    def _joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        jll = np.empty((len(X), len(self.classes)))
        for i, _ in enumerate(self.classes):
            log_det = np.sum(np.log(2.0 * np.pi * self.var[i]))
            sq = ((X - self.theta[i]) ** 2 / self.var[i]).sum(axis=1)
            jll[:, i] = np.log(self.priors[i]) - 0.5 * (log_det + sq)
        return jll

    def predict_proba(self, X) -> np.ndarray:
        X = _check_matrix(X)
        jll = self._joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        probs = np.exp(jll)
        probs /= probs.sum(axis=1, keepdims=True)
        out = np.zeros((len(X), 2))
        for i, c in enumerate(self.classes):
            out[:, int(c)] = probs[:, i]
        return out

    def predict(self, X) -> np.ndarray:
        return _labels_from_proba(self.predict_proba(X))

    def to_params(self) -> dict:
        return {
            "classes": self.classes.tolist(),
            "priors": self.priors.tolist(),
            "theta": self.theta.tolist(),
            "var": self.var.tolist(),
        }

    @classmethod
    def from_params(cls, hyperparams: dict, params: dict, seed: int = 0) -> "GaussianNaiveBayes":
        model = cls(**hyperparams)
        model.classes = np.asarray(params["classes"], dtype=int)
        model.priors = np.asarray(params["priors"], dtype=float)
        model.theta = np.asarray(params["theta"], dtype=float)
        model.var = np.asarray(params["var"], dtype=float)
        return model


# -- logistic regression ---------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


class LogisticRegression:
    """Full-batch gradient descent on log loss; zero-initialized weights."""

    def __init__(self, lr: float = 0.1, epochs: int = 500):
        self.lr = lr
        self.epochs = epochs
        self.weights: np.ndarray | None = None
        self.bias = 0.0

    def fit(self, X, y) -> "LogisticRegression":
        X, y = _check_training(X, y)
        n, f = X.shape
        self.weights = np.zeros(f)
        self.bias = 0.0
        for _ in range(self.epochs):
            err = _sigmoid(X @ self.weights + self.bias) - y
            self.weights -= self.lr * (X.T @ err) / n
            self.bias -= self.lr * float(err.mean())
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = _check_matrix(X)
        p1 = _sigmoid(X @ self.weights + self.bias)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return _labels_from_proba(self.predict_proba(X))

    def to_params(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_params(cls, hyperparams: dict, params: dict, seed: int = 0) -> "LogisticRegression":
        model = cls(**hyperparams)
        model.weights = np.asarray(params["weights"], dtype=float)
        model.bias = float(params["bias"])
        return model


# -- multilayer perceptron -------------------------------------------------

class MultilayerPerceptron:
    """One sigmoid hidden layer trained by full-batch backpropagation."""

    def __init__(self, hidden: int = 16, lr: float = 0.5, epochs: int = 500, seed: int = 0):
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.W1 = self.b1 = self.W2 = None
        self.b2 = 0.0

    def _init_weights(self, n_features: int) -> None:
        rng = np.random.default_rng(self.seed)
        self.W1 = rng.normal(0.0, 1.0 / np.sqrt(n_features), size=(n_features, self.hidden))
        self.b1 = np.zeros(self.hidden)
        self.W2 = rng.normal(0.0, 1.0 / np.sqrt(self.hidden), size=self.hidden)
        self.b2 = 0.0

    def _forward(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = _sigmoid(X @ self.W1 + self.b1)
        return h, _sigmoid(h @ self.W2 + self.b2)

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        _, p = self._forward(X)
        p = np.clip(p, 1e-12, 1.0 - 1e-12)
        return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))

    def gradients(self, X: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
        """Backprop gradients of the mean log loss w.r.t. every parameter."""
        n = len(X)
        h, p = self._forward(X)
        dz2 = (p - y) / n
        dW2 = h.T @ dz2
        db2 = float(dz2.sum())
        dh = np.outer(dz2, self.W2)
        dz1 = dh * h * (1.0 - h)
        dW1 = X.T @ dz1
        db1 = dz1.sum(axis=0)
        return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}

    def fit(self, X, y) -> "MultilayerPerceptron":
        X, y = _check_training(X, y)
        self._init_weights(X.shape[1])
        for _ in range(self.epochs):
            g = self.gradients(X, y)
            self.W1 -= self.lr * g["W1"]
            self.b1 -= self.lr * g["b1"]
            self.W2 -= self.lr * g["W2"]
            self.b2 -= self.lr * g["b2"]
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = _check_matrix(X)
        _, p1 = self._forward(X)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return _labels_from_proba(self.predict_proba(X))

    def to_params(self) -> dict:
        return {
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2,
        }

    @classmethod
    def from_params(cls, hyperparams: dict, params: dict, seed: int = 0) -> "MultilayerPerceptron":
        model = cls(seed=seed, **hyperparams)
        model.W1 = np.asarray(params["W1"], dtype=float)
        model.b1 = np.asarray(params["b1"], dtype=float)
        model.W2 = np.asarray(params["W2"], dtype=float)
        model.b2 = float(params["b2"])
        return model


MODEL_CLASSES = {
    "decision_tree": DecisionTree,
    "knn": KNearestNeighbors,
    "gaussian_nb": GaussianNaiveBayes,
    "logistic_regression": LogisticRegression,
    "mlp": MultilayerPerceptron,
}

# hyperparameter names accepted per kind (seed is handled separately)
VALID_HYPERPARAMS = {
    "decision_tree": {"max_depth", "min_samples_split"},
    "knn": {"k"},
    "gaussian_nb": set(),
    "logistic_regression": {"lr", "epochs"},
    "mlp": {"hidden", "lr", "epochs"},
}
