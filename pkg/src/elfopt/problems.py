"""Desk-scale stochastic problems with analytic batch gradients.

Every problem exposes the same oracle surface: finite train/validation batch
collections, a pure batch_loss(theta, batch), its analytic gradient, and a
seeded initial parameter vector. Datasets are generated, never downloaded, so
everything runs offline and the empirical-loss geometry stays checkable
against closed forms or brute force.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BatchStream:
    """Cyclic stream over a finite batch collection, reshuffled each epoch."""

    def __init__(self, batches, rng: np.random.Generator):
        if len(batches) == 0:
            raise ValueError("batch collection is empty")
        self._batches = list(batches)
        self._rng = rng
        self._order = rng.permutation(len(self._batches))
        self._cursor = 0

    def next_batch(self):
        if self._cursor >= len(self._order):
            self._order = self._rng.permutation(len(self._batches))
            self._cursor = 0
        batch = self._batches[self._order[self._cursor]]
        self._cursor += 1
        return batch


def empirical_loss(problem, theta: np.ndarray) -> float:
    """Mean batch loss over every training batch."""
    return float(
        np.mean([problem.batch_loss(theta, b) for b in problem.train_batches])
    )


@dataclass(frozen=True)
class CrossSectionProfile:
    """Dense per-batch loss curves along one line, plus their mean and
    quartiles across batches at each step size."""

    s_grid: np.ndarray
    per_batch: np.ndarray      # shape (n_batches, len(s_grid))
    mean: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray


def cross_section_profile(problem, theta0, direction, s_grid) -> CrossSectionProfile:
    """Evaluate every training batch's loss at every step size on the line
    theta0 + s * direction."""
    s_grid = np.asarray(s_grid, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    direction = np.asarray(direction, dtype=float)
    batches = list(problem.train_batches)
    per_batch = np.empty((len(batches), s_grid.size))
    for i, batch in enumerate(batches):
        for j, s in enumerate(s_grid):
            per_batch[i, j] = problem.batch_loss(theta0 + s * direction, batch)
    return CrossSectionProfile(
        s_grid=s_grid,
        per_batch=per_batch,
        mean=per_batch.mean(axis=0),
        q1=np.quantile(per_batch, 0.25, axis=0),
        q2=np.quantile(per_batch, 0.50, axis=0),
        q3=np.quantile(per_batch, 0.75, axis=0),
    )


class NoisyQuadraticEnsemble:
    """Per-batch quadratics 0.5*(theta-b)' A (theta-b) + c with SPD A.

    The empirical loss is the exact average quadratic, so its minimizer and
    any line restriction have closed forms.
    """

    def __init__(
        self,
        n_batches: int = 100,
        dim: int = 20,
        rng: np.random.Generator | None = None,
        eig_range: tuple[float, float] = (0.5, 1.5),
        center_spread: float = 0.15,
        offset_range: tuple[float, float] = (0.0, 0.1),
        validation_fraction: float = 0.2,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dim = dim
        self.matrices = np.empty((n_batches, dim, dim))
        for i in range(n_batches):
            q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
            eigs = rng.uniform(*eig_range, size=dim)
            self.matrices[i] = q @ np.diag(eigs) @ q.T
        self.centers = rng.normal(scale=center_spread, size=(n_batches, dim))
        self.offsets = rng.uniform(*offset_range, size=n_batches)

        n_val = max(1, int(round(validation_fraction * n_batches))) if n_batches > 1 else 1
        indices = list(range(n_batches))
        self.train_batches = indices[: n_batches - n_val] if n_batches > 1 else indices
        self.validation_batches = indices[n_batches - n_val:] if n_batches > 1 else indices

    def batch_loss(self, theta, batch: int) -> float:
        d = np.asarray(theta, dtype=float) - self.centers[batch]
        return float(0.5 * d @ self.matrices[batch] @ d + self.offsets[batch])

    def batch_gradient(self, theta, batch: int) -> np.ndarray:
        d = np.asarray(theta, dtype=float) - self.centers[batch]
        return self.matrices[batch] @ d

    def initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(scale=0.5, size=self.dim)

    # Closed-form geometry of the averaged training quadratic, used as the
    # independent oracle in tests and demos.
    def mean_quadratic(self) -> tuple[np.ndarray, np.ndarray, float]:
        idx = self.train_batches
        a_bar = self.matrices[idx].mean(axis=0)
        ab_bar = np.mean(
            [self.matrices[i] @ self.centers[i] for i in idx], axis=0
        )
        const = float(
            np.mean(
                [
                    0.5 * self.centers[i] @ self.matrices[i] @ self.centers[i]
                    + self.offsets[i]
                    for i in idx
                ]
            )
        )
        return a_bar, ab_bar, const

    def closed_form_minimizer(self) -> np.ndarray:
        a_bar, ab_bar, _ = self.mean_quadratic()
        return np.linalg.solve(a_bar, ab_bar)

    def closed_form_empirical(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        a_bar, ab_bar, const = self.mean_quadratic()
        return float(0.5 * theta @ a_bar @ theta - theta @ ab_bar + const)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _make_blobs(n, centers, cluster_std, rng):
    n_classes = centers.shape[0]
    labels = rng.integers(0, n_classes, size=n)
    x = centers[labels] + rng.normal(scale=cluster_std, size=(n, centers.shape[1]))
    return x, labels


def _split_batches(x, y, batch_size):
    n_full = x.shape[0] // batch_size
    return [
        (x[i * batch_size:(i + 1) * batch_size], y[i * batch_size:(i + 1) * batch_size])
        for i in range(n_full)
    ]


class LogisticBlobs:
    """Binary logistic regression on two seeded Gaussian clusters.

    theta packs [weights..., bias]; the loss is the mean cross entropy of the
    batch under a sigmoid model.
    """

    def __init__(
        self,
        n_train: int = 2000,
        n_val: int = 500,
        n_features: int = 2,
        separation: float = 5.0,
        cluster_std: float = 0.7,
        batch_size: int = 50,
        rng: np.random.Generator | None = None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dim = n_features + 1
        offset = 0.5 * separation / np.sqrt(n_features)
        centers = np.vstack([np.full(n_features, -offset), np.full(n_features, offset)])
        x, y = _make_blobs(n_train + n_val, centers, cluster_std, rng)
        self.train_batches = _split_batches(x[:n_train], y[:n_train], batch_size)
        self.validation_batches = _split_batches(x[n_train:], y[n_train:], batch_size)

    def _logits(self, theta, x):
        theta = np.asarray(theta, dtype=float)
        return x @ theta[:-1] + theta[-1]

    def batch_loss(self, theta, batch) -> float:
        x, y = batch
        z = self._logits(theta, x)
        # log(1 + e^z) - y*z, computed stably
        return float(np.mean(np.logaddexp(0.0, z) - y * z))

    def batch_gradient(self, theta, batch) -> np.ndarray:
        x, y = batch
        residual = _sigmoid(self._logits(theta, x)) - y
        grad = np.empty(self.dim)
        grad[:-1] = x.T @ residual / x.shape[0]
        grad[-1] = residual.mean()
        return grad

    def initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        return 0.01 * rng.normal(size=self.dim)

    def batch_accuracy(self, theta, batch) -> float:
        x, y = batch
        return float(np.mean((self._logits(theta, x) > 0.0) == (y == 1)))

    def training_accuracy(self, theta) -> float:
        return float(np.mean([self.batch_accuracy(theta, b) for b in self.train_batches]))


class MlpBlobs:
    """Two-hidden-layer tanh network with softmax cross entropy on seeded
    Gaussian blobs; gradients come from analytic backprop."""

    def __init__(
        self,
        n_train: int = 2000,
        n_val: int = 500,
        n_features: int = 2,
        n_classes: int = 3,
        hidden1: int = 16,
        hidden2: int = 16,
        separation: float = 4.0,
        cluster_std: float = 0.7,
        batch_size: int = 50,
        rng: np.random.Generator | None = None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
        centers = np.zeros((n_classes, n_features))
        centers[:, 0] = 0.5 * separation * np.cos(angles)
        centers[:, 1 % n_features] = 0.5 * separation * np.sin(angles)
        x, y = _make_blobs(n_train + n_val, centers, cluster_std, rng)
        self.train_batches = _split_batches(x[:n_train], y[:n_train], batch_size)
        self.validation_batches = _split_batches(x[n_train:], y[n_train:], batch_size)

        self.n_classes = n_classes
        self._shapes = [
            (n_features, hidden1), (hidden1,),
            (hidden1, hidden2), (hidden2,),
            (hidden2, n_classes), (n_classes,),
        ]
        self.dim = sum(int(np.prod(s)) for s in self._shapes)

    def _unpack(self, theta):
        theta = np.asarray(theta, dtype=float)
        params = []
        offset = 0
        for shape in self._shapes:
            size = int(np.prod(shape))
            params.append(theta[offset:offset + size].reshape(shape))
            offset += size
        return params

    def initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        chunks = []
        for shape in self._shapes:
            if len(shape) == 2:
                chunks.append(rng.normal(scale=1.0 / np.sqrt(shape[0]), size=shape).ravel())
            else:
                chunks.append(np.zeros(shape))
        return np.concatenate(chunks)

    def _forward(self, theta, x):
        w1, b1, w2, b2, w3, b3 = self._unpack(theta)
        h1 = np.tanh(x @ w1 + b1)
        h2 = np.tanh(h1 @ w2 + b2)
        logits = h2 @ w3 + b3
        logits = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(logits).sum(axis=1, keepdims=True))
        return h1, h2, logits, log_norm

    def batch_loss(self, theta, batch) -> float:
        x, y = batch
        _, _, logits, log_norm = self._forward(theta, x)
        return float(np.mean(log_norm[:, 0] - logits[np.arange(x.shape[0]), y]))

    def batch_gradient(self, theta, batch) -> np.ndarray:
        x, y = batch
        w1, b1, w2, b2, w3, b3 = self._unpack(theta)
        h1, h2, logits, log_norm = self._forward(theta, x)
        m = x.shape[0]
        probs = np.exp(logits - log_norm)
        probs[np.arange(m), y] -= 1.0
        probs /= m
        dw3 = h2.T @ probs
        db3 = probs.sum(axis=0)
        dh2 = (probs @ w3.T) * (1.0 - h2**2)
        dw2 = h1.T @ dh2
        db2 = dh2.sum(axis=0)
        dh1 = (dh2 @ w2.T) * (1.0 - h1**2)
        dw1 = x.T @ dh1
        db1 = dh1.sum(axis=0)
        return np.concatenate([g.ravel() for g in (dw1, db1, dw2, db2, dw3, db3)])

    def batch_accuracy(self, theta, batch) -> float:
        x, y = batch
        _, _, logits, _ = self._forward(theta, x)
        return float(np.mean(logits.argmax(axis=1) == y))

    def training_accuracy(self, theta) -> float:
        return float(np.mean([self.batch_accuracy(theta, b) for b in self.train_batches]))
