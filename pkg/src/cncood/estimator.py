"""sklearn-style estimators: OOD sample generator and (K+1) classifier.

These wrap the functional pipeline so the method composes with the wider
ecosystem (get_params/set_params, clone, Pipeline).  Labels are 1-based
class indices 1..K; the reject class is K+1.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .datasets import Point2Dataset
from .metrics import classify_id_batch
from .mlp import TrainConfig, forward, init_model, train
from .pipeline import GenConfig, cnc_datagen_2d
from .rng import RngStream
from .validation import check_labels, check_points

_VANILLA = (None, "vanilla")


class CnCGenerator(BaseEstimator):
    """Synthetic-OOD point generator with a fit/sample interface.

    fit(X, y) captures the ID point cloud; sample(n) emits n synthetic
    OOD points labeled K+1 under the configured variant.
    """

    def __init__(
        self,
        variant="cnc",
        lambda_range=(0.0, 1.0),
        op_pool=(),
        severity_pool=(1, 2, 3, 4, 5),
        ood_ratio=1.0,
        seed=0,
    ):
        self.variant = variant
        self.lambda_range = lambda_range
        self.op_pool = op_pool
        self.severity_pool = severity_pool
        self.ood_ratio = ood_ratio
        self.seed = seed

    def _config(self, ood_ratio=None):
        return GenConfig(
            variant=self.variant,
            lambda_range=tuple(self.lambda_range),
            op_pool=tuple(self.op_pool),
            severity_pool=tuple(self.severity_pool),
            ood_ratio=self.ood_ratio if ood_ratio is None else ood_ratio,
            seed=self.seed,
        )

    def fit(self, X, y):
        X = check_points(X)
        if X.shape[1] != 2:
            raise ValueError("CnCGenerator works on 2-D point clouds")
        y = check_labels(y, X.shape[0])
        self._config()  # validate parameters eagerly
        self.dataset_ = Point2Dataset(X, y)
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        return self

    def sample(self, n=None, seed=None):
        """n synthetic OOD points (default: ood_ratio * fitted size)."""
        if not hasattr(self, "dataset_"):
            raise RuntimeError("CnCGenerator must be fitted before sampling")
        ratio = None if n is None else n / len(self.dataset_)
        cfg = self._config(ood_ratio=ratio)
        rng = RngStream(self.seed if seed is None else seed)
        gen = cnc_datagen_2d(self.dataset_, cfg, rng)
        return gen.points, gen.labels

    def fit_resample(self, X, y):
        """Augmented (X, y): the ID set plus generated K+1 samples."""
        self.fit(X, y)
        ood_x, ood_y = self.sample()
        return np.vstack([self.dataset_.points, ood_x]), np.concatenate(
            [self.dataset_.labels, ood_y]
        )


class OodMlpClassifier(BaseEstimator, ClassifierMixin):
    """(K+1)-class ReLU MLP trained with on-the-fly synthetic OOD batches.

    variant=None (or "vanilla") trains a plain K-class classifier with no
    augmentation.  predict() returns labels in 1..K+1; ood_score() gives
    the reject-class probability used by the detector.
    """

    def __init__(
        self,
        hidden_layers=(32, 32),
        variant="cnc",
        lambda_range=(0.0, 1.0),
        op_pool=(),
        severity_pool=(1, 2, 3, 4, 5),
        ood_ratio=1.0,
        alpha=1.0,
        lr=0.05,
        momentum=0.9,
        epochs=2000,
        batch_size=64,
        weight_decay=0.0,
        seed=0,
    ):
        self.hidden_layers = hidden_layers
        self.variant = variant
        self.lambda_range = lambda_range
        self.op_pool = op_pool
        self.severity_pool = severity_pool
        self.ood_ratio = ood_ratio
        self.alpha = alpha
        self.lr = lr
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.seed = seed

    def fit(self, X, y):
        X = check_points(X)
        y = check_labels(y, X.shape[0])
        k = int(y.max())
        vanilla = self.variant in _VANILLA
        gen_cfg = None
        if not vanilla:
            gen_cfg = GenConfig(
                variant=self.variant,
                lambda_range=tuple(self.lambda_range),
                op_pool=tuple(self.op_pool),
                severity_pool=tuple(self.severity_pool),
                ood_ratio=self.ood_ratio,
                seed=self.seed,
            )
        train_cfg = TrainConfig(
            alpha=self.alpha,
            lr=self.lr,
            momentum=self.momentum,
            epochs=self.epochs,
            batch_size=self.batch_size,
            weight_decay=self.weight_decay,
            seed=self.seed,
        )
        dims = (X.shape[1], *tuple(self.hidden_layers), k if vanilla else k + 1)
        model = init_model(dims, RngStream(self.seed).child(0))
        if X.shape[1] == 2:
            data = Point2Dataset(X, y)
        else:
            raise ValueError(
                "OodMlpClassifier.fit works on 2-D point clouds; train image "
                "models through cncood.mlp.train with a LabeledImageSet"
            )
        self.model_, self.loss_history_ = train(model, data, gen_cfg, train_cfg)
        self.classes_ = np.arange(1, self.model_.class_count + 1)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator must be fitted first")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        _, probs, _ = forward(self.model_, check_points(X))
        return probs

    def decision_logits(self, X) -> np.ndarray:
        self._check_fitted()
        logits, _, _ = forward(self.model_, check_points(X))
        return logits

    def predict(self, X) -> np.ndarray:
        """Argmax over all classes including the reject class."""
        return np.argmax(self.predict_proba(X), axis=1) + 1

    def predict_id(self, X) -> np.ndarray:
        """Argmax over the first K classes only (the ID labeling rule)."""
        return classify_id_batch(self.predict_proba(X))

    def ood_score(self, X) -> np.ndarray:
        """Reject-class probability; higher means more OOD."""
        probs = self.predict_proba(X)
        if probs.shape[1] < 2 or self.variant in _VANILLA:
            raise RuntimeError("ood_score needs a (K+1)-class model")
        return probs[:, -1]
