from dataclasses import dataclass, fields, replace

from ..errors import InvalidParams


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters for every learner; each learner reads its own subset."""

    # gradient-trained models (MLP, SVM)
    learning_rate: float = 0.01
    epochs: int = 60
    batch_size: int = 64
    l2: float = 1e-4
    momentum: float = 0.9
    patience: int = 10  # epochs without validation improvement; 0 disables
    validation_fraction: float = 0.1
    clip_norm: float = 0.0  # global gradient-norm cap; 0 disables
    hidden_layers: tuple = (128, 128)
    seed: int = 0
    # random forest
    trees_count: int = 100
    max_depth: int = 20
    min_samples_leaf: int = 1
    features_per_split: int = 0  # 0 means ceil(sqrt(features))

    def __post_init__(self):
        positive = ("learning_rate", "epochs", "batch_size", "trees_count", "max_depth", "min_samples_leaf")
        for name in positive:
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be positive")
        if min(self.l2, self.patience, self.features_per_split, self.clip_norm) < 0:
            raise InvalidParams("l2, patience, features_per_split and clip_norm must be non-negative")
        if not 0 <= self.momentum < 1 or not 0 <= self.validation_fraction < 1:
            raise InvalidParams("momentum and validation_fraction must lie in [0, 1)")
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["hidden_layers"] = list(self.hidden_layers)
        return d


REGRESSOR_LAYERS = (400, 400, 400)
# the delay regressor underfits at the classifier learning rate
REGRESSOR_CONFIG = TrainConfig(learning_rate=0.1, epochs=100, clip_norm=1.0)
