"""Training loop, configuration, prediction helpers, and model checkpoints."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import EMOTION_ORDER, AnnotatedSentence, Corpus, EmotionLabel
from .features import DEFAULT_FEATURE_DIM, DEFAULT_SALT, HashedNgramFeaturizer
from .metrics import corpus_token_f1, macro_f1
from .model import (
    LinearModel,
    LoraAdapter,
    forward,
    loss_and_grads,
    numeric_from_logits,
    predict_binary,
)
from .optim import AdamWState, adamw_step

ALLOWED_LEARNING_RATES = (2e-6, 2e-5, 5e-5, 2e-4)
TASKS = ("emotion", "trigger")
SCHEDULES = ("constant", "linear")
CHECKPOINT_VERSION = 1


class TrainConfigError(ValueError):
    pass


@dataclass
class LoraConfig:
    rank: int = 64
    alpha: float = 16.0


@dataclass
class TrainConfig:
    lr: float = 2e-4
    batch_size: int = 16
    epochs: int = 10
    lora: LoraConfig | None = None
    seed: int = 0
    schedule: str = "constant"
    weight_decay: float = 0.0
    feature_dim: int = DEFAULT_FEATURE_DIM
    feature_salt: str = DEFAULT_SALT

    def validate(self) -> None:
        if self.lr not in ALLOWED_LEARNING_RATES:
            raise TrainConfigError(
                f"learning rate {self.lr} not in allowed set {ALLOWED_LEARNING_RATES}"
            )
        if self.batch_size < 1:
            raise TrainConfigError("batch_size must be >= 1")
        max_epochs = 5 if self.lora is not None else 30
        if not 1 <= self.epochs <= max_epochs:
            raise TrainConfigError(
                f"epochs must be in [1, {max_epochs}]"
                f"{' with an adapter' if self.lora else ''}, got {self.epochs}"
            )
        if self.schedule not in SCHEDULES:
            raise TrainConfigError(f"schedule must be one of {SCHEDULES}")
        if self.lora is not None and self.lora.rank < 1:
            raise TrainConfigError("lora rank must be >= 1")
        if self.feature_dim < 2:
            raise TrainConfigError("feature_dim must be >= 2")


@dataclass
class TrainedModel:
    featurizer: HashedNgramFeaturizer
    model: LinearModel
    adapter: LoraAdapter | None
    task: str
    config: TrainConfig
    history: list[dict] = field(default_factory=list)

    def _word_logits(self, sentence: AnnotatedSentence) -> list[np.ndarray]:
        vectors = self.featurizer.token_features(sentence.tokens)
        return [forward(self.model, self.adapter, x) for x in vectors]

    def predict_emotion(self, sentence: AnnotatedSentence) -> EmotionLabel:
        x = self.featurizer.sentence_features(sentence.tokens)
        logits = forward(self.model, self.adapter, x)
        return EMOTION_ORDER[int(np.argmax(logits))]

    def predict_mask(self, sentence: AnnotatedSentence) -> list[int]:
        return predict_binary(self._word_logits(sentence))

    def predict_numeric(self, sentence: AnnotatedSentence) -> list[float]:
        return numeric_from_logits(self._word_logits(sentence)).values


def _emotion_instances(featurizer, corpus: Corpus):
    label_index = {label: i for i, label in enumerate(EMOTION_ORDER)}
    missing = [s.id for s in corpus.sentences if s.emotion is None]
    if missing:
        raise ValueError(f"sentences missing emotion label: {missing[:5]}")
    return [
        (featurizer.sentence_features(s.tokens), label_index[s.emotion])
        for s in corpus.sentences
    ]


def _trigger_instances(featurizer, corpus: Corpus):
    missing = [s.id for s in corpus.sentences if s.trigger_mask is None]
    if missing:
        raise ValueError(f"sentences missing trigger mask: {missing[:5]}")
    instances = []
    for sent in corpus.sentences:
        for x, label in zip(featurizer.token_features(sent.tokens), sent.trigger_mask):
            instances.append((x, label))
    return instances


def _validation_score(trained: TrainedModel, validation: Corpus) -> float:
    if trained.task == "emotion":
        gold = [s.emotion for s in validation.sentences]
        pred = [trained.predict_emotion(s) for s in validation.sentences]
        return macro_f1(gold, pred)
    pairs = [(s.trigger_mask, trained.predict_mask(s)) for s in validation.sentences]
    return corpus_token_f1(pairs)


def train(
    corpus: Corpus,
    task: str,
    config: TrainConfig,
    validation: Corpus | None = None,
    init_model: LinearModel | None = None,
) -> TrainedModel:
    """Train a head for one task; deterministic for a fixed seed.

    With a validation corpus the returned parameters are the best epoch's
    (ties go to the earlier epoch); otherwise the final epoch's. With an
    adapter configured the base weights stay frozen and only A, B, and the
    bias train.
    """
    if task not in TASKS:
        raise TrainConfigError(f"task must be one of {TASKS}")
    config.validate()
    if not corpus.sentences:
        raise ValueError("training corpus is empty")

    featurizer = HashedNgramFeaturizer(dim=config.feature_dim, salt=config.feature_salt)
    num_classes = len(EMOTION_ORDER) if task == "emotion" else 2
    rng = np.random.default_rng(config.seed)

    if init_model is not None:
        if init_model.W0.shape != (num_classes, config.feature_dim):
            raise TrainConfigError(
                f"init model shape {init_model.W0.shape} does not match "
                f"({num_classes}, {config.feature_dim})"
            )
        model = LinearModel(W0=init_model.W0.copy(), b=init_model.b.copy())
    else:
        model = LinearModel.zeros(num_classes, config.feature_dim)
    adapter = None
    if config.lora is not None:
        adapter = LoraAdapter.init(
            num_classes, config.feature_dim, rank=config.lora.rank,
            alpha=config.lora.alpha, rng=rng,
        )

    instances = (
        _emotion_instances(featurizer, corpus)
        if task == "emotion"
        else _trigger_instances(featurizer, corpus)
    )

    def current_params():
        if adapter is not None:
            return {"A": adapter.A, "B": adapter.B, "b": model.b}
        return {"W0": model.W0, "b": model.b}

    def apply_params(params):
        model.b = params["b"]
        if adapter is not None:
            adapter.A = params["A"]
            adapter.B = params["B"]
        else:
            model.W0 = params["W0"]

    state = AdamWState.init(current_params())
    trained = TrainedModel(
        featurizer=featurizer, model=model, adapter=adapter, task=task, config=config
    )

    steps_per_epoch = (len(instances) + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    best_score = -1.0
    best_params: dict[str, np.ndarray] | None = None
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(instances))
        epoch_loss = 0.0
        for start in range(0, len(instances), config.batch_size):
            batch = [instances[i] for i in order[start:start + config.batch_size]]
            loss, grads = loss_and_grads(model, adapter, batch)
            epoch_loss += loss * len(batch)
            lr = config.lr
            if config.schedule == "linear":
                lr = config.lr * (1.0 - step / total_steps)
            params, state = adamw_step(state, current_params(), grads, lr, config.weight_decay)
            apply_params(params)
            step += 1
        record = {"epoch": epoch, "train_loss": epoch_loss / len(instances)}
        if validation is not None:
            score = _validation_score(trained, validation)
            record["validation_score"] = score
            if score > best_score:
                best_score = score
                best_params = {k: p.copy() for k, p in current_params().items()}
        trained.history.append(record)

    if best_params is not None:
        apply_params(best_params)
    return trained


def save_model(trained: TrainedModel, path: str | Path) -> None:
    """Checkpoint to .npz: weight arrays plus a JSON metadata blob (see README)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": CHECKPOINT_VERSION,
        "task": trained.task,
        "classes": (
            [label.value for label in EMOTION_ORDER] if trained.task == "emotion" else [0, 1]
        ),
        "feature": {
            "dim": trained.featurizer.dim,
            "ngram_min": trained.featurizer.ngram_min,
            "ngram_max": trained.featurizer.ngram_max,
            "window": trained.featurizer.window,
            "salt": trained.featurizer.salt,
        },
        "lora": (
            {"rank": trained.adapter.rank, "alpha": trained.adapter.alpha}
            if trained.adapter is not None
            else None
        ),
        "config": asdict(trained.config),
        "history": trained.history,
    }
    arrays = {"W0": trained.model.W0, "b": trained.model.b}
    if trained.adapter is not None:
        arrays["A"] = trained.adapter.A
        arrays["B"] = trained.adapter.B
    meta_bytes = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as handle:  # keeps the exact filename, no .npz appended
        np.savez(handle, meta=meta_bytes, **arrays)


def load_model(path: str | Path) -> TrainedModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
        model = LinearModel(W0=data["W0"].copy(), b=data["b"].copy())
        adapter = None
        if meta["lora"] is not None:
            adapter = LoraAdapter(
                A=data["A"].copy(),
                B=data["B"].copy(),
                rank=meta["lora"]["rank"],
                alpha=meta["lora"]["alpha"],
            )
    feature = meta["feature"]
    featurizer = HashedNgramFeaturizer(
        dim=feature["dim"],
        ngram_min=feature["ngram_min"],
        ngram_max=feature["ngram_max"],
        window=feature["window"],
        salt=feature["salt"],
    )
    cfg = dict(meta["config"])
    lora_cfg = cfg.pop("lora", None)
    config = TrainConfig(
        lora=LoraConfig(**lora_cfg) if lora_cfg is not None else None, **cfg
    )
    return TrainedModel(
        featurizer=featurizer,
        model=model,
        adapter=adapter,
        task=meta["task"],
        config=config,
        history=list(meta.get("history", [])),
    )
