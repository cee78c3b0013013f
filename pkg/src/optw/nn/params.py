"""Parameter storage, initialisation, Adam, and checkpoint files."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .autodiff import ShapeError, Tensor

CHECKPOINT_VERSION = 1


@dataclass
class AdamConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_factor: float = 0.96
    decay_every: int = 5000
    lr_floor: float = 1e-5

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")

    def lr_at(self, step: int) -> float:
        """Staircase schedule: decays once every ``decay_every`` completed steps."""
        lr = self.lr * self.decay_factor ** (step // self.decay_every)
        return max(lr, min(self.lr_floor, self.lr))

    @classmethod
    def fixed(cls, lr: float) -> "AdamConfig":
        return cls(lr=lr, decay_factor=1.0, lr_floor=lr)


@dataclass
class ParameterStore:
    """Named parameters with their Adam moment estimates."""

    params: dict[str, Tensor] = field(default_factory=dict)
    adam_m: dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(value, requires_grad=True, name=name)
        self.params[name] = t
        self.adam_m[name] = np.zeros_like(t.data)
        self.adam_v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def items(self):
        return self.params.items()

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def grads(self) -> dict[str, np.ndarray]:
        return {k: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for k, t in self.params.items()}

    def copy(self) -> "ParameterStore":
        out = ParameterStore(step_count=self.step_count)
        for k, t in self.params.items():
            out.add(k, t.data.copy())
            out.adam_m[k] = self.adam_m[k].copy()
            out.adam_v[k] = self.adam_v[k].copy()
        return out

    def astype(self, dtype) -> "ParameterStore":
        out = ParameterStore(step_count=self.step_count)
        for k, t in self.params.items():
            out.add(k, t.data.astype(dtype))
            out.adam_m[k] = self.adam_m[k].astype(dtype)
            out.adam_v[k] = self.adam_v[k].astype(dtype)
        return out

    def values(self) -> dict[str, np.ndarray]:
        return {k: t.data for k, t in self.params.items()}

    def assert_finite(self) -> None:
        for k, t in self.params.items():
            if not np.all(np.isfinite(t.data)):
                raise FloatingPointError(f"non-finite values in parameter {k!r}")


def xavier_uniform(shape: tuple[int, ...], rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Glorot/Xavier uniform draw; 1-d shapes are biases and start at zero."""
    shape = tuple(shape)
    if len(shape) < 2:
        return np.zeros(shape, dtype=dtype)
    receptive = int(np.prod(shape[:-2])) if len(shape) > 2 else 1
    fan_in, fan_out = shape[-2] * receptive, shape[-1] * receptive
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def adam_step(store: ParameterStore, grads: dict[str, np.ndarray], cfg: AdamConfig) -> float:
    """One bias-corrected Adam descent step. Returns the learning rate used."""
    lr = cfg.lr_at(store.step_count)
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - cfg.beta1 ** t
    c2 = 1.0 - cfg.beta2 ** t
    for name, p in store.params.items():
        g = grads[name]
        if g.shape != p.data.shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, expected {p.data.shape}")
        m = store.adam_m[name]
        v = store.adam_v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p.data -= (lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)).astype(p.data.dtype)
    return lr


def save_checkpoint(path: str | Path, store: ParameterStore, meta: dict | None = None,
                    adam: AdamConfig | None = None) -> Path:
    """Write parameters and Adam state as little-endian arrays in an ``.npz``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "version": CHECKPOINT_VERSION,
        "step_count": store.step_count,
        "adam": asdict(adam) if adam is not None else None,
        "names": list(store.params),
        "meta": meta or {},
    }
    arrays = {"__header__": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
    for name, t in store.params.items():
        le = t.data.dtype.newbyteorder("<")
        arrays[f"p/{name}"] = t.data.astype(le)
        arrays[f"m/{name}"] = store.adam_m[name].astype(le)
        arrays[f"v/{name}"] = store.adam_v[name].astype(le)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path: str | Path) -> tuple[ParameterStore, dict, AdamConfig | None]:
    with np.load(Path(path), allow_pickle=False) as z:
        header = json.loads(bytes(z["__header__"]).decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        store = ParameterStore(step_count=int(header["step_count"]))
        for name in header["names"]:
            store.add(name, z[f"p/{name}"].copy())
            store.adam_m[name] = z[f"m/{name}"].copy()
            store.adam_v[name] = z[f"v/{name}"].copy()
    adam = AdamConfig(**header["adam"]) if header.get("adam") else None
    return store, header["meta"], adam
