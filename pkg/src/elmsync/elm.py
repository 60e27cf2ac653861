"""Extreme learning machine with a tanh hidden layer.

Input weights and biases are drawn once, uniformly on [-1, 1], and never
trained.  Output weights are the least-squares solution ``T H^+``: an SVD
pseudoinverse when the problem is small or underdetermined, otherwise the
normal equations with a small ridge, accumulated in chunks so that ``H`` is
never materialised for large training sets.

Matrix orientation follows the usual ELM algebra: ``H`` is (n_hidden, Nt),
targets ``T`` are (n_outputs, Nt), ``upsilon`` is (n_outputs, n_hidden).
Batched helpers take samples along the first axis.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import DomainError, FormatError, StateError, TrainingError

__all__ = [
    "ElmModel",
    "TrainingSet",
    "GramAccumulator",
    "init_elm",
    "hidden_output",
    "train_output_weights",
    "train",
    "infer",
    "estimate_sto",
    "save_model",
    "load_model",
]

DEFAULT_RIDGE = 1e-8
TANH = 1


@dataclass(frozen=True)
class ElmModel:
    W: np.ndarray
    b: np.ndarray
    upsilon: np.ndarray | None = None
    seed: int | None = None
    activation: str = "tanh"

    @property
    def n_hidden(self) -> int:
        return self.W.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.W.shape[1]

    @property
    def n_outputs(self) -> int | None:
        return None if self.upsilon is None else self.upsilon.shape[0]

    @property
    def trained(self) -> bool:
        return self.upsilon is not None


@dataclass
class TrainingSet:
    """Inputs and targets, one sample per row."""

    inputs: np.ndarray
    targets: np.ndarray
    theta: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if len(self.inputs) != len(self.targets):
            raise DomainError("inputs and targets differ in sample count")

    def __len__(self):
        return len(self.inputs)


def init_elm(n_hidden: int, n_inputs: int, seed=None) -> ElmModel:
    if n_hidden < 1:
        raise DomainError("n_hidden must be at least 1")
    rng = np.random.default_rng(seed)
    W = rng.uniform(-1.0, 1.0, size=(n_hidden, n_inputs))
    b = rng.uniform(-1.0, 1.0, size=n_hidden)
    return ElmModel(W, b, seed=seed if isinstance(seed, (int, np.integer)) else None)


def hidden_output(g_bar, model: ElmModel) -> np.ndarray:
    """``tanh(W g + b)``; a 2-D ``g_bar`` is treated as one sample per row."""
    g_bar = np.asarray(g_bar, dtype=float)
    if g_bar.shape[-1] != model.n_inputs:
        raise DomainError(f"input length {g_bar.shape[-1]} != model input size {model.n_inputs}")
    return np.tanh(g_bar @ model.W.T + model.b)


def train_output_weights(H, T_tilde) -> np.ndarray:
    """``T_tilde @ pinv(H)`` through an SVD pseudoinverse."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if not np.all(np.isfinite(H)):
        raise TrainingError("hidden-layer output contains non-finite entries")
    return np.asarray(T_tilde, dtype=float) @ np.linalg.pinv(H)


class GramAccumulator:
    """Running ``H H^T`` and ``T H^T`` sums over sample chunks."""

    def __init__(self, n_hidden: int, n_outputs: int):
        self.gram = np.zeros((n_hidden, n_hidden))
        self.cross = np.zeros((n_outputs, n_hidden))
        self.count = 0

    def add(self, H_rows, T_rows):
        if not np.all(np.isfinite(H_rows)):
            raise TrainingError("hidden-layer output contains non-finite entries")
        self.gram += H_rows.T @ H_rows
        self.cross += T_rows.T @ H_rows
        self.count += len(H_rows)

    def solve(self, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
        if self.count == 0:
            raise TrainingError("no samples accumulated")
        n = self.gram.shape[0]
        lam = ridge * np.trace(self.gram) / n
        A = self.gram + lam * np.eye(n)
        try:
            return scipy.linalg.solve(A, self.cross.T, assume_a="pos").T
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            return scipy.linalg.lstsq(A, self.cross.T)[0].T


def train(
    training_set: TrainingSet,
    model: ElmModel,
    *,
    ridge: float = DEFAULT_RIDGE,
    method: str = "auto",
    chunk_size: int = 4096,
) -> ElmModel:
    """Closed-form training; returns a new model carrying ``upsilon``.

    ``method`` is ``"pinv"`` (exact, SVD), ``"normal"`` (ridge-regularised
    normal equations) or ``"auto"``, which picks ``pinv`` whenever there are
    no more samples than hidden units.
    """
    if len(training_set) == 0:
        raise DomainError("empty training set")
    X, T = training_set.inputs, training_set.targets
    if method == "auto":
        method = "pinv" if len(X) <= model.n_hidden else "normal"
    if method == "pinv":
        upsilon = train_output_weights(hidden_output(X, model).T, T.T)
    elif method == "normal":
        acc = GramAccumulator(model.n_hidden, T.shape[1])
        for start in range(0, len(X), chunk_size):
            acc.add(hidden_output(X[start:start + chunk_size], model), T[start:start + chunk_size])
        upsilon = acc.solve(ridge)
    else:
        raise DomainError(f"unknown training method {method!r}")
    return replace(model, upsilon=upsilon)


def infer(g_bar, model: ElmModel) -> np.ndarray:
    """Refined metric ``O = upsilon tanh(W g + b)``."""
    if not model.trained:
        raise StateError("model has no output weights; train it first")
    return hidden_output(g_bar, model) @ model.upsilon.T


def estimate_sto(O) -> np.ndarray:
    """Index of the largest ``|O_d|^2``, earliest index on ties."""
    O = np.asarray(O)
    return np.argmax(np.abs(O) ** 2, axis=-1)


# Model file: fixed little-endian header followed by float64 row-major
# W (n_hidden x n_inputs), b (n_hidden) and, when trained,
# upsilon (n_outputs x n_hidden).
MAGIC = b"ELMSYNC\x00"
VERSION = 1
_HEADER = struct.Struct("<8sHHIIIq")


def save_model(model: ElmModel, path) -> None:
    n_out = model.n_outputs or 0
    seed = -1 if model.seed is None or not 0 <= model.seed < 2**63 else int(model.seed)
    header = _HEADER.pack(MAGIC, VERSION, TANH, model.n_hidden, model.n_inputs, n_out, seed)
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (model.W, model.b) + ((model.upsilon,) if model.trained else ()):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> ElmModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, act, n_hidden, n_inputs, n_out, seed = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if act != TANH:
        raise FormatError(f"{path}: unknown activation id {act}")
    sizes = [n_hidden * n_inputs, n_hidden, n_out * n_hidden]
    expected = _HEADER.size + 8 * sum(sizes)
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(float)
    W = body[:sizes[0]].reshape(n_hidden, n_inputs)
    b = body[sizes[0]:sizes[0] + sizes[1]]
    upsilon = body[sizes[0] + sizes[1]:].reshape(n_out, n_hidden) if n_out else None
    return ElmModel(W, b, upsilon, seed=None if seed < 0 else seed)
