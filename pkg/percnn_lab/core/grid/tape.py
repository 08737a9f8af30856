"""
Reverse-Mode Tape

Every differentiable operation applied to a tracked Tensor appends one node
to its Tape. The tape order is a topological order, so the backward pass is a
single reverse sweep that visits each reachable node exactly once.
"""

from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from ..errors import ShapeError, SpecError


logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, Sequence[float]]
VJP = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


def _frozen(value: ArrayLike) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    array.flags.writeable = False
    return array


class Tensor:
    """
    An immutable float64 array, optionally recorded on a Tape.

    Untracked tensors (``tape is None``) flow through every operation without
    recording anything, which is how inference and data generation run.
    """

    __slots__ = ("value", "tape", "index", "parents", "vjp", "name")

    def __init__(
        self,
        value: ArrayLike,
        tape: Optional["Tape"] = None,
        parents: Tuple["Tensor", ...] = (),
        vjp: Optional[VJP] = None,
        name: Optional[str] = None,
    ):
        self.value = _frozen(value)
        self.tape = tape
        self.index = -1
        self.parents = parents
        self.vjp = vjp
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def tracked(self) -> bool:
        return self.tape is not None

    def numpy(self) -> np.ndarray:
        """Writable copy of the value"""
        return np.array(self.value)

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def __repr__(self) -> str:
        where = "tracked" if self.tracked else "constant"
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, {where})"


TensorLike = Union[Tensor, np.ndarray, float]


def as_tensor(value: TensorLike) -> Tensor:
    """Lift arrays and scalars to untracked tensors"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Gradients:
    """Result of a backward pass: adjoints keyed by parameter name"""

    def __init__(self, by_name: Dict[str, np.ndarray], by_index: Dict[int, np.ndarray], tape: "Tape"):
        self._by_name = by_name
        self._by_index = by_index
        self._tape = tape

    def __getitem__(self, name: str) -> np.ndarray:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self):
        return iter(self._by_name)

    def items(self):
        return self._by_name.items()

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self._by_name)

    def of(self, leaf: Tensor) -> np.ndarray:
        """Adjoint of any leaf on the tape, zero when unreachable"""
        if leaf.tape is not self._tape:
            raise SpecError("tensor is not recorded on this tape")
        return self._by_index.get(leaf.index, np.zeros_like(leaf.value))


class Tape:
    """
    Single-writer record of differentiable operations.

    One tape per training step. Distinct tapes may be used from distinct
    threads; a single tape must not be shared.
    """

    def __init__(self):
        self._nodes: List[Tensor] = []
        self._parameters: Dict[str, Tensor] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def parameters(self) -> Dict[str, Tensor]:
        return dict(self._parameters)

    def _append(self, node: Tensor) -> Tensor:
        node.tape = self
        node.index = len(self._nodes)
        self._nodes.append(node)
        return node

    def parameter(self, value: ArrayLike, name: str) -> Tensor:
        """Register a trainable leaf"""
        if name in self._parameters:
            raise SpecError(f"parameter '{name}' already registered on this tape")
        node = self._append(Tensor(value, name=name))
        self._parameters[name] = node
        return node

    def watch(self, value: TensorLike, name: Optional[str] = None) -> Tensor:
        """Register a non-parameter leaf whose adjoint is wanted (e.g. an input)"""
        raw = value.value if isinstance(value, Tensor) else value
        return self._append(Tensor(raw, name=name))

    def record(self, value: np.ndarray, parents: Tuple[Tensor, ...], vjp: VJP) -> Tensor:
        return self._append(Tensor(value, parents=parents, vjp=vjp))

    def backward(self, root: Tensor) -> Gradients:
        """
        Propagate d(root)/d(leaf) for every leaf on the tape.

        Args:
            root: scalar tensor recorded on this tape

        Returns:
            Gradients with one entry per registered parameter; parameters not
            reachable from root get exact zeros.
        """
        if root.tape is not self:
            raise SpecError("backward root is not recorded on this tape")
        if root.value.size != 1 or root.ndim != 0:
            raise SpecError(f"backward root must be a scalar, got shape {root.shape}")

        adjoints: Dict[int, np.ndarray] = {root.index: np.ones((), dtype=np.float64)}
        leaf_grads: Dict[int, np.ndarray] = {}

        for index in range(root.index, -1, -1):
            grad = adjoints.pop(index, None)
            if grad is None:
                continue
            node = self._nodes[index]
            if node.vjp is None:
                leaf_grads[index] = grad
                continue
            parent_grads = node.vjp(grad)
            for parent, parent_grad in zip(node.parents, parent_grads):
                if parent_grad is None or parent.tape is not self:
                    continue
                if parent_grad.shape != parent.shape:
                    raise ShapeError(
                        f"adjoint shape {parent_grad.shape} does not match value shape {parent.shape}"
                    )
                if parent.index in adjoints:
                    adjoints[parent.index] = adjoints[parent.index] + parent_grad
                else:
                    adjoints[parent.index] = parent_grad

        by_name = {
            name: leaf_grads.get(node.index, np.zeros_like(node.value))
            for name, node in self._parameters.items()
        }
        logger.debug(f"Backward pass over {root.index + 1} nodes, {len(leaf_grads)} leaves reached")
        return Gradients(by_name, leaf_grads, self)


def record(value: np.ndarray, parents: Iterable[Tensor], vjp: VJP) -> Tensor:
    """
    Build the output of an operation, recording it when any input is tracked.

    All tracked inputs must live on the same tape.
    """
    parents = tuple(parents)
    tapes = {id(p.tape): p.tape for p in parents if p.tape is not None}
    if not tapes:
        return Tensor(value)
    if len(tapes) > 1:
        raise SpecError("operation mixes tensors from different tapes")
    tape = next(iter(tapes.values()))
    return tape.record(value, parents, vjp)


# --- Tensor algebra ---------------------------------------------------------

def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, "add")
    return record(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, "sub")
    return record(a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return record(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a: TensorLike, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = float(factor)
    return record(a.value * factor, (a,), lambda g: (g * factor,))


def add_scaled(base: TensorLike, delta: TensorLike, factor: float) -> Tensor:
    """base + factor * delta"""
    base, delta = as_tensor(base), as_tensor(delta)
    _check_same_shape(base, delta, "add_scaled")
    factor = float(factor)
    return record(base.value + factor * delta.value, (base, delta), lambda g: (g, g * factor))


def total(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    return record(np.sum(a.value), (a,), lambda g: (np.full(shape, float(g)),))


def mean_square(a: TensorLike) -> Tensor:
    """mean(a**2) over every entry"""
    a = as_tensor(a)
    av = a.value
    n = av.size
    return record(np.mean(av * av), (a,), lambda g: (av * (2.0 * float(g) / n),))


def tanh(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.value)
    return record(out, (a,), lambda g: (g * (1.0 - out * out),))


def concat(tensors: Sequence[TensorLike], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(tensors))
        )

    return record(np.concatenate([t.value for t in tensors], axis=axis), tuple(tensors), vjp)


def stack(tensors: Sequence[TensorLike]) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise SpecError("stack needs at least one tensor")
    for t in tensors[1:]:
        _check_same_shape(tensors[0], t, "stack")
    return record(
        np.stack([t.value for t in tensors]),
        tuple(tensors),
        lambda g: tuple(g[i] for i in range(len(tensors))),
    )


def take(a: TensorLike, index) -> Tensor:
    """Basic (slice/integer) indexing with scatter adjoint"""
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape, dtype=np.float64)
        full[index] = g
        return (full,)

    return record(a.value[index], (a,), vjp)


def masked_blend(free: TensorLike, mask: np.ndarray, fixed: np.ndarray) -> Tensor:
    """free * mask + fixed; entries with mask 0 are frozen to ``fixed``"""
    free = as_tensor(free)
    mask = np.asarray(mask, dtype=np.float64)
    fixed = np.asarray(fixed, dtype=np.float64)
    if mask.shape != free.shape or fixed.shape != free.shape:
        raise ShapeError(f"masked_blend: mask/fixed shape must equal {free.shape}")
    return record(free.value * mask + fixed, (free,), lambda g: (g * mask,))
