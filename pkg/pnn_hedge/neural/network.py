import hashlib
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from ..config.structures import NetworkArch, TimeGrid
from ..exceptions import DimensionMismatch, IncompatibleData

log = logging.getLogger(__name__)

SELU_ALPHA = 1.6732632423543772
SELU_SCALE = 1.0507009873554805
EMBEDDING_INIT_STD = 0.1


class FeatureRow(NamedTuple):

    """Рыночные признаки одной даты ребалансировки.

    Attributes:
        log_moneyness: log(S_t / K).
        time_to_maturity: оставшийся срок в долях года.
    """

    log_moneyness: float
    time_to_maturity: float

    def as_array(self) -> np.ndarray:
        return np.array([self.log_moneyness, self.time_to_maturity], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class NetworkParams:

    """Параметры сети: таблица эмбеддингов и веса общего MLP.

    Attributes:
        embedding: матрица эмбеддингов [m x l].
        weights: матрицы весов слоёв [fan_in x fan_out].
        biases: смещения слоёв [fan_out].
    """

    embedding: np.ndarray
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    @property
    def n_tasks(self) -> int:
        return int(self.embedding.shape[0])

    @property
    def embed_dim(self) -> int:
        return int(self.embedding.shape[1])

    def tensors(self) -> List[np.ndarray]:
        """Тензоры в порядке объявления: embedding, W1, b1, ..., Wk, bk."""
        ordered = [self.embedding]
        for weight, bias in zip(self.weights, self.biases):
            ordered.extend((weight, bias))
        return ordered

    @classmethod
    def from_tensors(cls, tensors: Sequence[np.ndarray]) -> "NetworkParams":
        layers = tensors[1:]
        return cls(tensors[0], tuple(layers[0::2]), tuple(layers[1::2]))

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams.from_tensors([np.zeros_like(t) for t in self.tensors()])

    def congruent(self, other: "NetworkParams") -> bool:
        mine, theirs = self.tensors(), other.tensors()
        return len(mine) == len(theirs) and all(
            a.shape == b.shape for a, b in zip(mine, theirs)
        )


Gradients = NetworkParams


class ForwardCache(NamedTuple):

    """Промежуточные значения прямого прохода для обратного."""

    task_ids: np.ndarray
    activations: List[np.ndarray]
    pre_activations: List[np.ndarray]


def selu(x: Union[float, np.ndarray]) -> np.ndarray:

    """Активация SELU: scale * x при x > 0, scale * alpha * (e^x - 1) иначе."""

    x = np.asarray(x, dtype=np.float64)
    negative = SELU_ALPHA * np.expm1(np.minimum(x, 0.0))
    return SELU_SCALE * np.where(x > 0, x, negative)


def selu_grad(x: np.ndarray) -> np.ndarray:
    return SELU_SCALE * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0.0)))


def init_params(arch: NetworkArch, seed: int) -> NetworkParams:

    """Функция инициализации параметров сети.

    Веса по LeCun-normal (дисперсия 1 / fan_in), нулевые смещения,
    строки эмбеддинга из N(0, 0.1^2).

    Args:
        arch: архитектура сети.
        seed: зерно.

    Returns:
        NetworkParams: начальные параметры.
    """

    rng = np.random.default_rng(seed)
    embedding = rng.normal(0.0, EMBEDDING_INIT_STD, (arch.n_tasks, arch.embed_dim))
    sizes = arch.layer_sizes
    weights = tuple(
        rng.normal(0.0, np.sqrt(1.0 / fan_in), (fan_in, fan_out))
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
    )
    biases = tuple(np.zeros(fan_out) for fan_out in sizes[1:])
    log.debug(f"Инициализированы параметры сети со слоями {sizes}")
    return NetworkParams(embedding, weights, biases)


def check_arch(params: NetworkParams, arch: NetworkArch) -> None:

    """Проверка согласованности параметров с архитектурой.

    Raises:
        IncompatibleData: при несовпадении размеров.
    """

    sizes = arch.layer_sizes
    reference = NetworkParams(
        np.empty((arch.n_tasks, arch.embed_dim)),
        tuple(np.empty((i, o)) for i, o in zip(sizes[:-1], sizes[1:])),
        tuple(np.empty(o) for o in sizes[1:]),
    )
    if not params.congruent(reference):
        raise IncompatibleData(f"Параметры сети не соответствуют архитектуре {arch}")


def embed(params: NetworkParams, task_id: int) -> np.ndarray:

    """Строка эмбеддинга задачи.

    Raises:
        IncompatibleData: если task_id вне таблицы.
    """

    if not 0 <= task_id < params.n_tasks:
        raise IncompatibleData(
            f"task_id {task_id} вне таблицы эмбеддингов из {params.n_tasks} строк",
        )
    return params.embedding[task_id].copy()


def forward_batch(
    params: NetworkParams,
    task_ids: np.ndarray,
    features: np.ndarray,
) -> Tuple[np.ndarray, ForwardCache]:

    """Прямой проход сети по батчу строк признаков.

    Вход сети: [признаки || эмбеддинг задачи], скрытые слои SELU,
    линейный выход без ограничения.

    Args:
        params: параметры сети.
        task_ids: идентификаторы задач строк [N].
        features: признаки [N x n_features].

    Returns:
        Tuple[np.ndarray, ForwardCache]: дельты [N] и кэш прохода.
    """

    task_ids = np.asarray(task_ids, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] != task_ids.shape[0]:
        raise DimensionMismatch(
            f"Признаки {features.shape} не согласованы с задачами {task_ids.shape}",
        )
    if task_ids.size and (task_ids.min() < 0 or task_ids.max() >= params.n_tasks):
        raise IncompatibleData("task_id вне таблицы эмбеддингов.")

    hidden = np.concatenate([features, params.embedding[task_ids]], axis=1)
    activations = [hidden]
    pre_activations = []
    last = len(params.weights) - 1
    for i, (weight, bias) in enumerate(zip(params.weights, params.biases)):
        z = hidden @ weight + bias
        pre_activations.append(z)
        if i < last:
            hidden = selu(z)
            activations.append(hidden)
    cache = ForwardCache(task_ids, activations, pre_activations)
    return pre_activations[-1][:, 0], cache


def backward_batch(
    params: NetworkParams,
    cache: ForwardCache,
    upstream: np.ndarray,
) -> Gradients:

    """Обратный проход: точные градиенты по всем параметрам.

    Args:
        params: параметры сети того же прямого прохода.
        cache: кэш прямого прохода.
        upstream: производные потери по выходам сети [N].

    Returns:
        Gradients: градиенты, конгруэнтные параметрам.
    """

    grad = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    n_layers = len(params.weights)
    grad_weights: List[np.ndarray] = [np.empty(0)] * n_layers
    grad_biases: List[np.ndarray] = [np.empty(0)] * n_layers
    for i in reversed(range(n_layers)):
        grad_weights[i] = cache.activations[i].T @ grad
        grad_biases[i] = grad.sum(axis=0)
        grad = grad @ params.weights[i].T
        if i > 0:
            grad = grad * selu_grad(cache.pre_activations[i - 1])

    n_features = cache.activations[0].shape[1] - params.embed_dim
    grad_embedding = np.zeros_like(params.embedding)
    # порядок накопления фиксирован порядком строк батча
    np.add.at(grad_embedding, cache.task_ids, grad[:, n_features:])
    return NetworkParams(grad_embedding, tuple(grad_weights), tuple(grad_biases))


def forward_delta(params: NetworkParams, task_id: int, feature: FeatureRow) -> float:

    """Дельта хеджа для одной задачи и одной строки признаков."""

    embed(params, task_id)
    delta, _ = forward_batch(
        params,
        np.array([task_id]),
        feature.as_array().reshape(1, -1),
    )
    return float(delta[0])


def backward(
    params: NetworkParams,
    task_id: int,
    features: np.ndarray,
    upstream: np.ndarray,
) -> Gradients:

    """Градиенты скалярной потери sum_i upstream_i * delta_i по батчу одной задачи.

    Args:
        params: параметры сети.
        task_id: задача батча.
        features: признаки [N x n_features].
        upstream: чувствительности потери к выходам [N].

    Returns:
        Gradients: градиенты по всем тензорам.
    """

    task_ids = np.full(features.shape[0], task_id, dtype=np.int64)
    _, cache = forward_batch(params, task_ids, features)
    return backward_batch(params, cache, upstream)


def path_features(spot: np.ndarray, strike: float, grid: TimeGrid) -> np.ndarray:

    """Признаки всех дат ребалансировки: [n_paths x n_steps x 2].

    Args:
        spot: матрица цен [n_paths x (n_steps + 1)].
        strike: страйк.
        grid: сетка дат.

    Returns:
        np.ndarray: log-moneyness и оставшийся срок.
    """

    log_moneyness = np.log(spot[:, :-1] / strike)
    tau = np.broadcast_to(grid.time_to_maturity, log_moneyness.shape)
    return np.stack([log_moneyness, tau], axis=-1)


def network_deltas(
    params: NetworkParams,
    task_ids: np.ndarray,
    features: np.ndarray,
) -> Tuple[np.ndarray, ForwardCache]:

    """Дельты по траекториям: признаки [B x n x f] -> дельты [B x n]."""

    n_paths, n_steps, n_features = features.shape
    row_tasks = np.repeat(np.asarray(task_ids, dtype=np.int64), n_steps)
    deltas, cache = forward_batch(params, row_tasks, features.reshape(-1, n_features))
    return deltas.reshape(n_paths, n_steps), cache


def grow_embedding(params: NetworkParams, row: np.ndarray) -> NetworkParams:

    """Таблица эмбеддингов с добавленной строкой; общие веса не копируются."""

    embedding = np.vstack([params.embedding, np.asarray(row).reshape(1, -1)])
    return NetworkParams(embedding, params.weights, params.biases)


def shared_checksum(params: NetworkParams) -> str:

    """SHA-256 общих весов сети (без таблицы эмбеддингов)."""

    digest = hashlib.sha256()
    for tensor in params.tensors()[1:]:
        digest.update(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    return digest.hexdigest()
