"""
Чекпоінти: розміри шарів, плаский вектор параметрів та стан Adam у файлі .npz
"""

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from network.mlp import unflatten
from network.optimizer import AdamState
from network.policy import GaussianPolicy, ValueNetwork
from utils.errors import ConfigError
from utils.io import write_atomic
from utils.logger import setup_logger

logger = setup_logger()


@dataclass
class Checkpoint:
    """Знімок навчання"""
    policy: GaussianPolicy
    value: ValueNetwork
    policy_optimizer: Optional[AdamState] = None
    value_optimizer: Optional[AdamState] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


def _adam_arrays(prefix: str, state: Optional[AdamState]) -> Dict[str, np.ndarray]:
    if state is None:
        return {}
    return {
        f"{prefix}_m": state.first_moment,
        f"{prefix}_v": state.second_moment,
        f"{prefix}_hyper": np.array([state.learning_rate, state.beta1, state.beta2, state.epsilon]),
        f"{prefix}_step": np.array([state.step], dtype=np.int64),
    }


def _adam_from(prefix: str, data) -> Optional[AdamState]:
    if f"{prefix}_m" not in data:
        return None
    lr, beta1, beta2, eps = data[f"{prefix}_hyper"]
    return AdamState(
        learning_rate=float(lr),
        first_moment=data[f"{prefix}_m"].copy(),
        second_moment=data[f"{prefix}_v"].copy(),
        step=int(data[f"{prefix}_step"][0]),
        beta1=float(beta1),
        beta2=float(beta2),
        epsilon=float(eps),
    )


def save_checkpoint(path: str, checkpoint: Checkpoint) -> str:
    """Атомарний запис чекпоінта (тимчасовий файл + перейменування)"""

    policy = checkpoint.policy
    arrays = {
        "policy_layer_sizes": np.array(policy.net.layer_sizes, dtype=np.int64),
        "policy_flat": policy.get_flat(),
        "value_layer_sizes": np.array(checkpoint.value.net.layer_sizes, dtype=np.int64),
        "value_flat": checkpoint.value.get_flat(),
        "header": np.array(json.dumps({
            "action_dim": policy.action_dim,
            "state_dependent_std": policy.state_dependent_std,
            "metadata": checkpoint.metadata,
        })),
    }
    arrays.update(_adam_arrays("adam_policy", checkpoint.policy_optimizer))
    arrays.update(_adam_arrays("adam_value", checkpoint.value_optimizer))

    def _write(tmp_path: str) -> None:
        with open(tmp_path, "wb") as handle:
            np.savez(handle, **arrays)

    write_atomic(path, _write)

    logger.debug(f"💾 Чекпоінт збережено: {path}")
    return path


def load_checkpoint(path: str) -> Checkpoint:
    """Читання чекпоінта, записаного save_checkpoint"""

    if not os.path.exists(path):
        raise ConfigError(f"Чекпоінт не знайдено: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            action_dim = int(header["action_dim"])
            dependent = bool(header["state_dependent_std"])
            policy_sizes = data["policy_layer_sizes"].tolist()
            policy_flat = data["policy_flat"]
            n_net = sum(a * b + b for a, b in zip(policy_sizes[:-1], policy_sizes[1:]))
            net = unflatten(policy_sizes, policy_flat[:n_net])
            log_std = None if dependent else policy_flat[n_net:].copy()
            policy = GaussianPolicy(net, action_dim, dependent, log_std)
            value = ValueNetwork(unflatten(data["value_layer_sizes"].tolist(), data["value_flat"]))
            return Checkpoint(
                policy=policy,
                value=value,
                policy_optimizer=_adam_from("adam_policy", data),
                value_optimizer=_adam_from("adam_value", data),
                metadata=header.get("metadata", {}),
            )
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"Пошкоджений чекпоінт {path}: {e}") from e
