from .mlp import Adam, Mlp
from .policies import ActorPolicy, GeometricPolicy, StaticPolicy, load_policy, save_policy
from .replay import ReplayBuffer
from .sac import SacAgent, SpawnConfig, TrainConfig, evaluate_policy, sample_training_path, train

__all__ = [
    "Adam", "Mlp", "ActorPolicy", "GeometricPolicy", "StaticPolicy",
    "load_policy", "save_policy", "ReplayBuffer", "SacAgent", "SpawnConfig",
    "TrainConfig", "evaluate_policy", "sample_training_path", "train",
]
