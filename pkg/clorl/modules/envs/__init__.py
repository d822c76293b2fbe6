from clorl.modules.envs.behavior import BehaviorKind, PdController, RandomBehavior, make_behavior
from clorl.modules.envs.model import (
    ENV_REGISTRY,
    Chain1D,
    EnvState,
    PointMass2D,
    TabularMdp,
    ToyEnv,
    make_env,
)
from clorl.modules.envs.oracle import (
    GridModel,
    OracleGrid,
    OraclePolicy,
    discretize,
    grid_mdp,
    snap_to_grid,
    stationary_grid,
    tabular_oracle,
)
from clorl.modules.envs.service import (
    Trajectories,
    behavior_returns,
    generate_dataset,
    initial_states,
    reference_scores,
    rollout,
)

__all__ = [
    "ENV_REGISTRY",
    "BehaviorKind",
    "Chain1D",
    "EnvState",
    "GridModel",
    "OracleGrid",
    "OraclePolicy",
    "PdController",
    "PointMass2D",
    "RandomBehavior",
    "TabularMdp",
    "ToyEnv",
    "Trajectories",
    "behavior_returns",
    "discretize",
    "generate_dataset",
    "grid_mdp",
    "initial_states",
    "make_behavior",
    "make_env",
    "reference_scores",
    "rollout",
    "snap_to_grid",
    "stationary_grid",
    "tabular_oracle",
]
