"""Group-driven actor-critic reinforcement learning for simulated mHealth users."""

from .actor import ActorCriticResult, actor_gradient, actor_objective, maximize_actor, train_actor_critic
from .cluster import ClusterAssignment, kmeans, trajectory_feature
from .config import ExperimentConfig, load_config, save_config
from .critic import lstdq, q_value
from .evaluate import ElrarReport, elrar, long_run_average_reward
from .experiment import ResultsTable, emit_outputs, run_experiment
from .features import expected_next_feature, policy_feature, value_feature
from .policy import action_probabilities, sample_action
from .sim import (
    DEFAULT_BASIC_BETAS,
    Population,
    Trajectory,
    TrialTuple,
    UserModel,
    initial_state,
    make_population,
    run_micro_randomized_trial,
    step,
)
from .trainers import TrainedPolicySet, train_grouped, train_pooled, train_separate

__version__ = "0.1.0"
