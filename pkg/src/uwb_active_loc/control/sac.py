"""Soft actor-critic with an asymmetric critic, in plain numpy.

The actor maps the range-history observation to a squashed-Gaussian
command; critics (and only critics) see the privileged state
[x_t, y_t, theta] concatenated with the command. Twin critics with
polyak-averaged targets, min-backup, and a learned entropy temperature.

Log-probabilities follow the tanh-Gaussian convention: the squash
correction log(1 - tanh(z)^2 + eps) is included, the affine scaling to
physical bounds is not (it is a constant offset that only shifts the
entropy target).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalDivergence
from ..sim import V_MAX, OMEGA_MAX, SinusoidPath
from .mlp import Adam, Mlp
from .policies import ActorPolicy
from .replay import ReplayBuffer

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6


@dataclass(frozen=True)
class SpawnConfig:
    """Episode randomization for training scenarios."""
    dist_lo: float = 0.6
    dist_hi: float = 1.0
    amp_lo: float = 1.0
    amp_hi: float = 2.5
    freq_lo: float = 0.008
    freq_hi: float = 0.016
    hold_steps: int = 100


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-4
    discount: float = 0.99
    batch_size: int = 256
    tau: float = 0.005
    buffer_capacity: int = 1_000_000
    warmup_steps: int = 1000
    target_entropy: float = -2.0
    total_steps: int = 3_000_000
    eval_every: int = 5000
    eval_episodes: int = 8
    hidden: tuple = (256, 256, 256)
    spawn: SpawnConfig = field(default_factory=SpawnConfig)


def sample_training_path(rng: np.random.Generator,
                         spawn: SpawnConfig = SpawnConfig()) -> SinusoidPath:
    """Random training scenario; draw order is part of the determinism contract."""
    dist = rng.uniform(spawn.dist_lo, spawn.dist_hi)
    bearing = rng.uniform(0.0, 2.0 * np.pi)
    start = dist * np.array([np.cos(bearing), np.sin(bearing)])
    amp = rng.uniform(spawn.amp_lo, spawn.amp_hi, size=2)
    freq = rng.uniform(spawn.freq_lo, spawn.freq_hi, size=2)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
    return SinusoidPath(start=start, amp=amp, freq=freq, phase=phase,
                        hold_steps=spawn.hold_steps)


class SacAgent:
    def __init__(self, obs_dim: int, cobs_dim: int, act_dim: int = 2,
                 cfg: TrainConfig = TrainConfig(),
                 scale=(V_MAX, OMEGA_MAX),
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng()
        self.cfg = cfg
        self.act_dim = act_dim
        self.cobs_dim = cobs_dim
        self.scale = np.asarray(scale, dtype=float)
        widths_a = [obs_dim, *cfg.hidden, 2 * act_dim]
        widths_c = [cobs_dim + act_dim, *cfg.hidden, 1]
        self.actor = Mlp(widths_a, rng=rng)
        self.critic1 = Mlp(widths_c, rng=rng)
        self.critic2 = Mlp(widths_c, rng=rng)
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy()
        self.log_temp = np.zeros(1)
        lr = cfg.learning_rate
        self.opt_actor = Adam(self.actor.parameters(), lr=lr)
        self.opt_c1 = Adam(self.critic1.parameters(), lr=lr)
        self.opt_c2 = Adam(self.critic2.parameters(), lr=lr)
        self.opt_temp = Adam([self.log_temp], lr=lr)
        self.updates = 0

    @property
    def temperature(self) -> float:
        return float(np.exp(self.log_temp[0]))

    # -- sampling ----------------------------------------------------------

    def _head(self, out):
        mean = out[..., : self.act_dim]
        raw = out[..., self.act_dim:]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        return mean, raw, log_std

    def sample(self, obs, rng: np.random.Generator, want_cache: bool = False):
        """Reparameterized tanh-Gaussian actions for a batch of observations."""
        eps = rng.standard_normal((np.asarray(obs).shape[0], self.act_dim))
        return self._sample_eps(obs, eps, want_cache)

    def _sample_eps(self, obs, eps, want_cache: bool = False):
        out, cache = self.actor.forward(obs, want_cache=True)
        mean, raw, log_std = self._head(out)
        std = np.exp(log_std)
        z = mean + std * eps
        a = np.tanh(z)
        u = a * self.scale
        logp = np.sum(-0.5 * eps ** 2 - log_std - 0.5 * np.log(2.0 * np.pi)
                      - np.log(1.0 - a ** 2 + SQUASH_EPS), axis=-1)
        if want_cache:
            return u, logp, (cache, raw, log_std, std, eps, a)
        return u, logp

    def act_one(self, obs, rng: np.random.Generator) -> np.ndarray:
        u, _ = self.sample(obs[None, :], rng)
        return u[0]

    def policy(self) -> ActorPolicy:
        """Deterministic deployment snapshot of the current actor."""
        return ActorPolicy(self.actor.copy(), scale=self.scale)

    # -- updates -----------------------------------------------------------

    def _critic_forward(self, critic, cobs, act, want_cache=False):
        x = np.concatenate([cobs, act], axis=1)
        return critic.forward(x, want_cache=want_cache)

    def actor_gradients(self, obs, cobs, eps):
        """Gradients of mean(temp*logp - min_q) w.r.t. actor parameters.

        eps is the fixed reparameterization noise; the chain runs through
        tanh squashing, the affine action scale, and the critics' input
        gradients (critic parameters are left alone).
        """
        n = obs.shape[0]
        temp = self.temperature
        u_pi, logp_pi, (a_cache, raw, log_std, std, eps, a) = self._sample_eps(
            obs, eps, want_cache=True)
        q1, c1_cache = self._critic_forward(self.critic1, cobs, u_pi,
                                            want_cache=True)
        q2, c2_cache = self._critic_forward(self.critic2, cobs, u_pi,
                                            want_cache=True)
        q1 = q1[:, 0]
        q2 = q2[:, 0]
        actor_loss = float(np.mean(temp * logp_pi - np.minimum(q1, q2)))

        pick1 = (q1 <= q2)[:, None]
        _, gin1 = self.critic1.backward(c1_cache, np.where(pick1, -1.0 / n, 0.0))
        _, gin2 = self.critic2.backward(c2_cache, np.where(~pick1, -1.0 / n, 0.0))
        g_u = (gin1 + gin2)[:, self.cobs_dim:]          # dL/du through min-critic

        one_m_a2 = 1.0 - a ** 2
        squash_grad = 2.0 * a * one_m_a2 / (one_m_a2 + SQUASH_EPS)
        g_z = (temp / n) * squash_grad + g_u * self.scale * one_m_a2
        g_log_std = g_z * std * eps - temp / n
        g_log_std = np.where((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX),
                             g_log_std, 0.0)
        g_out = np.concatenate([g_z, g_log_std], axis=1)
        a_grads, _ = self.actor.backward(a_cache, g_out)
        return a_grads, logp_pi, actor_loss

    def update(self, batch: dict, rng: np.random.Generator) -> dict:
        cfg = self.cfg
        n = batch["obs"].shape[0]
        temp = self.temperature

        # targets from the frozen critics on fresh next actions
        u2, logp2 = self.sample(batch["obs2"], rng)
        qt1 = self._critic_forward(self.target1, batch["cobs2"], u2)[:, 0]
        qt2 = self._critic_forward(self.target2, batch["cobs2"], u2)[:, 0]
        qt = np.minimum(qt1, qt2) - temp * logp2
        y = batch["rew"] + cfg.discount * (1.0 - batch["done"]) * qt

        c_losses = []
        for critic, opt in ((self.critic1, self.opt_c1), (self.critic2, self.opt_c2)):
            q, cache = self._critic_forward(critic, batch["cobs"], batch["act"],
                                            want_cache=True)
            err = q[:, 0] - y
            c_losses.append(float(np.mean(err ** 2)))
            grads, _ = critic.backward(cache, (2.0 / n) * err[:, None])
            opt.step(critic.parameters(), grads)

        # actor ascends min-critic Q of its own fresh actions, entropy-regularized
        eps = rng.standard_normal((n, self.act_dim))
        a_grads, logp_pi, actor_loss = self.actor_gradients(
            batch["obs"], batch["cobs"], eps)
        self.opt_actor.step(self.actor.parameters(), a_grads)

        # temperature tracks the entropy target (logp treated as data here)
        temp_grad = np.array([-np.mean(logp_pi + cfg.target_entropy)])
        temp_loss = float(-self.log_temp[0] * np.mean(logp_pi + cfg.target_entropy))
        self.opt_temp.step([self.log_temp], [temp_grad])

        for src, dst in ((self.critic1, self.target1), (self.critic2, self.target2)):
            for ps, pd in zip(src.parameters(), dst.parameters()):
                pd *= 1.0 - cfg.tau
                pd += cfg.tau * ps

        self.updates += 1
        diag = {"critic1_loss": c_losses[0], "critic2_loss": c_losses[1],
                "actor_loss": actor_loss, "temp_loss": temp_loss,
                "temperature": self.temperature,
                "entropy": float(-np.mean(logp_pi))}
        if not all(np.isfinite(v) for v in diag.values()):
            raise NumericalDivergence(self.updates, str(diag))
        return diag


def evaluate_policy(policy, env, paths, noise_parent: np.random.Generator) -> float:
    """Mean undiscounted return of a deterministic policy over fixed scenarios."""
    returns = []
    for path, child in zip(paths, noise_parent.spawn(len(paths))):
        if hasattr(policy, "reset"):
            policy.reset()
        obs = env.reset(path, child)
        total = 0.0
        while not env.done:
            obs, r, _done, _info = env.step(policy.act(obs))
            total += r
        returns.append(total)
    return float(np.mean(returns))


def train(env_factory, cfg: TrainConfig, rng: np.random.Generator):
    """Run SAC on episodes from env_factory; one gradient step per env step.

    Returns (deployment policy, curve dict). The curve records per-episode
    training returns and the periodic deterministic evaluation series.
    """
    env = env_factory()
    eval_env = env_factory()
    eval_scen_rng, eval_noise_rng = rng.spawn(2)
    eval_paths = [sample_training_path(eval_scen_rng, cfg.spawn)
                  for _ in range(cfg.eval_episodes)]

    agent = SacAgent(env.obs_dim, 3, 2, cfg=cfg, rng=rng)
    buffer = ReplayBuffer(cfg.buffer_capacity, env.obs_dim, 3, 2)
    curve = {"episode_steps": [], "episode_returns": [],
             "eval_steps": [], "eval_returns": []}
    if cfg.eval_every:
        # score the untrained policy first so the curve starts at its floor
        curve["eval_steps"].append(0)
        curve["eval_returns"].append(
            evaluate_policy(agent.policy(), eval_env, eval_paths, eval_noise_rng))

    obs = env.reset(sample_training_path(rng, cfg.spawn), rng)
    ep_return = 0.0
    for step in range(1, cfg.total_steps + 1):
        if step <= cfg.warmup_steps:
            u = rng.uniform(-agent.scale, agent.scale)
        else:
            u = agent.act_one(obs, rng)
        cobs = env.privileged
        obs2, r, done, info = env.step(u)
        cobs2 = env.privileged
        # timeouts bootstrap: only true terminal states cut the backup
        buffer.add(obs, cobs, u, r, obs2, cobs2, done and not info["timeout"])
        ep_return += r
        obs = obs2
        if done:
            curve["episode_steps"].append(step)
            curve["episode_returns"].append(ep_return)
            ep_return = 0.0
            obs = env.reset(sample_training_path(rng, cfg.spawn), rng)
        if step > cfg.warmup_steps and buffer.size >= cfg.batch_size:
            agent.update(buffer.sample(cfg.batch_size, rng), rng)
        if cfg.eval_every and step % cfg.eval_every == 0:
            score = evaluate_policy(agent.policy(), eval_env, eval_paths,
                                    eval_noise_rng)
            curve["eval_steps"].append(step)
            curve["eval_returns"].append(score)
    return agent.policy(), curve
