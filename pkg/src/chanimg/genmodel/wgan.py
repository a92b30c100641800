"""Conditional Wasserstein GAN with gradient penalty over channel images.

Generator and critic are dense float64 networks (nn.Mlp).  The condition
(2D distance, receiver height) is normalized to [-1, 1] by dataset bounds
and embedded through a small fully connected network on each side; the
embedding concatenates with the noise vector (generator) or the flattened
image (critic) at the input.

The critic objective is

    mean f(fake) - mean f(real) + lambda * mean (||grad_x f(x_hat)|| - 1)^2

with x_hat = u * real + (1 - u) * fake, u ~ U(0,1) per sample, and the
gradient taken with respect to the image part of the critic input only.
The generator minimizes -mean f(fake).  All gradients, including the
second-order gradient-penalty path, are computed analytically and are
finite-difference checked in the test suite.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, TrainingDivergedError
from ..rng import substream
from .nn import AdamState, Mlp, adam_step, count_params

__all__ = [
    "WganGpHyperparams",
    "NetworkParams",
    "TrainingLog",
    "ArrayBatches",
    "AugmentedBatches",
    "critic_loss",
    "generator_loss",
    "train_wgan_gp",
    "sample",
]

IMAGE_SHAPE = (64, 50)


@dataclass
class WganGpHyperparams:
    """Training knobs; defaults follow the reported recipe.

    learning rate 5e-5, Adam betas (0.5, 0.9), 10 epochs, batch 256 on
    64x50x1 images; gradient-penalty weight 10 and 5 critic steps per
    generator step are the standard reference values.
    """

    learning_rate: float = 5e-5
    adam_beta1: float = 0.5
    adam_beta2: float = 0.9
    epochs: int = 10
    batch_size: int = 256
    image_shape: tuple = IMAGE_SHAPE
    gp_lambda: float = 10.0
    critic_steps_per_gen_step: int = 5
    noise_dim: int = 64

    # architecture (small on purpose; parameter counts land in the log)
    hidden: tuple = (256, 256)
    embed_hidden: int = 32
    embed_dim: int = 32
    hidden_act: str = "silu"
    # training arithmetic; checkpoints are always written as float64
    dtype: str = "float64"
    # init shaping of the generator output layer:
    #   fan_in       - plain uniform fan-in init (gain below applies)
    #   data_mean    - output bias starts at arctanh(mean training image)
    #   data_moments - bias as above plus per-pixel weight rescaling so the
    #                  initial output marginals match the training data's
    #                  (one calibration forward pass on noise at init)
    generator_output_gain: float = 1.0
    output_init: str = "fan_in"

    def validate(self):
        positive = (
            self.learning_rate, self.adam_beta1, self.adam_beta2, self.epochs,
            self.batch_size, self.gp_lambda, self.critic_steps_per_gen_step,
            self.noise_dim, self.embed_hidden, self.embed_dim,
            self.generator_output_gain,
        )
        if any(v <= 0 for v in positive):
            raise DataError("all hyperparameters must be positive")
        if len(self.image_shape) < 2:
            raise DataError("image_shape must be (rows, cols)")
        if self.output_init not in ("fan_in", "data_mean", "data_moments"):
            raise DataError("output_init must be fan_in, data_mean or data_moments")
        if self.dtype not in ("float64", "float32"):
            raise DataError("dtype must be float64 or float32")


@dataclass
class NetworkParams:
    """Weights of both networks plus the condition normalization bounds."""

    gen_embed: Mlp
    generator: Mlp
    critic_embed: Mlp
    critic: Mlp
    cond_min: np.ndarray
    cond_max: np.ndarray
    noise_dim: int
    image_shape: tuple = IMAGE_SHAPE

    @property
    def image_dim(self) -> int:
        return int(np.prod(self.image_shape))

    def generator_params(self):
        return self.gen_embed.params + self.generator.params

    def critic_params(self):
        return self.critic_embed.params + self.critic.params

    def param_counts(self) -> dict:
        return {
            "generator": count_params(self.gen_embed, self.generator),
            "critic": count_params(self.critic_embed, self.critic),
        }

    def normalize_conditions(self, cond) -> np.ndarray:
        c = np.atleast_2d(np.asarray(cond, dtype=np.float64))
        span = self.cond_max - self.cond_min
        safe = np.where(span > 0, span, 1.0)
        out = 2.0 * (c - self.cond_min) / safe - 1.0
        return np.where(span > 0, out, 0.0)

    def check_finite(self):
        for p in self.generator_params() + self.critic_params():
            if not np.all(np.isfinite(p)):
                raise DataError("network parameters contain non-finite values")


def build_networks(hyper: WganGpHyperparams, cond_min, cond_max, rng) -> NetworkParams:
    image_dim = int(np.prod(hyper.image_shape))
    e = hyper.embed_dim
    gen_sizes = [hyper.noise_dim + e, *hyper.hidden, image_dim]
    critic_sizes = [image_dim + e, *hyper.hidden, 1]

    base = np.sqrt(3.0)
    gen_gains = [base] * (len(gen_sizes) - 2) + [base * hyper.generator_output_gain]
    act = hyper.hidden_act
    dt = np.dtype(hyper.dtype)

    return NetworkParams(
        gen_embed=Mlp.init([2, hyper.embed_hidden, e], "tanh", rng, hidden_act=act, dtype=dt),
        generator=Mlp.init(gen_sizes, "tanh", rng, hidden_act=act, gains=gen_gains, dtype=dt),
        critic_embed=Mlp.init([2, hyper.embed_hidden, e], "tanh", rng, hidden_act=act,
                              dtype=dt),
        critic=Mlp.init(critic_sizes, "linear", rng, hidden_act=act, dtype=dt),
        cond_min=np.asarray(cond_min, dtype=np.float64),
        cond_max=np.asarray(cond_max, dtype=np.float64),
        noise_dim=hyper.noise_dim,
        image_shape=tuple(hyper.image_shape),
    )


def calibrate_output_layer(netp: NetworkParams, mode: str, mu, sd, z, cond_norm):
    """Match the generator's initial output marginals to the data's.

    mu/sd are per-pixel moments of arctanh(clipped training pixels).  The
    output bias starts at mu; in 'data_moments' mode each output row's
    weights are additionally rescaled so the pre-squash spread over a
    calibration batch (z, cond_norm) matches sd.
    """
    w, b = netp.generator.params[-2], netp.generator.params[-1]
    b[:] = mu
    if mode == "data_moments":
        _, cache = netp.generator.forward(
            np.concatenate([z, netp.gen_embed.forward(cond_norm)[0]], axis=1))
        pre = cache["a"][-1] - b
        current = np.maximum(pre.std(axis=0), 1e-6)
        w *= (np.asarray(sd) / current)[:, None]


# -- losses -------------------------------------------------------------------


def _critic_apply(netp: NetworkParams, x_flat, cond_norm):
    """Critic value on (image, condition); returns scores and caches."""
    emb, emb_cache = netp.critic_embed.forward(cond_norm)
    u = np.concatenate([x_flat, emb], axis=1)
    f, body_cache = netp.critic.forward(u)
    return f, emb_cache, body_cache


def _interpolates(real, fake, u):
    return u * real + (1.0 - u) * fake


def _gp_terms(netp, x_hat, cond_norm, emb):
    """Per-sample gradient norms of the critic w.r.t. the image input."""
    d = x_hat.shape[1]
    u_in = np.concatenate([x_hat, emb], axis=1)
    f, cache = netp.critic.forward(u_in)
    g_full = netp.critic.input_grad(cache, np.ones_like(f))
    g_img = g_full[:, :d]
    s = np.sqrt(np.sum(g_img * g_img, axis=1))
    return s, g_img, cache


def critic_loss(netp: NetworkParams, real, fake, cond_norm, u, gp_lambda: float) -> dict:
    """Loss value only (used directly by the finite-difference checks).

    Returns {"total", "wasserstein", "gp"}; gp is the lambda-weighted term.
    """
    dt = netp.critic.dtype
    real = np.asarray(real, dtype=dt).reshape(len(real), -1)
    fake = np.asarray(fake, dtype=dt).reshape(len(fake), -1)
    u = np.asarray(u, dtype=dt)
    emb, _ = netp.critic_embed.forward(cond_norm)

    f_real, _ = netp.critic.forward(np.concatenate([real, emb], axis=1))
    f_fake, _ = netp.critic.forward(np.concatenate([fake, emb], axis=1))
    wasserstein = float(f_fake.mean() - f_real.mean())

    s, _, _ = _gp_terms(netp, _interpolates(real, fake, u), cond_norm, emb)
    gp = gp_lambda * float(np.mean((s - 1.0) ** 2))
    if not math.isfinite(wasserstein + gp):
        raise TrainingDivergedError(-1, "non-finite critic loss")
    return {"total": wasserstein + gp, "wasserstein": wasserstein, "gp": gp}


def critic_loss_and_grads(netp: NetworkParams, real, fake, cond_norm, u, gp_lambda: float):
    """Loss parts plus gradients aligned with netp.critic_params()."""
    dt = netp.critic.dtype
    real = np.asarray(real, dtype=dt).reshape(len(real), -1)
    fake = np.asarray(fake, dtype=dt).reshape(len(fake), -1)
    u = np.asarray(u, dtype=dt)
    b, d = real.shape
    emb, emb_cache = netp.critic_embed.forward(cond_norm)

    # Wasserstein part: one concatenated pass over [real; fake]
    u_all = np.concatenate(
        [np.concatenate([real, emb], axis=1), np.concatenate([fake, emb], axis=1)])
    f_all, cache_all = netp.critic.forward(u_all)
    wasserstein = float(f_all[b:].mean() - f_all[:b].mean())
    d_out = np.full((2 * b, 1), 1.0 / b, dtype=dt)
    d_out[:b] = -1.0 / b
    body_grads, d_u = netp.critic.backward(cache_all, d_out)
    d_emb = d_u[:b, d:] + d_u[b:, d:]

    # gradient penalty: needs second derivatives through the input gradient
    x_hat = _interpolates(real, fake, u)
    s, g_img, cache_h = _gp_terms(netp, x_hat, cond_norm, emb)
    gp = gp_lambda * float(np.mean((s - 1.0) ** 2))

    s_safe = np.maximum(s, 1e-12)
    coef = (gp_lambda * 2.0 * (s - 1.0) / (s_safe * b))[:, None].astype(dt)
    tangent = np.concatenate([g_img, np.zeros((b, emb.shape[1]), dtype=dt)], axis=1)
    gp_grads, d_u_gp = netp.critic.grad_of_jvp(cache_h, tangent, coef)
    d_emb = d_emb + d_u_gp[:, d:]

    grads = [gw + gg for gw, gg in zip(body_grads, gp_grads)]
    emb_grads, _ = netp.critic_embed.backward(emb_cache, d_emb)

    total = wasserstein + gp
    if not math.isfinite(total):
        raise TrainingDivergedError(-1, "non-finite critic loss")
    return {"total": total, "wasserstein": wasserstein, "gp": gp}, emb_grads + grads


def generator_forward(netp: NetworkParams, z, cond_norm):
    emb, emb_cache = netp.gen_embed.forward(cond_norm)
    y, cache = netp.generator.forward(np.concatenate([z, emb], axis=1))
    return y, emb_cache, cache


def generator_loss(netp: NetworkParams, z, cond_norm) -> float:
    """-mean critic(G(z, c), c); value only."""
    y, _, _ = generator_forward(netp, z, cond_norm)
    f, _, _ = _critic_apply(netp, y, cond_norm)
    return float(-f.mean())


def generator_loss_and_grads(netp: NetworkParams, z, cond_norm):
    b = z.shape[0]
    y, emb_cache, gen_cache = generator_forward(netp, z, cond_norm)
    f, _, critic_cache = _critic_apply(netp, y, cond_norm)
    loss = float(-f.mean())

    d_u = netp.critic.input_grad(
        critic_cache, np.full((b, 1), -1.0 / b, dtype=netp.critic.dtype))
    d_y = d_u[:, : y.shape[1]]  # critic params frozen; embed grad unused
    gen_grads, d_gen_in = netp.generator.backward(gen_cache, d_y)
    d_emb = d_gen_in[:, netp.noise_dim:]
    emb_grads, _ = netp.gen_embed.backward(emb_cache, d_emb)
    if not math.isfinite(loss):
        raise TrainingDivergedError(-1, "non-finite generator loss")
    return loss, emb_grads + gen_grads


# -- data feeding ---------------------------------------------------------------


def _to_preimage(x):
    """arctanh of pixels clipped away from +/-1 (the squash preimage)."""
    return np.arctanh(np.clip(x, -0.995, 0.995))


class ArrayBatches:
    """Minibatches over materialized (images, conditions) arrays."""

    def __init__(self, images, conditions, batch_size: int):
        self.images = np.asarray(images)
        self.conditions = np.asarray(conditions, dtype=np.float64)
        if len(self.images) != len(self.conditions):
            raise DataError("images and conditions must pair up")
        if len(self.images) == 0:
            raise DataError("empty training set")
        self.batch_size = batch_size

    @property
    def images_per_epoch(self) -> int:
        return len(self.images)

    def preimage_moments(self, rng):
        x = _to_preimage(self.images.astype(np.float64).reshape(len(self.images), -1))
        return x.mean(axis=0), x.std(axis=0)

    def epoch_batches(self, order_rng, pad_rng):
        idx = order_rng.permutation(len(self.images))
        for start in range(0, len(idx) - self.batch_size + 1, self.batch_size):
            take = idx[start:start + self.batch_size]
            x = self.images[take].astype(np.float64).reshape(len(take), -1)
            yield x, self.conditions[take]


class AugmentedBatches:
    """Streaming minibatches with fresh virtual padding every epoch.

    Wraps a codec.DatasetEncoder; each epoch visits every link
    `realizations` times (independently shuffled), so the generative model
    sees many virtual-cell realizations of the same real paths without
    materializing them.
    """

    def __init__(self, encoder, batch_size: int, realizations: int = 1):
        if realizations < 1:
            raise DataError("realizations must be >= 1")
        self.encoder = encoder
        self.conditions = encoder.conditions
        self.batch_size = batch_size
        self.realizations = realizations

    @property
    def images_per_epoch(self) -> int:
        return len(self.encoder) * self.realizations

    def preimage_moments(self, rng):
        images, _ = self.encoder.encode_batch(np.arange(len(self.encoder)), rng)
        x = _to_preimage(images.reshape(len(images), -1))
        return x.mean(axis=0), x.std(axis=0)

    def epoch_batches(self, order_rng, pad_rng):
        idx = np.concatenate(
            [order_rng.permutation(len(self.encoder)) for _ in range(self.realizations)])
        for start in range(0, len(idx) - self.batch_size + 1, self.batch_size):
            take = idx[start:start + self.batch_size]
            images, conds = self.encoder.encode_batch(take, pad_rng)
            yield images.reshape(len(take), -1), conds


@dataclass
class TrainingLog:
    """Per-critic-step losses plus model bookkeeping."""

    steps: list = field(default_factory=list)
    critic_losses: list = field(default_factory=list)
    gen_losses: list = field(default_factory=list)  # NaN when no generator step
    gp_terms: list = field(default_factory=list)
    param_counts: dict = field(default_factory=dict)

    def rows(self):
        for s, c, g, p in zip(self.steps, self.critic_losses, self.gen_losses, self.gp_terms):
            yield {"step": s, "critic_loss": c, "gen_loss": g, "gp_term": p}


# -- training -------------------------------------------------------------------


def train_wgan_gp(data, hyper: WganGpHyperparams, seed: int):
    """Train on channel images; returns (NetworkParams, TrainingLog).

    data is an ArrayBatches/AugmentedBatches source or an (images,
    conditions) pair.  Deterministic for fixed seed and thread count: batch
    order, noise, interpolation draws and init each use a named substream
    of the seed.
    """
    hyper.validate()
    if isinstance(data, tuple):
        data = ArrayBatches(data[0], data[1], hyper.batch_size)
    if data.images_per_epoch < hyper.batch_size:
        raise DataError("dataset smaller than one batch; nothing to train on")

    cond = np.asarray(data.conditions, dtype=np.float64)
    netp = build_networks(hyper, cond.min(axis=0), cond.max(axis=0),
                          substream(seed, "init"))
    if hyper.output_init != "fan_in":
        mu, sd = data.preimage_moments(substream(seed, "padding", "init-stats"))
        calib_rng = substream(seed, "init", "calibration")
        n_calib = min(512, len(cond))
        z = calib_rng.standard_normal((n_calib, hyper.noise_dim))
        c = netp.normalize_conditions(cond[calib_rng.integers(len(cond), size=n_calib)])
        calibrate_output_layer(netp, hyper.output_init, mu, sd, z, c)

    opt_c = AdamState.zeros(netp.critic_params())
    opt_g = AdamState.zeros(netp.generator_params())
    log = TrainingLog(param_counts=netp.param_counts())

    dt = np.dtype(hyper.dtype)
    step = 0
    for epoch in range(hyper.epochs):
        order_rng = substream(seed, "batching", epoch)
        pad_rng = substream(seed, "padding", epoch)
        for x, c_raw in data.epoch_batches(order_rng, pad_rng):
            step += 1
            b = x.shape[0]
            x = x.astype(dt, copy=False)
            c = netp.normalize_conditions(c_raw).astype(dt, copy=False)

            z = substream(seed, "noise", step).standard_normal((b, hyper.noise_dim))
            fake, _, _ = generator_forward(netp, z.astype(dt), c)
            u = substream(seed, "gp", step).uniform(size=(b, 1))
            parts, grads = critic_loss_and_grads(
                netp, x, fake, c, u, hyper.gp_lambda)
            adam_step(netp.critic_params(), grads, opt_c,
                      hyper.learning_rate, hyper.adam_beta1, hyper.adam_beta2)

            gen_loss = math.nan
            if step % hyper.critic_steps_per_gen_step == 0:
                z2 = substream(seed, "noise-gen", step).standard_normal(
                    (b, hyper.noise_dim)).astype(dt)
                gen_loss, ggrads = generator_loss_and_grads(netp, z2, c)
                adam_step(netp.generator_params(), ggrads, opt_g,
                          hyper.learning_rate, hyper.adam_beta1, hyper.adam_beta2)

            log.steps.append(step)
            log.critic_losses.append(parts["total"])
            log.gen_losses.append(gen_loss)
            log.gp_terms.append(parts["gp"])
    return netp, log


def sample(netp: NetworkParams, cond, n: int, seed: int) -> np.ndarray:
    """n images under the given condition(s), in [-1, 1].

    cond is one (dist2d, height) pair applied to every sample, or an (n, 2)
    array pairing one condition per sample.  Sample i depends only on
    (seed, i) and its condition, so subsets are stable.
    """
    netp.check_finite()
    if n == 0:
        return np.zeros((0, *netp.image_shape))
    cond = np.asarray(cond, dtype=np.float64)
    if cond.ndim == 1:
        cond = np.broadcast_to(cond, (n, 2))
    if cond.shape != (n, 2):
        raise DataError("cond must be one pair or an (n, 2) array")
    dt = netp.generator.dtype
    c = netp.normalize_conditions(cond).astype(dt)

    z = np.stack([substream(seed, "sampling", i).standard_normal(netp.noise_dim)
                  for i in range(n)]).astype(dt)
    out = np.empty((n, *netp.image_shape))
    for start in range(0, n, 1024):
        stop = min(start + 1024, n)
        y, _, _ = generator_forward(netp, z[start:stop], c[start:stop])
        out[start:stop] = y.reshape(stop - start, *netp.image_shape)
    return out
