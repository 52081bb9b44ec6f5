import logging
from dataclasses import dataclass

import numpy as np

from spectnt.autograd import functional as F
from spectnt.autograd.tensor import Tensor
from spectnt.errors import ConfigError, ContractError, DimensionError
from spectnt.model.config import ModelConfig, Variant
from spectnt.nn.attention import TransformerEncoder
from spectnt.nn.conv import ResidualUnit
from spectnt.nn.layers import Linear
from spectnt.nn.module import Module, parameter, trunc_normal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralEmbedding:
    """[.., T̂, F̂+1, K̂]; frequency row 0 of every frame is the FCT."""

    data: Tensor

    @property
    def fct(self) -> Tensor:
        return self.data[..., 0, :]

    @property
    def bins(self) -> Tensor:
        return self.data[..., 1:, :]


@dataclass(frozen=True)
class TemporalEmbedding:
    """[.., T̂(+1), D]; with ``has_cls`` the temporal class token sits at index 0."""

    data: Tensor
    has_cls: bool = False

    @property
    def frames(self) -> Tensor:
        return self.data[..., 1:, :] if self.has_cls else self.data

    @property
    def cls(self) -> Tensor:
        if not self.has_cls:
            raise ContractError("temporal embedding carries no class token")
        return self.data[..., 0, :]


class ConvModule(Module):
    """Residual front-end: [.., T, F, K] → [.., T̂, F̂, K̂]."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator) -> None:
        self.units = [
            ResidualUnit(
                cfg.channels if i == 0 else cfg.k,
                cfg.k,
                rng,
                ratio_f=cfg.p_f if i == 0 else 1,
                ratio_t=cfg.p_t if i == 0 else 1,
                downsample=cfg.downsample,
            )
            for i in range(cfg.conv_depth)
        ]

    def forward(self, s: Tensor) -> Tensor:
        n = s.ndim
        # [.., T, F, K] → [.., K, F, T] for the convolutions, and back
        x = F.transpose(s, (*range(n - 3), n - 1, n - 2, n - 3))
        for unit in self.units:
            x = unit(x)
        return F.transpose(x, (*range(n - 3), n - 1, n - 2, n - 3))

    __call__ = forward


def attach_fct(s: Tensor, fct: Tensor | None = None) -> SpectralEmbedding:
    """Prepend the frequency class token to every frame: [.., T̂, F̂, K̂] → [.., T̂, F̂+1, K̂].

    Without ``fct`` the token is the zero placeholder; a shared learnable K̂-vector is
    broadcast to every frame otherwise.
    """
    lead = s.shape[:-2]
    if fct is None:
        token = Tensor(np.zeros((*lead, 1, s.shape[-1]), dtype=s.dtype))
    else:
        if fct.shape != (s.shape[-1],):
            raise DimensionError(f"FCT of shape {fct.shape} does not match K̂={s.shape[-1]}")
        token = F.expand(F.reshape(fct, (1, -1)), (*lead, 1, s.shape[-1]))
    return SpectralEmbedding(F.concat([token, s], axis=-2))


def apply_fpe(fpe: Tensor, se: SpectralEmbedding) -> SpectralEmbedding:
    """Add the same frequency positional embedding E^φ at every time step."""
    if fpe.shape != se.data.shape[-2:]:
        raise DimensionError(
            f"FPE shape {fpe.shape} does not match spectral frames {se.data.shape[-2:]}"
        )
    return SpectralEmbedding(se.data + fpe)


def _with_row0(se: Tensor, row: Tensor) -> Tensor:
    """Replace frequency row 0 of every frame by ``row`` ([.., T̂, K̂])."""
    row = F.reshape(row, (*row.shape[:-1], 1, row.shape[-1]))
    return F.concat([row, se[..., 1:, :]], axis=-2)


def _with_frames(te: TemporalEmbedding, frames: Tensor) -> TemporalEmbedding:
    if not te.has_cls:
        return TemporalEmbedding(frames)
    cls = te.data[..., :1, :]
    return TemporalEmbedding(F.concat([cls, frames], axis=-2), has_cls=True)


class SpecTNTBlock(Module):
    """TE→FCT injection, spectral encoding per frame, FCT→TE readout, temporal encoding."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator) -> None:
        variant = cfg.variant
        k, d = cfg.k, cfg.d
        frame_dim = (cfg.f_hat + 1) * k if variant is Variant.A2 else k
        spectral = variant is not Variant.A3
        self.spec = (
            TransformerEncoder(k, cfg.h_k, rng, cfg.ffn_ratio, cfg.dropout) if spectral else None
        )
        self.temp = TransformerEncoder(d, cfg.h_d, rng, cfg.ffn_ratio, cfg.dropout)
        self.bridge_in = Linear(d, frame_dim, rng) if variant in (Variant.FULL, Variant.A2) else None
        self.bridge_out = Linear(frame_dim, d, rng) if spectral else None
        self.variant = variant

    def forward(
        self,
        se: SpectralEmbedding,
        te: TemporalEmbedding,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[SpectralEmbedding, TemporalEmbedding]:
        if te.frames.shape[-2] != se.data.shape[-3]:
            raise DimensionError(
                f"TE has {te.frames.shape[-2]} frames but SE has {se.data.shape[-3]}"
            )
        if self.variant is Variant.A3:
            return se, TemporalEmbedding(self.temp(te.data, train, rng), te.has_cls)

        like = self.temp.norm1.gain
        te = TemporalEmbedding(F.match_dtype(te.data, like), te.has_cls)
        x = F.match_dtype(se.data, like)
        e = te.frames
        full_frame = self.variant is Variant.A2
        if self.bridge_in is not None:
            if full_frame:
                flat = F.reshape(x, (*x.shape[:-2], -1))
                x = F.reshape(flat + self.bridge_in(e), x.shape)
            else:
                x = _with_row0(x, x[..., 0, :] + self.bridge_in(e))
        x = self.spec(x, train, rng)
        readout = F.reshape(x, (*x.shape[:-2], -1)) if full_frame else x[..., 0, :]
        updated = _with_frames(te, e + self.bridge_out(readout))
        te_out = TemporalEmbedding(self.temp(updated.data, train, rng), te.has_cls)
        return SpectralEmbedding(x), te_out

    __call__ = forward


def output_head_frame(te: TemporalEmbedding, head: Linear, mode: str = "softmax") -> Tensor:
    """Shared fully-connected layer per time step: [.., T̂, D] → [.., T̂, classes]."""
    if te.has_cls:
        raise ContractError("frame-wise head expects a temporal embedding without class token")
    logits = head(te.data)
    if mode == "softmax":
        return F.softmax(logits, axis=-1)
    if mode == "sigmoid":
        return F.sigmoid(logits)
    raise ConfigError(f"unknown head activation {mode!r}")


def output_head_clip(te: TemporalEmbedding, head: Linear) -> Tensor:
    """sigmoid(Linear(ε^L)); reads only the temporal class token."""
    if not te.has_cls:
        raise ContractError("clip-level head needs the temporal class token")
    return F.sigmoid(head(te.cls))


class SpecTNT(Module):
    """Conv module → FCT → FPE → TE (+class token) → L SpecTNT blocks → output head."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator | int = 0) -> None:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        self.config = cfg
        self.conv = ConvModule(cfg, rng)
        self.fct = parameter(trunc_normal(rng, (cfg.k,))) if cfg.variant is Variant.A1 else None
        self.fpe = parameter(trunc_normal(rng, (cfg.f_hat + 1, cfg.k)))
        self.te_init = parameter(trunc_normal(rng, (cfg.t_hat, cfg.d)))
        self.cls_init = None if cfg.framewise else parameter(trunc_normal(rng, (1, cfg.d)))
        self.input_proj = Linear(cfg.k, cfg.d, rng) if cfg.variant is Variant.A3 else None
        for i in range(cfg.L):
            setattr(self, f"block{i}", SpecTNTBlock(cfg, rng))
        self.head = Linear(cfg.d, cfg.classes, rng)

    @property
    def blocks(self) -> list[SpecTNTBlock]:
        return [getattr(self, f"block{i}") for i in range(self.config.L)]

    def embed(self, s: Tensor) -> tuple[SpectralEmbedding, TemporalEmbedding]:
        """Input spectrogram → (SE⁰, TE⁰)."""
        cfg = self.config
        if s.ndim not in (3, 4):
            raise DimensionError(f"expected input [T, F, K] or [B, T, F, K], got {s.shape}")
        if s.shape[-2:] != (cfg.bins, cfg.channels):
            raise DimensionError(
                f"input has (F, K)={s.shape[-2:]}, config expects ({cfg.bins}, {cfg.channels})"
            )
        feats = self.conv(s)
        lead, t_hat = feats.shape[:-3], feats.shape[-3]
        if t_hat > cfg.t_hat:
            raise DimensionError(f"input yields {t_hat} frames, TE holds at most {cfg.t_hat}")

        se = apply_fpe(self.fpe, attach_fct(feats, self.fct))
        te = F.expand(self.te_init[:t_hat], (*lead, t_hat, cfg.d))
        if self.input_proj is not None:
            te = te + self.input_proj(F.mean(feats, axis=-2))
        if self.cls_init is None:
            return se, TemporalEmbedding(te)
        cls = F.expand(self.cls_init, (*lead, 1, cfg.d))
        return se, TemporalEmbedding(F.concat([cls, te], axis=-2), has_cls=True)

    def forward(
        self,
        s: Tensor | np.ndarray,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """[.., T, F, K] → [.., classes] (clip tasks) or [.., T̂, classes] (frame tasks)."""
        if not isinstance(s, Tensor):
            s = Tensor(np.asarray(s, dtype=self.fpe.dtype))
        s = F.match_dtype(s, self.fpe)
        se, te = self.embed(s)
        for block in self.blocks:
            se, te = block(se, te, train, rng)
        if self.config.framewise:
            return output_head_frame(te, self.head, self.config.head_activation)
        return output_head_clip(te, self.head)

    __call__ = forward


def build_variant(cfg: ModelConfig, seed: int = 0) -> SpecTNT:
    """Construct exactly the parameters ``cfg.variant`` uses."""
    model = SpecTNT(cfg, np.random.default_rng(seed))
    logger.debug("built %s variant with %d parameters", cfg.variant.value, model.param_count())
    return model
