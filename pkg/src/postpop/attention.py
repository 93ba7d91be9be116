"""Hashtag-guided attention over token and region features.

Scores mix each content row with a pooled hashtag vector through a tanh
layer, then a masked softmax turns them into per-token and per-region
weights; the content vector is the sum of the two attended features.
Ablation variants: self-attention (pooled hashtag vector forced to zero)
and no-attention (plain means).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numeric import ParamStore, ShapeError, softmax, softmax_backward

ATTENTION_PARAM_NAMES = ("att.Ut", "att.Vt", "att.wt", "att.Ui", "att.Vi", "att.wi")


def init_attention_params(store: ParamStore, rng, d: int, a: int,
                          scale: float = 1.0, dtype=np.float64):
    store.add("att.Ut", (d, a), rng, scale, dtype)
    store.add("att.Vt", (d, a), rng, scale, dtype)
    store.add("att.wt", (a,), rng, scale, dtype)
    store.add("att.Ui", (d, a), rng, scale, dtype)
    store.add("att.Vi", (d, a), rng, scale, dtype)
    store.add("att.wi", (a,), rng, scale, dtype)


@dataclass(frozen=True)
class AttentionOutput:
    alpha_text: np.ndarray
    alpha_image: np.ndarray
    attended_text: np.ndarray
    attended_image: np.ndarray
    content: np.ndarray


@dataclass
class AttentionCache:
    text: np.ndarray
    text_mask: np.ndarray
    image: np.ndarray
    pooled_hashtag: np.ndarray
    y_text: np.ndarray | None
    y_image: np.ndarray
    alpha_text: np.ndarray
    alpha_image: np.ndarray
    use_hashtag_pool: bool


def pooled_hashtag(hashtag_mat: np.ndarray, hashtag_mask: np.ndarray) -> np.ndarray:
    """Masked mean of hashtag rows; zero vector when the post has none."""
    count = hashtag_mask.sum()
    if count == 0:
        return np.zeros(hashtag_mat.shape[1])
    return (hashtag_mask @ hashtag_mat) / count


def hga_attention(text: np.ndarray, text_mask: np.ndarray, image: np.ndarray,
                  hashtag_mat: np.ndarray, hashtag_mask: np.ndarray,
                  params: ParamStore,
                  use_hashtag_pool: bool = True) -> tuple[AttentionOutput, AttentionCache]:
    """Hashtag-guided attention producing the fused content vector.

    text: M x D with binary mask; image: K x D; hashtag_mat: L x D with mask.
    With `use_hashtag_pool` False the pooled hashtag vector is forced to
    zero, which is the self-attention ablation.
    """
    ut, vt, wt = params["att.Ut"], params["att.Vt"], params["att.wt"]
    ui, vi, wi = params["att.Ui"], params["att.Vi"], params["att.wi"]
    d = text.shape[1]
    if image.shape[1] != d or ut.shape[0] != d:
        raise ShapeError(
            f"dimension mismatch: text D={d}, image D={image.shape[1]}, Ut rows={ut.shape[0]}")
    if hashtag_mat.shape[1] != d:
        raise ShapeError(f"hashtag dim {hashtag_mat.shape[1]} != D={d}")
    m, k = text.shape[0], image.shape[0]

    hbar = pooled_hashtag(hashtag_mat, hashtag_mask) if use_hashtag_pool \
        else np.zeros(d)

    # text branch; a fully masked caption contributes nothing
    if text_mask.sum() > 0:
        y_text = np.tanh(text @ ut + hbar @ vt)
        alpha_text = softmax(y_text @ wt, text_mask)
        attended_text = alpha_text @ text
    else:
        y_text = None
        alpha_text = np.zeros(m)
        attended_text = np.zeros(d)

    y_image = np.tanh(image @ ui + hbar @ vi)
    alpha_image = softmax(y_image @ wi)
    attended_image = alpha_image @ image

    out = AttentionOutput(
        alpha_text=alpha_text,
        alpha_image=alpha_image,
        attended_text=attended_text,
        attended_image=attended_image,
        content=attended_text + attended_image,
    )
    cache = AttentionCache(text=text, text_mask=text_mask, image=image,
                           pooled_hashtag=hbar, y_text=y_text, y_image=y_image,
                           alpha_text=alpha_text, alpha_image=alpha_image,
                           use_hashtag_pool=use_hashtag_pool)
    return out, cache


def hga_backward(d_content: np.ndarray, cache: AttentionCache,
                 params: ParamStore) -> tuple[dict[str, np.ndarray], np.ndarray, np.ndarray]:
    """Gradients of the content vector w.r.t. attention params, text, image."""
    ut, vt, wt = params["att.Ut"], params["att.Vt"], params["att.wt"]
    ui, vi, wi = params["att.Ui"], params["att.Vi"], params["att.wi"]
    hbar = cache.pooled_hashtag
    grads = {name: np.zeros_like(params[name]) for name in ATTENTION_PARAM_NAMES}

    d_text = np.zeros_like(cache.text)
    if cache.y_text is not None:
        alpha = cache.alpha_text
        d_alpha = cache.text @ d_content
        d_text += np.outer(alpha, d_content)
        d_score = softmax_backward(alpha, d_alpha, cache.text_mask)
        d_y = np.outer(d_score, wt)
        grads["att.wt"] = cache.y_text.T @ d_score
        d_z = d_y * (1.0 - cache.y_text ** 2)
        grads["att.Ut"] = cache.text.T @ d_z
        d_text += d_z @ ut.T
        if cache.use_hashtag_pool:
            grads["att.Vt"] = np.outer(hbar, d_z.sum(axis=0))

    alpha_i = cache.alpha_image
    d_alpha_i = cache.image @ d_content
    d_image = np.outer(alpha_i, d_content)
    d_score_i = softmax_backward(alpha_i, d_alpha_i)
    d_y_i = np.outer(d_score_i, wi)
    grads["att.wi"] = cache.y_image.T @ d_score_i
    d_z_i = d_y_i * (1.0 - cache.y_image ** 2)
    grads["att.Ui"] = cache.image.T @ d_z_i
    d_image += d_z_i @ ui.T
    if cache.use_hashtag_pool:
        grads["att.Vi"] = np.outer(hbar, d_z_i.sum(axis=0))

    return grads, d_text, d_image


def sa_attention(text, text_mask, image, params) -> tuple[AttentionOutput, AttentionCache]:
    """Self-attention ablation: scoring without the hashtag signal."""
    dummy = np.zeros((1, text.shape[1]))
    return hga_attention(text, text_mask, image, dummy, np.zeros(1), params,
                         use_hashtag_pool=False)


def na_content(text: np.ndarray, text_mask: np.ndarray,
               image: np.ndarray) -> np.ndarray:
    """No-attention ablation: masked token mean plus region mean."""
    count = text_mask.sum()
    text_mean = (text_mask @ text) / count if count > 0 else np.zeros(text.shape[1])
    return text_mean + image.mean(axis=0)


def na_backward(d_content: np.ndarray, text_mask: np.ndarray,
                m: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of na_content w.r.t. text and image rows."""
    count = text_mask.sum()
    d_text = np.zeros((m, d_content.shape[0]))
    if count > 0:
        d_text = np.outer(text_mask / count, d_content)
    d_image = np.tile(d_content / k, (k, 1))
    return d_text, d_image
