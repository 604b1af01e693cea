"""Two-sided estimates of the commuting-pair tensor norm.

The norm of a tensor in E1 (x) E2 is the supremum of
||sum sigma1(x_i) sigma2(y_i)|| over pairs of completely contractive maps
into a common matrix algebra whose ranges commute.

Upper bounds come from the decomposition formula: the norm equals the
infimum over splittings t = v + w of the Haagerup value of v plus the
Haagerup value of the transposed w computed in the swapped order.  Any
concrete split therefore gives a feasible upper bound.

Lower bounds come from explicit commuting pairs: the spatial pair (which
reproduces the minimal norm exactly), pairs sampled through commutants,
and pairs assembled from the strictly upper triangular 3 x 3 block
construction, which turns any quadruple of maps satisfying the product
identity alpha1(x) alpha2(y) = beta2(y) beta1(x) into a commuting pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._optim import substream
from .cbnorm import (
    CbOptions,
    NormEstimate,
    cb_upper_bound,
)
from .exceptions import IdentityViolated, ShapeMismatch
from .haagerup import (
    HaagerupOptions,
    _optimize_pair,
    _stacks,
    haagerup_upper,
    initial_decomposition,
    Decomposition,
)
from .matcore import commutant_basis
from .opspace import (
    ConcreteOperatorSpace,
    SpaceMap,
    TensorElement,
    map_images,
    space_map,
    standard_space,
    tensor_element,
    transpose_tensor,
)

__all__ = [
    "CommutingPairSample",
    "MuWindow",
    "MuOptions",
    "mu_upper",
    "mu_lower",
    "mu_window",
    "mu_of_space",
    "pair_eval",
    "tensor_split_sample",
    "theorem2_blocks",
    "random_block_quadruple",
]


@dataclass(frozen=True)
class MuOptions(HaagerupOptions):
    splits: int = 11          # extreme, transposed-extreme, midpoint + random
    rounds: int = 10
    inner_iters: int = 40
    samples_commutant: int = 200
    samples_block: int = 100
    ambient_k: int = 4
    sample_cb_iters: int = 60
    sample_cb_restarts: int = 2

    def sample_cb_options(self) -> CbOptions:
        return CbOptions(restarts=self.sample_cb_restarts,
                         iters=self.sample_cb_iters, seed=self.seed)

    def haagerup_options(self) -> HaagerupOptions:
        return HaagerupOptions(restarts=self.restarts, iters=self.iters,
                               seed=self.seed, tol=self.tol,
                               rank_slack=self.rank_slack)


@dataclass(frozen=True)
class CommutingPairSample:
    """A pair of maps into a common matrix algebra with commuting ranges."""

    k: int
    sigma1: SpaceMap
    sigma2: SpaceMap
    cb1: NormEstimate
    cb2: NormEstimate
    provenance: str
    v_contraction: np.ndarray | None = None
    w_contraction: np.ndarray | None = None

    def __post_init__(self):
        if self.sigma1.codomain.ambient != (self.k, self.k):
            raise ShapeMismatch("sigma1 must map into the common matrix algebra")
        if self.sigma2.codomain.ambient != (self.k, self.k):
            raise ShapeMismatch("sigma2 must map into the common matrix algebra")
        imgs1 = map_images(self.sigma1)
        imgs2 = map_images(self.sigma2)
        resid = _max_commutator(imgs1, imgs2)
        if resid > 1e-10:
            raise ShapeMismatch(f"ranges do not commute (residual {resid:.2e})")


def _max_commutator(imgs1, imgs2) -> float:
    worst = 0.0
    for a in imgs1:
        for b in imgs2:
            worst = max(worst, _kernels.sigma_max(a @ b - b @ a))
    return worst


@dataclass(frozen=True)
class MuWindow:
    """A bracket [lower, upper] around the true norm value."""

    lower: NormEstimate
    upper: NormEstimate

    def __post_init__(self):
        if self.lower.value > self.upper.value + 1e-6:
            raise ShapeMismatch(
                f"window inverted: lower {self.lower.value} > upper {self.upper.value}"
            )


def pair_eval(sample: CommutingPairSample, t: TensorElement, normalize=False):
    """Evaluate sum c_ij sigma1(b_i) sigma2(b'_j) and its operator norm."""
    if sample.sigma1.domain.dim != t.left.dim or sample.sigma2.domain.dim != t.right.dim:
        raise ShapeMismatch("sample domains do not match the tensor spaces")
    imgs1 = map_images(sample.sigma1)
    imgs2 = map_images(sample.sigma2)
    mat = np.einsum("ij,iab,jbc->ac", t.coeffs, imgs1, imgs2)
    value = _kernels.sigma_max(mat)
    if normalize:
        denom = sample.cb1.value * sample.cb2.value
        if denom > 0:
            value = value / denom
            mat = mat / denom
    return mat, float(value)


def _pad_square(mats) -> np.ndarray:
    """Embed p x q matrices into s x s with s = max(p, q), zero padded."""
    m, p, q = mats.shape
    s = max(p, q)
    out = np.zeros((m, s, s), dtype=complex)
    out[:, :p, :q] = mats
    return out


def tensor_split_sample(t: TensorElement) -> CommutingPairSample:
    """The spatial pair sigma1 = x (x) 1, sigma2 = 1 (x) y.

    Both maps are restrictions of complete isometries (ambient inclusion
    padded to square, tensored with the identity), so their cb norms are
    exactly one and the pair evaluation reproduces the minimal norm.
    """
    s1 = max(t.left.ambient)
    s2 = max(t.right.ambient)
    k = s1 * s2
    full_k = standard_space("full", (k, k))
    left_sq = _pad_square(t.left.basis)
    right_sq = _pad_square(t.right.basis)
    eye1 = np.eye(s1)
    eye2 = np.eye(s2)
    imgs1 = np.array([np.kron(a, eye2) for a in left_sq])
    imgs2 = np.array([np.kron(eye1, b) for b in right_sq])
    sigma1 = space_map(t.left, full_k, imgs1.reshape(t.left.dim, -1).T)
    sigma2 = space_map(t.right, full_k, imgs2.reshape(t.right.dim, -1).T)
    one = NormEstimate(1.0, "exact", None, {"path": "complete_isometry"})
    return CommutingPairSample(k, sigma1, sigma2, one, one, "tensor_split")


def theorem2_blocks(alpha1: SpaceMap, alpha2: SpaceMap,
                    beta1: SpaceMap, beta2: SpaceMap):
    """Strictly upper triangular 3 x 3 block pair from an admissible quadruple.

    Requires alpha1(x) alpha2(y) = beta2(y) beta1(x) for all basis pairs
    (within 1e-10).  Returns (sigma1, sigma2, V, W) on H1 + H2 + H3 where
    sigma1(x) carries alpha1(x) in block (1,2) and beta1(x) in block (2,3),
    sigma2(y) carries beta2(y) in block (1,2) and alpha2(y) in block (2,3);
    then sigma1(x) sigma2(y) = sigma2(y) sigma1(x) has the common product
    in the corner and W sigma1(x) sigma2(y) V recovers it.
    """
    d1, d2 = alpha1.codomain.ambient
    if alpha2.codomain.ambient != (d2, d1):
        raise ShapeMismatch("alpha2 must map into the reversed rectangle")
    if beta1.codomain.ambient != (d2, d1) or beta2.codomain.ambient != (d1, d2):
        raise ShapeMismatch("beta legs must map into the transposed rectangles")
    a1 = map_images(alpha1)
    a2 = map_images(alpha2)
    b1 = map_images(beta1)
    b2 = map_images(beta2)
    resid = 0.0
    for x in range(a1.shape[0]):
        for y in range(a2.shape[0]):
            resid = max(resid, _kernels.sigma_max(a1[x] @ a2[y] - b2[y] @ b1[x]))
    if resid > 1e-10:
        raise IdentityViolated(f"product identity residual {resid:.2e} > 1e-10")

    k = d1 + d2 + d1
    full_k = standard_space("full", (k, k))

    def lift(upper, lower):
        out = np.zeros((upper.shape[0], k, k), dtype=complex)
        out[:, :d1, d1:d1 + d2] = upper
        out[:, d1:d1 + d2, d1 + d2:] = lower
        return out

    imgs1 = lift(a1, b1)
    imgs2 = lift(b2, a2)
    sigma1 = space_map(alpha1.domain, full_k, imgs1.reshape(imgs1.shape[0], -1).T)
    sigma2 = space_map(alpha2.domain, full_k, imgs2.reshape(imgs2.shape[0], -1).T)
    w = np.zeros((d1, k), dtype=complex)
    w[:, :d1] = np.eye(d1)
    v = np.zeros((k, d1), dtype=complex)
    v[d1 + d2:, :] = np.eye(d1)
    return sigma1, sigma2, v, w


def random_block_quadruple(e1: ConcreteOperatorSpace, e2: ConcreteOperatorSpace,
                           rng, d1: int = 2, opts: MuOptions | None = None):
    """Random admissible quadruple, contractive after joint rescaling.

    The alphas are free draws; beta2 is a free draw wide enough that the
    beta1 images solving the product identity by least squares are exact
    (generic d2 >= m2 d1); quadruples whose residual still exceeds 1e-10
    are rejected by ``theorem2_blocks``.
    """
    opts = opts or MuOptions()
    m1, m2 = e1.dim, e2.dim
    d2 = max(m2 * d1, d1)

    def draw(m, p, q):
        return rng.standard_normal((m, p, q)) + 1j * rng.standard_normal((m, p, q))

    fa1 = standard_space("full", (d1, d2))
    fa2 = standard_space("full", (d2, d1))

    a1_imgs = draw(m1, d1, d2)
    a2_imgs = draw(m2, d2, d1)
    alpha1 = space_map(e1, fa1, a1_imgs.reshape(m1, -1).T)
    alpha2 = space_map(e2, fa2, a2_imgs.reshape(m2, -1).T)
    # normalize the alphas to complete contractions
    n1 = cb_upper_bound(alpha1, opts.sample_cb_options()).value
    n2 = cb_upper_bound(alpha2, opts.sample_cb_options()).value
    alpha1 = space_map(e1, fa1, alpha1.coeffs / max(n1, 1e-30))
    alpha2 = space_map(e2, fa2, alpha2.coeffs / max(n2, 1e-30))
    a1_imgs = map_images(alpha1)
    a2_imgs = map_images(alpha2)

    b2_imgs = draw(m2, d1, d2)
    stacked = b2_imgs.reshape(m2 * d1, d2)
    prod = np.einsum("iab,jbc->ijac", a1_imgs, a2_imgs)  # (m1, m2, d1, d1)
    rhs = prod.transpose(1, 2, 0, 3).reshape(m2 * d1, m1 * d1)
    b1_flat = np.linalg.lstsq(stacked, rhs, rcond=None)[0]  # (d2, m1*d1)
    b1_imgs = b1_flat.reshape(d2, m1, d1).transpose(1, 0, 2)
    beta1 = space_map(e1, fa2, b1_imgs.reshape(m1, -1).T)
    beta2 = space_map(e2, fa1, b2_imgs.reshape(m2, -1).T)

    # joint rescaling keeps the identity while making the betas contractive
    t1 = cb_upper_bound(beta1, opts.sample_cb_options()).value
    t2 = cb_upper_bound(beta2, opts.sample_cb_options()).value
    tau = max(t1, t2, 1.0)
    scale = 1.0 / tau
    alpha1 = space_map(e1, fa1, alpha1.coeffs * scale)
    alpha2 = space_map(e2, fa2, alpha2.coeffs * scale)
    beta1 = space_map(e1, fa2, beta1.coeffs * scale)
    beta2 = space_map(e2, fa1, beta2.coeffs * scale)
    return alpha1, alpha2, beta1, beta2


def mu_upper(t: TensorElement, opts: MuOptions | None = None) -> NormEstimate:
    """Best found splitting bound inf over t = v + w of H(v) + H(transpose w).

    The extreme splits v = t and v = 0 are always evaluated with the full
    decomposition budget; the remaining candidates alternate between
    decomposition descent on both halves and a line-searched gradient
    step in the free split matrix, tracking the right factors by least
    squares.  The certificate re-evaluates through its two decompositions.
    """
    opts = opts or MuOptions()
    if t.is_zero:
        return NormEstimate(0.0, "exact", None, {"path": "zero_tensor"})

    hop = opts.haagerup_options()
    tt = transpose_tensor(t)
    candidates = []

    est_fwd = haagerup_upper(t, hop)
    candidates.append((est_fwd.value, 0,
                       {"v": t.coeffs, "dec_v": est_fwd.certificate, "dec_w": None}))
    est_bwd = haagerup_upper(tt, hop)
    candidates.append((est_bwd.value, 1,
                       {"v": np.zeros_like(t.coeffs), "dec_v": None,
                        "dec_w": est_bwd.certificate}))

    scale = float(np.linalg.norm(t.coeffs))
    rng = substream(opts.seed, 50)
    starts = [0.5 * t.coeffs]
    for _ in range(max(0, opts.splits - 3)):
        z = rng.standard_normal(t.coeffs.shape) + 1j * rng.standard_normal(t.coeffs.shape)
        starts.append(0.5 * t.coeffs + 0.25 * scale * z / np.linalg.norm(z))

    inner = HaagerupOptions(restarts=1, iters=opts.inner_iters, seed=opts.seed,
                            rank_slack=opts.rank_slack)
    for cidx, v0 in enumerate(starts):
        state = _alternate_split(t, v0, opts, inner, cidx)
        if state is not None:
            candidates.append((state[0], 2 + cidx, state[1]))

    candidates.sort(key=lambda c: (c[0], c[1]))
    value, _, best = candidates[0]
    trace = {"path": "split_alternation", "candidates": len(candidates),
             "seed": opts.seed, "converged": bool(np.isfinite(value))}
    cert = {"kind": "mu_split", "v_coeffs": best["v"],
            "dec_v": best["dec_v"], "dec_w": best["dec_w"]}
    return NormEstimate(float(value), "upper", cert, trace)


def _descend_half(coeffs, left_space, right_space, inner, key):
    """Decomposition descent for one half; returns (value, dec) or zero."""
    half = tensor_element(left_space, right_space, coeffs)
    if half.is_zero:
        return 0.0, None
    dec0 = initial_decomposition(half, 0)
    left, right, value, _ = _optimize_pair(
        dec0.left, dec0.right, left_space.basis, right_space.basis, inner, key
    )
    if not np.isfinite(value):
        return float(np.inf), None
    resolved = np.linalg.lstsq(left.T, half.coeffs, rcond=None)[0]
    dec = Decomposition(left, resolved, half)
    if dec.reconstruction_error() > 1e-10 * max(1.0, float(np.abs(coeffs).max())):
        dec = dec0
    from .haagerup import evaluate_decomposition

    return evaluate_decomposition(dec), dec


def _alternate_split(t, v0, opts, inner, cidx):
    """Alternating optimization of one split candidate."""
    v = np.asarray(v0, dtype=complex)
    best = None
    for rnd in range(opts.rounds):
        w_t = (t.coeffs - v).T
        val_v, dec_v = _descend_half(v, t.left, t.right, inner, 100 + cidx)
        val_w, dec_w = _descend_half(w_t, t.right, t.left, inner, 200 + cidx)
        total = val_v + val_w
        if best is None or total < best[0]:
            best = (total, {"v": v.copy(), "dec_v": dec_v, "dec_w": dec_w})
        if dec_v is None or dec_w is None:
            break
        v_new = _split_step(t, v, dec_v, dec_w)
        if v_new is None:
            break
        v = v_new
    return best


def _split_step(t, v, dec_v, dec_w):
    """Line-searched descent step in the split matrix.

    With the left factors held fixed, the right factors track the split by
    least squares, so each half objective is smooth in the split matrix.
    """
    basis1, basis2 = t.left.basis, t.right.basis
    l1 = dec_v.left
    l2 = dec_w.left
    p1 = np.linalg.pinv(l1.T)   # (r1, m1)
    p2 = np.linalg.pinv(l2.T)   # (r2, m2)

    def half_value_pairing(lmat, rmat, bl, br):
        xa, yb = _stacks(lmat, rmat, bl, br)
        fa = _kernels.sigma_max(xa)
        fb, ub, vb, _ = _kernels.top_triple(yb)
        gb = np.outer(ub, vb.conj()).reshape(rmat.shape[0], br.shape[1], br.shape[2])
        wb = np.einsum("iab,jab->ij", gb.conj(), br)
        return fa, fb, wb

    def eval_and_grad(vc):
        r1mat = p1 @ vc
        r2mat = p2 @ (t.coeffs - vc).T
        fa1, fb1, wb1 = half_value_pairing(l1, r1mat, basis1, basis2)
        fa2, fb2, wb2 = half_value_pairing(l2, r2mat, basis2, basis1)
        # d r1 = p1 dV ; d r2 = p2 d(t - V)^T = -p2 dV^T
        g1 = fa1 * (p1.T @ wb1)            # pairing on dV
        g2 = fa2 * (p2.T @ wb2)            # pairing on d(t-V)^T
        grad = g1 - g2.T
        return fa1 * fb1 + fa2 * fb2, grad

    def value_of(vc):
        r1mat = p1 @ vc
        r2mat = p2 @ (t.coeffs - vc).T
        xa1, yb1 = _stacks(l1, r1mat, basis1, basis2)
        xa2, yb2 = _stacks(l2, r2mat, basis2, basis1)
        return (_kernels.sigma_max(xa1) * _kernels.sigma_max(yb1)
                + _kernels.sigma_max(xa2) * _kernels.sigma_max(yb2))

    base, grad = eval_and_grad(v)
    gnorm = float(np.linalg.norm(grad))
    if not np.isfinite(gnorm) or gnorm == 0:
        return None
    step = 0.25 * max(1.0, float(np.linalg.norm(v))) / gnorm
    for _ in range(12):
        trial = v - step * np.conj(grad)
        if value_of(trial) < base - 1e-12:
            return trial
        step *= 0.5
    return None


def mu_lower(t: TensorElement, opts: MuOptions | None = None) -> NormEstimate:
    """Best commuting-pair evaluation over the three sampling families.

    The spatial family is always included and realizes the minimal norm
    exactly, so the result never falls below it.  Sampled maps are
    normalized by certified cb upper bounds (exact closed forms for
    hilbertian domains, representation bounds otherwise), which keeps
    every sample value a sound lower bound.
    """
    opts = opts or MuOptions()
    if t.is_zero:
        return NormEstimate(0.0, "exact", None, {"path": "zero_tensor"})

    best_sample = tensor_split_sample(t)
    _, best_value = pair_eval(best_sample, t)
    counts = {"tensor_split": 1, "commutant_sampled": 0, "theorem2_block": 0}

    rng = substream(opts.seed, 60)
    k = opts.ambient_k
    full_k = standard_space("full", (k, k))
    cbo = opts.sample_cb_options()

    for _ in range(opts.samples_commutant):
        imgs1 = rng.standard_normal((t.left.dim, k, k)) + 1j * rng.standard_normal(
            (t.left.dim, k, k))
        sigma1 = space_map(t.left, full_k, imgs1.reshape(t.left.dim, -1).T)
        n1 = cb_upper_bound(sigma1, cbo)
        if n1.value <= 0:
            continue
        imgs1 = imgs1 / n1.value
        comm = commutant_basis(list(imgs1))
        weights = rng.standard_normal((t.right.dim, len(comm))) + 1j * rng.standard_normal(
            (t.right.dim, len(comm)))
        imgs2 = np.einsum("mc,cab->mab", weights, np.array(comm))
        sigma2 = space_map(t.right, full_k, imgs2.reshape(t.right.dim, -1).T)
        n2 = cb_upper_bound(sigma2, cbo)
        if n2.value <= 0:
            continue
        imgs2 = imgs2 / n2.value
        counts["commutant_sampled"] += 1
        value = _kernels.sigma_max(
            np.einsum("ij,iab,jbc->ac", t.coeffs, imgs1, imgs2))
        if value > best_value:
            one = NormEstimate(1.0, "upper", None, {"path": "normalized"})
            best_value = value
            best_sample = CommutingPairSample(
                k, space_map(t.left, full_k, imgs1.reshape(t.left.dim, -1).T),
                space_map(t.right, full_k, imgs2.reshape(t.right.dim, -1).T),
                one, one, "commutant_sampled")

    for _ in range(opts.samples_block):
        try:
            quad = random_block_quadruple(t.left, t.right, rng, d1=2, opts=opts)
            sigma1, sigma2, v, w = theorem2_blocks(*quad)
        except IdentityViolated:
            continue
        counts["theorem2_block"] += 1
        one = NormEstimate(1.0, "upper", None, {"path": "normalized"})
        sample = CommutingPairSample(sigma1.codomain.ambient_rows, sigma1, sigma2,
                                     one, one, "theorem2_block",
                                     v_contraction=v, w_contraction=w)
        _, value = pair_eval(sample, t)
        if value > best_value:
            best_value = value
            best_sample = sample

    trace = {"path": "commuting_pair_oracle", "seed": opts.seed,
             "samples": counts, "converged": True}
    return NormEstimate(float(best_value), "lower", best_sample, trace)


def mu_window(t: TensorElement, opts: MuOptions | None = None) -> MuWindow:
    return MuWindow(mu_lower(t, opts), mu_upper(t, opts))


def mu_of_space(e: ConcreteOperatorSpace, opts: MuOptions | None = None) -> MuWindow:
    """Window around the norm of the identity tensor of a space.

    The upper side routes the identity map through the splitting of
    factorization norms (gamma-row + gamma-column), which the finite rank
    identities equate with the tensor-level splitting bound.  The lower
    side always contains 1 (the spatial evaluation of the identity);
    row/column spaces also evaluate the concrete identity tensor in the
    dual pairing, and every space draws commutant-paired samples through
    the unit ball of M_k(E), whose elements are exactly the completely
    contractive maps out of the dual.
    """
    from .factornorms import GammaOptions, split_norm
    from .opspace import identity_map

    opts = opts or MuOptions()
    gopts = GammaOptions(restarts=opts.restarts, iters=opts.iters, seed=opts.seed,
                         splits=max(3, opts.splits // 2), rounds=opts.rounds,
                         inner_iters=opts.inner_iters)
    upper = split_norm(identity_map(e), gopts)

    lower_value = 1.0
    lower_cert = {"kind": "identity_spatial"}
    if e.kind in ("row", "column"):
        dual_kind = "column" if e.kind == "row" else "row"
        dual = standard_space(dual_kind, e.dim)
        t_id = tensor_element(dual, e, np.eye(e.dim))
        est = mu_lower(t_id, opts)
        if est.value > lower_value:
            lower_value = est.value
            lower_cert = est.certificate

    # pairing oracle: an element of the unit ball of M_k(E) is a cb
    # contraction from the dual, evaluated against the identity tensor
    rng = substream(opts.seed, 61)
    k = opts.ambient_k
    cbo = opts.sample_cb_options()
    full_k = standard_space("full", (k, k))
    for _ in range(opts.samples_commutant):
        cmats = rng.standard_normal((e.dim, k, k)) + 1j * rng.standard_normal(
            (e.dim, k, k))
        ball = np.einsum("mij,mab->iajb", cmats, e.basis).reshape(
            k * e.ambient_rows, k * e.ambient_cols)
        nball = _kernels.sigma_max(ball)
        if nball <= 0:
            continue
        cmats = cmats / nball
        comm = commutant_basis(list(cmats))
        weights = rng.standard_normal((e.dim, len(comm))) + 1j * rng.standard_normal(
            (e.dim, len(comm)))
        imgs2 = np.einsum("mc,cab->mab", weights, np.array(comm))
        sigma2 = space_map(e, full_k, imgs2.reshape(e.dim, -1).T)
        n2 = cb_upper_bound(sigma2, cbo)
        if n2.value <= 0:
            continue
        imgs2 = imgs2 / n2.value
        value = _kernels.sigma_max(np.einsum("iab,ibc->ac", cmats, imgs2))
        if value > lower_value:
            lower_value = value
            lower_cert = {"kind": "dual_ball_pairing", "coeffs": cmats,
                          "partner": imgs2}

    lower = NormEstimate(float(lower_value), "lower", lower_cert,
                         {"path": "identity_oracle", "seed": opts.seed,
                          "converged": True})
    return MuWindow(lower, upper)
