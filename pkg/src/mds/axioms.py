"""Sampled checks of the timelike-line axioms h1-h6 and the time axioms t1-t6."""
import numpy as np

from .circle import angular_distance, ccw, in_open_arc, normalize, separates_batch
from .harmonic import (
    causal_class_batch,
    common_perp_batch,
    W_END,
    _expit,
    conjugate_batch,
    harmonic_residual_batch,
    line_time_batch,
    point_at_time_batch,
    time_batch,
)
from .moebius import min_gap_rows
from .sampling import ChunkResult, draw_cyclic, random_orientation
from .tolerances import DEFAULT, Tolerances

TIME_TOL = 1e-9      # time identities
ANGLE_TOL = 1e-8     # recovered points and events


def _result(margins, ok, rows, skipped=0, **extras):
    return ChunkResult(np.asarray(margins, float), np.asarray(ok, bool), np.asarray(rows, float), skipped, extras)


def _events_and_points(rng, n, mg):
    """Rows (e1, e2, x) with x off e, in random orientation."""
    Q, skipped = draw_cyclic(rng, n, 3, mg)
    Q = random_orientation(rng, Q)
    perm = rng.permuted(np.tile(np.arange(3), (len(Q), 1)), axis=1)
    return np.take_along_axis(Q, perm, axis=1), skipped


def h1(M, rng, n, tol: Tolerances = DEFAULT):
    """x_e exists: the conjugate is found with a vanishing harmonic residual."""
    R, skipped = _events_and_points(rng, n, tol.delta_min)
    e1, e2, x = R.T
    y = conjugate_batch(M, e1, e2, x, tol)
    res = np.abs(harmonic_residual_batch(M, x, y, e1, e2))
    return _result(res, res < TIME_TOL, np.column_stack([e1, e2, x, y]), skipped)


def h2(M, rng, n, tol: Tolerances = DEFAULT):
    """Every event x_e of h_e separates e."""
    R, skipped = _events_and_points(rng, n, tol.delta_min)
    e1, e2, x = R.T
    y = conjugate_batch(M, e1, e2, x, tol)
    ok = separates_batch(x, y, e1, e2)
    gap = np.minimum(angular_distance(y, e1), angular_distance(y, e2))
    return _result(gap, ok, np.column_stack([e1, e2, x, y]), skipped)


def h3(M, rng, n, tol: Tolerances = DEFAULT):
    """Two events on one h_e are never Separate."""
    Q, skipped = draw_cyclic(rng, n, 4, tol.delta_min)
    Q = random_orientation(rng, Q)
    e1, x1, x2, e2 = Q.T          # x1, x2 on the same arc of e, so the events differ
    y1, y2 = conjugate_batch(M, e1, e2, x1, tol), conjugate_batch(M, e1, e2, x2, tol)
    cls = causal_class_batch(x1, y1, x2, y2, tol.eps_pt)
    return _result(cls, cls != 0, np.column_stack([e1, e2, x1, y1, x2, y2]), skipped)


def _multiplicity(M, e1, e2, x, grid):
    x_in = in_open_arc(x, e1, e2)
    start = np.where(x_in, e2, e1)
    length = np.where(x_in, ccw(e2, e1), ccw(e1, e2))
    lam = _expit(np.linspace(-W_END, W_END, grid))   # logit grid resolves roots near the ends
    ys = normalize(start[:, None] + lam[None, :] * length[:, None])
    r = harmonic_residual_batch(M, x[:, None], ys, e1[:, None], e2[:, None])
    return np.count_nonzero(np.diff(np.sign(r), axis=1) != 0, axis=1)


def h4(M, rng, n, tol: Tolerances = DEFAULT, grid=512):
    """x_e is unique: exactly one sign change of the residual along the searched arc."""
    R, skipped = _events_and_points(rng, n, tol.delta_min)
    e1, e2, x = R.T
    m = np.concatenate([_multiplicity(M, e1[i:i + 1000], e2[i:i + 1000], x[i:i + 1000], grid)
                        for i in range(0, len(x), 1000)]) if len(x) else np.zeros(0)
    return _result(m, m == 1, R, skipped, max_multiplicity=int(m.max()) if len(m) else 0)


def h5(M, rng, n, tol: Tolerances = DEFAULT):
    """a in h_e implies e in h_a: the residual with roles swapped also vanishes."""
    R, skipped = _events_and_points(rng, n, tol.delta_min)
    e1, e2, x = R.T
    y = conjugate_batch(M, e1, e2, x, tol)
    swapped = np.abs(harmonic_residual_batch(M, e1, e2, x, y))
    return _result(swapped, swapped < TIME_TOL, np.column_stack([e1, e2, x, y]), skipped)


def h6(M, rng, n, tol: Tolerances = DEFAULT):
    """Two events on h_e lie on no other timelike line: their perpendicular is e."""
    Q, skipped = draw_cyclic(rng, n, 4, tol.delta_min)
    Q = random_orientation(rng, Q)
    e1, x1, x2, e2 = Q.T
    y1, y2 = conjugate_batch(M, e1, e2, x1, tol), conjugate_batch(M, e1, e2, x2, tol)
    keep = min_gap_rows(np.column_stack([e1, e2, x1, y1, x2, y2])) >= tol.delta_min
    skipped += int((~keep).sum())
    e1, e2, x1, y1, x2, y2 = (v[keep] for v in (e1, e2, x1, y1, x2, y2))
    p, q = common_perp_batch(M, x1, y1, x2, y2, tol)
    err = np.minimum(np.maximum(angular_distance(p, e1), angular_distance(q, e2)),
                     np.maximum(angular_distance(p, e2), angular_distance(q, e1)))
    return _result(err, err < ANGLE_TOL, np.column_stack([e1, e2, x1, y1, x2, y2]), skipped)


def t1(M, rng, n, tol: Tolerances = DEFAULT):
    """Time is defined (finite, nonnegative) exactly for events in the causal relation."""
    Q, skipped = draw_cyclic(rng, n, 4, tol.delta_min)
    Q = rng.permuted(Q, axis=1)
    a1, a2, b1, b2 = Q.T
    t, _ = time_batch(M, a1, a2, b1, b2, tol)
    sep = separates_batch(a1, a2, b1, b2)
    ok = np.where(sep, np.isnan(t), np.isfinite(t) & (t >= 0))
    return _result(np.where(np.isnan(t), -1.0, t), ok, Q, skipped)


def t2(M, rng, n, tol: Tolerances = DEFAULT):
    """t = 0 on light lines and t > 0 for strong-causal pairs."""
    Q, skipped = draw_cyclic(rng, n, 4, tol.delta_min)
    Q = random_orientation(rng, Q)
    p, q, r, s = Q.T
    light = rng.random(len(Q)) < 0.5
    b1 = np.where(light, p, r)       # lightlike: (p, q) and (p, s); strong: (p, q) and (r, s)
    t, _ = time_batch(M, p, q, b1, s, tol)
    ok = np.where(light, t == 0.0, t > tol.tau_rel)
    return _result(t, ok, np.column_stack([p, q, b1, s]), skipped)


def t3(M, rng, n, tol: Tolerances = DEFAULT):
    Q, skipped = draw_cyclic(rng, n, 4, tol.delta_min)
    Q = random_orientation(rng, Q)
    a1, a2, b1, b2 = Q.T
    tab, _ = time_batch(M, a1, a2, b1, b2, tol)
    tba, _ = time_batch(M, b2, b1, a2, a1, tol)
    d = np.abs(tab - tba)
    return _result(d, d < TIME_TOL, Q, skipped)


def t4a(M, rng, n, tol: Tolerances = DEFAULT):
    """Additivity for ordered triples on one timelike line."""
    Q, skipped = draw_cyclic(rng, n, 5, tol.delta_min)
    Q = random_orientation(rng, Q)
    e1, x1, x2, x3, e2 = Q.T
    y1, y2, y3 = (conjugate_batch(M, e1, e2, x, tol) for x in (x1, x2, x3))
    t12, _ = time_batch(M, x1, y1, x2, y2, tol)
    t23, _ = time_batch(M, x2, y2, x3, y3, tol)
    t13, _ = time_batch(M, x1, y1, x3, y3, tol)
    d = np.abs(t12 + t23 - t13)
    return _result(d, d < TIME_TOL, np.column_stack([e1, e2, x1, x2, x3]), skipped)


def t4b(M, rng, n, tol: Tolerances = DEFAULT):
    """For e on h_a and s > 0 both e_+ and e_- at time s exist."""
    R, skipped = _events_and_points(rng, n, tol.delta_min)
    a1, a2, x = R.T
    s = rng.uniform(0.01, 3.0, size=len(R))
    y = conjugate_batch(M, a1, a2, x, tol)
    worst = np.zeros(len(R))
    for sign in (1.0, -1.0):
        xs = point_at_time_batch(M, a1, a2, x, sign * s, tol)
        ys = conjugate_batch(M, a1, a2, xs, tol)
        t, _ = time_batch(M, x, y, xs, ys, tol)
        worst = np.maximum(worst, np.abs(t - s))
    return _result(worst, worst < TIME_TOL, np.column_stack([a1, a2, x, s]), skipped)


def t5(M, rng, n, tol: Tolerances = DEFAULT):
    """t(z_e, u_e) = t(x_d, y_d) for strong-causal e = (x, y), d = (z, u)."""
    Q, skipped = draw_cyclic(rng, n, 4, tol.delta_min)
    Q = random_orientation(rng, Q)
    x, y, z, u = Q.T
    lhs = line_time_batch(M, x, y, z, u)
    rhs = line_time_batch(M, z, u, x, y)
    # the same two times through the generic path
    zz, uu = conjugate_batch(M, x, y, z, tol), conjugate_batch(M, x, y, u, tol)
    full, _ = time_batch(M, z, zz, u, uu, tol)
    d = np.maximum(np.abs(lhs - rhs), np.abs(full - rhs))
    return _result(d, d < TIME_TOL, Q, skipped)


def t6(M, rng, n, tol: Tolerances = DEFAULT):
    """For d = (z, u) in h_e, e = (x, y): t(y_a, u_a) = t(y_b, z_b) with a = (x, z), b = (x, u)."""
    R, skipped = _events_and_points(rng, n, tol.delta_min)
    x, y, z = R.T
    u = conjugate_batch(M, x, y, z, tol)
    keep = min_gap_rows(np.column_stack([x, y, z, u])) >= tol.delta_min
    skipped += int((~keep).sum())
    x, y, z, u = (v[keep] for v in (x, y, z, u))
    lhs = line_time_batch(M, x, z, y, u)
    rhs = line_time_batch(M, x, u, y, z)
    d = np.abs(lhs - rhs)
    return _result(d, d < TIME_TOL, np.column_stack([x, y, z, u]), skipped)


H_SUITE = {"h1": h1, "h2": h2, "h3": h3, "h4": h4, "h5": h5, "h6": h6}
T_SUITE = {"t1": t1, "t2": t2, "t3": t3, "t4a": t4a, "t4b": t4b, "t5": t5, "t6": t6}
SUITE = {**H_SUITE, **T_SUITE}


def ht_chunk(M, rng, n, tol: Tolerances = DEFAULT):
    """All axiom checks on one chunk; margins/ok are concatenated, extras hold per-axiom tallies."""
    parts = {name: fn(M, rng, n, tol) for name, fn in SUITE.items()}
    width = max(p.rows.shape[1] if p.rows.ndim == 2 else 0 for p in parts.values())
    rows = []
    for name, p in parts.items():
        r = p.rows.reshape(len(p.margins), -1)
        rows.append(np.pad(r, ((0, 0), (0, width - r.shape[1])), constant_values=np.nan))
    extras = {f"{k}_tested": p.tested for k, p in parts.items()}
    extras.update({f"{k}_violations": int((~p.ok).sum()) for k, p in parts.items()})
    extras.update({f"{k}_worst": float(np.max(p.margins)) if p.tested else 0.0 for k, p in parts.items()})
    labels = np.concatenate([np.full(p.tested, i) for i, p in enumerate(parts.values())])
    extras["axiom_index"] = labels
    return ChunkResult(np.concatenate([p.margins for p in parts.values()]),
                       np.concatenate([p.ok for p in parts.values()]),
                       np.concatenate(rows), sum(p.skipped for p in parts.values()), extras)
