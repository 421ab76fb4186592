"""Reproducible experiments driven by the command-line tool.

Each experiment takes a parameter dict (defaults merged with overrides) and
a seed, and returns metrics, a list of asserted invariants, CSV tables and
plot descriptions. The runners are deterministic for a fixed seed.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .geometry import LinearMap, MetricSpace
from .grid import GridSpec, SampledFunction
from .polytaylor import (
    block_pullback,
    coefficient_projector,
    oblique_taylor_projector,
    pol_rank,
    truncated_projector_residual,
    weyl_commutator,
)
from .quantize import (
    SymplecticLinearMap,
    apply_op_phi,
    factorization_refinement,
    metaplectic_factorization_check,
    functoriality_residual,
    metaplectic_correction,
)
from .sobolev import (
    WeightParams,
    decay_ratio_sampler,
    order_sandwich,
    slow_variation_trend,
    temperate_sampler,
)
from .spectra import (
    TransferModel,
    band_multiplicity,
    band_report,
    default_toy_grids,
    norm_decay_fit,
    ruelle_eigenvalues,
    toy_rates,
    toy_transfer_matrix,
)
from .wavepacket import (
    PhaseGrid,
    bargmann_adjoint_matrix,
    bargmann_matrix,
    bergman_kernel,
    bergman_kernel_numeric,
    heisenberg_translate,
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class Outcome:
    """What an experiment produces."""

    metrics: dict = field(default_factory=dict)
    invariants: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    plots: list = field(default_factory=list)

    def check(self, name: str, value, threshold, relation: str = "<") -> bool:
        """Record the invariant ``value <relation> threshold``."""
        value = float(value) if not isinstance(value, (bool, np.bool_)) else bool(value)
        if relation == "<":
            ok = value < threshold
        elif relation == "<=":
            ok = value <= threshold
        elif relation == ">=":
            ok = value >= threshold
        elif relation == "==":
            ok = value == threshold
        else:
            raise ValueError(relation)
        self.invariants.append({"name": name, "value": value, "relation": relation, "threshold": threshold, "passed": bool(ok)})
        return bool(ok)

    def table(self, name: str, header: list, rows: list) -> None:
        self.tables[name] = {"header": list(header), "rows": [list(r) for r in rows]}

    def plot(self, table: str, x: str, y: list, title: str, logy: bool = False, style: str = "linespoints") -> None:
        self.plots.append({"table": table, "x": x, "y": list(y), "title": title, "logy": logy, "style": style})

    @property
    def passed(self) -> bool:
        return all(i["passed"] for i in self.invariants)


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    defaults: dict
    runner: Callable[..., Outcome]
    constraints: Callable[[dict], list] = lambda p: []
    sweeps: bool = False

    def run(self, params: dict, seed: int, parallel: bool = False) -> Outcome:
        if self.sweeps:
            return self.runner(params, seed, parallel=parallel)
        return self.runner(params, seed)


def _need(cond: bool, msg: str) -> list:
    return [] if cond else [msg]


def _grid_constraints(p: dict) -> list:
    out = []
    if "L" in p:
        out += _need(p["L"] > 0, "L must be positive")
    if "N" in p:
        out += _need(p["N"] >= 8 and p["N"] % 2 == 0, "N must be an even integer >= 8")
    return out


# ---------------------------------------------------------------- identity


def _schwartz_vectors(grid: GridSpec, count: int, rng) -> tuple[np.ndarray, list]:
    x = grid.points()[:, 0]
    vecs, info = [], []
    for _ in range(count):
        s = rng.uniform(0.7, 1.5)
        x0 = rng.uniform(-1.0, 1.0)
        c = rng.normal(size=4) + 1j * rng.normal(size=4)
        poly = sum(c[j] * ((x - x0) / s) ** j for j in range(4))
        vecs.append(poly * np.exp(-0.5 * ((x - x0) / s) ** 2))
        info.append((s, x0))
    return np.array(vecs).T, info


def run_identity(p: dict, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    grid = GridSpec.line(p["L"], p["N"])
    pg = PhaseGrid.from_grid(grid, xi_max=p["xi_max"], x_stride=p["x_stride"])
    b = bargmann_matrix(pg)
    bd = bargmann_adjoint_matrix(pg)
    u, info = _schwartz_vectors(grid, p["vectors"], rng)
    err = np.linalg.norm(bd @ (b @ u) - u, axis=0) / np.linalg.norm(u, axis=0)
    out = Outcome()
    out.metrics = {"max_relative_error": float(err.max()), "phase_points": pg.size, "grid_points": grid.size}
    out.check("resolution of identity: max relative error", err.max(), p["tol"])
    out.table("errors", ["vector", "width", "center", "relative_error"], [[i, s, c, float(e)] for i, ((s, c), e) in enumerate(zip(info, err))])
    out.plot("errors", "vector", ["relative_error"], "B^dagger B - Id on random Schwartz vectors", logy=True, style="points")
    return out


# ------------------------------------------------------------------ kernel


def run_kernel(p: dict, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    grid = GridSpec.line(p["L"], p["N"])
    m = p["pairs"]
    rp = rng.uniform(-p["box"], p["box"], (m, 2))
    rh = rng.uniform(-p["box"], p["box"], (m, 2))
    out = Outcome()
    rows = []
    worst = {}
    for gauge in ("vertical", "radial"):
        num = bergman_kernel_numeric(rp, rh, grid, gauge)
        ref = bergman_kernel(rp[:, None, :], rh[None, :, :], grid.space, gauge)
        err = np.abs(num - ref)
        worst[gauge] = float(err.max())
        for i in range(m):
            rows.append([gauge, i, float(err[i].max())])
        out.check(f"Bergman kernel closed form ({gauge} gauge)", err.max(), p["tol"])
    out.metrics = {"max_error": worst, "pairs": m * m}
    out.table("kernel_errors", ["gauge", "row", "max_error"], rows)
    out.plot("kernel_errors", "row", ["max_error"], "|numerical kernel - closed form| per sample row", logy=True, style="points")
    return out


# ------------------------------------------------------------- heisenberg


def run_heisenberg(p: dict, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    grid = GridSpec.line(p["L"], p["N"])
    u = SampledFunction.from_callable(grid, lambda x: (1 + 0.5 * x) * np.exp(-0.5 * x**2))
    q = p["L"] / 4
    rows, worst = [], 0.0
    for i in range(p["pairs"]):
        x, xi, x2, xi2 = rng.uniform(-q, q, 4)
        lhs = heisenberg_translate(heisenberg_translate(u, x2, xi2), x, xi)
        rhs = heisenberg_translate(u, x + x2, xi + xi2)
        res = (lhs - rhs.with_values(np.exp(1j * xi * x2) * rhs.values)).norm() / u.norm()
        worst = max(worst, res)
        rows.append([i, x, xi, x2, xi2, float(res)])
    out = Outcome()
    out.metrics = {"max_residual": float(worst)}
    out.check("Weyl-Heisenberg composition law", worst, p["tol"])
    out.table("composition", ["pair", "x", "xi", "x2", "xi2", "residual"], rows)
    out.plot("composition", "pair", ["residual"], "T(x,xi) T(x',xi') - e^{i xi x'} T(x+x',xi+xi')", logy=True, style="points")
    return out


# ------------------------------------------------------------ metaplectic


def _random_spd(rng, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def _random_map(rng, n: int, lo: float, hi: float) -> np.ndarray:
    q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
    q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q1 @ np.diag(rng.uniform(lo, hi, n)) @ q2


def run_metaplectic(p: dict, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    out = Outcome()
    rows, worst = [], 0.0
    for i in range(p["maps"]):
        dom = MetricSpace(_random_spd(rng, 2))
        cod = MetricSpace(_random_spd(rng, 2))
        phi = LinearMap(dom, cod, _random_map(rng, 2, 0.3, 3.0))
        lhs = metaplectic_correction(phi.inverse())
        rhs = phi.det * metaplectic_correction(phi)
        res = abs(lhs - rhs) / abs(rhs)
        worst = max(worst, res)
        rows.append([i, lhs, rhs, res])
    ups = metaplectic_correction(LinearMap.on([[2.0]]))
    out.check("Upsilon(phi^-1) = |det phi| Upsilon(phi)", worst, p["tol_identity"])
    out.check("Upsilon(2 Id) = sqrt(5/8)", abs(ups - np.sqrt(5 / 8)), 1e-12)

    g2 = GridSpec(MetricSpace.euclidean(2), p["L"], p["N"])
    unit, func = 0.0, 0.0
    for _ in range(p["pairs"]):
        a = _random_map(rng, 2, 0.6, 1.6)
        b = _random_map(rng, 2, 0.6, 1.6)
        c = 0.5 * rng.normal(size=2)
        k = 0.5 * rng.normal(size=2)
        u = SampledFunction.from_callable(g2, lambda y: np.exp(-0.5 * np.sum((y - c) ** 2, axis=-1) + 1j * y @ k))
        va = apply_op_phi(u, LinearMap.on(a), method="sinc")
        unit = max(unit, abs(va.norm() / u.norm() - 1))
        lhs = apply_op_phi(u, LinearMap.on(a @ b), method="sinc")
        rhs = apply_op_phi(va, LinearMap.on(b), method="sinc")
        func = max(func, (lhs - rhs).norm() / u.norm())
    out.check("Op(phi) unitarity on the grid", unit, p["tol_op"])
    out.check("Op(phi1 phi2) = Op(phi2) Op(phi1)", func, p["tol_op"])

    pg = PhaseGrid.box(MetricSpace.euclidean(1), p["phase_box"], p["phase_spacing"])
    v = bergman_kernel(pg.points(), np.array([0.3, -0.2]), gauge="radial")
    base_res, proj_res = 0.0, 0.0
    for _ in range(p["phase_pairs"]):
        a = SymplecticLinearMap.from_base(LinearMap.on([[rng.uniform(0.8, 1.25)]]))
        b = SymplecticLinearMap.from_base(LinearMap.on([[rng.uniform(0.8, 1.25)]]))
        base_res = max(base_res, functoriality_residual(a, b, v, pg)["residual"])
    for _ in range(p["phase_pairs"]):
        a = SymplecticLinearMap.from_matrix(_symplectic_2x2(rng))
        b = SymplecticLinearMap.from_matrix(_symplectic_2x2(rng))
        proj_res = max(proj_res, functoriality_residual(a, b, v, pg)["projective_residual"])
    out.check("Op~ composition for base maps", base_res, p["tol_op"])
    out.check("Op~ composition up to a unimodular phase", proj_res, p["tol_projective"])
    out.metrics = {
        "upsilon_identity_residual": float(worst),
        "upsilon_2": ups,
        "op_unitarity": float(unit),
        "op_functoriality": float(func),
        "op_tilde_base_pairs": float(base_res),
        "op_tilde_projective": float(proj_res),
    }
    out.table("upsilon", ["map", "upsilon_inverse", "det_times_upsilon", "relative_residual"], rows)
    out.plot("upsilon", "map", ["relative_residual"], "Upsilon(phi^-1) vs |det phi| Upsilon(phi)", logy=True, style="points")
    return out


def _symplectic_2x2(rng) -> np.ndarray:
    """Random ``SL(2)`` matrix with singular values in ``[1/1.4, 1.4]``."""
    q1, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    q2, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    s = rng.uniform(1.0, 1.4)
    m = q1 @ np.diag([s, 1 / s]) @ q2
    if np.linalg.det(m) < 0:
        m[:, 0] *= -1
        m[0, :] *= -1
    return m


# ---------------------------------------------------------- factorization


def run_factorization(p: dict, seed: int) -> Outcome:
    phi = np.diag([np.e, 1 / np.e])
    ladder = factorization_refinement(phi, spacings=tuple(p["spacings"]))
    res = [r["residual"] for r in ladder]
    default = metaplectic_factorization_check(phi, quad_spacing=p["default_spacing"], with_norms=True)
    out = Outcome()
    out.check("factorization residual at the default resolution", default["residual"], p["tol"], "<=")
    out.check("residual decreases under refinement", all(a > b for a, b in zip(res, res[1:])), True, "==")
    out.metrics = {
        "residuals": res,
        "default_residual": default["residual"],
        "upsilon_k": default["upsilon_k"],
        "upsilon_n": default["upsilon_n"],
        "norm_ratios": {k: default[k] for k in ("lhs_norm_ratio", "k_norm_ratio", "n_norm_ratio")},
    }
    out.table("refinement", ["spacing", "residual"], [[r["quad_spacing"], r["residual"]] for r in ladder])
    out.plot("refinement", "spacing", ["residual"], "factorization residual vs quadrature spacing", logy=True)
    return out


# ---------------------------------------------------------------- taylor


def _random_int_matrix(rng, d: int) -> np.ndarray:
    while True:
        m = rng.integers(-3, 4, (d, d))
        if round(np.linalg.det(m)) != 0:
            return np.array([[Fraction(int(v)) for v in row] for row in m], dtype=object)


def run_taylor(p: dict, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    out = Outcome()
    exact = True
    for d in (1, 2, 3):
        kmax = p["kmax_algebra"] if d < 3 else min(p["kmax_algebra"], 4)
        projs = [coefficient_projector(d, k, kmax) for k in range(kmax + 1)]
        for k, a in enumerate(projs):
            for j, b in enumerate(projs):
                exact &= bool(np.all(a.dot(b) == (a if k == j else a * 0)))
        pb = block_pullback(_random_int_matrix(rng, d), min(kmax, 4))
        sub = [coefficient_projector(d, k, min(kmax, 4)) for k in range(min(kmax, 4) + 1)]
        exact &= all(bool(np.all(pb.dot(t) == t.dot(pb))) for t in sub)
    out.check("T_k T_k' = delta T_k and [phi^o, T_k] = 0 (exact)", exact, True, "==")

    grid = GridSpec.line(p["L"], p["N"])
    pg = PhaseGrid.from_grid(grid, xi_max=None, x_stride=1)
    rows = []
    for s in p["sigmas"]:
        same = truncated_projector_residual(p["k"], p["k"], s, pg)["norm"]
        cross = truncated_projector_residual(0, 1, s, pg)["norm"]
        rows.append([s, same, cross])
    norms = [r[1] for r in rows]
    by_sigma = {r[0]: r[1] for r in rows}
    out.check("truncated residual is monotone in sigma", all(a > b for a, b in zip(norms, norms[1:])), True, "==")
    if 3 in by_sigma and 6 in by_sigma:
        out.check("truncated residual drops 10x from sigma 3 to 6", by_sigma[3] / by_sigma[6], 10.0, ">=")
    out.check("truncated residual at the largest sigma", norms[-1], 1e-6)

    og = GridSpec.line(p["oblique_L"], p["oblique_N"])
    opg = PhaseGrid.from_grid(og, xi_max=None, x_stride=2)
    e2 = [float(rng.uniform(-1.0, 1.0)), 1.0]
    ob = oblique_taylor_projector([1.0, 0.0], e2, p["oblique_k"], opg)
    out.check("oblique projector idempotent", ob["idempotency"], 1e-4)
    out.check("oblique projector rank", ob["rank"], pol_rank(1, p["oblique_k"]), "==")
    out.metrics = {
        "residual_norms": {str(r[0]): r[1] for r in rows},
        "parity_case_norms": {str(r[0]): r[2] for r in rows},
        "oblique": {"e2": e2, "idempotency": ob["idempotency"], "rank": ob["rank"]},
    }
    out.table("residual", ["sigma", "norm_same_degree", "norm_degree_0_1"], rows)
    out.plot("residual", "sigma", ["norm_same_degree", "norm_degree_0_1"], "truncated projector residual", logy=True)
    return out


# ------------------------------------------------------------------- weyl


def _rand_frac(rng) -> Fraction:
    return Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))


def run_weyl(p: dict, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    rows, exact = [], True
    for i in range(p["instances"]):
        d = int(rng.integers(1, p["max_dim"] + 1))
        k = int(rng.integers(0, p["max_degree"] + 1))
        up = np.empty((d, d), dtype=object)
        up[:] = Fraction(0)
        for a in range(d):
            for b in range(a + 1, d):
                up[a, b] = _rand_frac(rng)
                up[b, a] = -up[a, b]
        if d == 1:
            up[0, 0] = Fraction(0)
        s = [_rand_frac(rng) for _ in range(d)]
        u = [_rand_frac(rng) for _ in range(d)]
        om = _rand_frac(rng)
        r = weyl_commutator(s, u, om, up, k)
        exact &= r["exact"]
        rows.append([i, d, k, str(r["scalar"]), int(r["exact"])])
    out = Outcome()
    out.metrics = {"instances": p["instances"], "all_exact": bool(exact)}
    out.check("[k iota_s, u v] = omega dA(s, u) Id exactly", exact, True, "==")
    out.table("instances", ["instance", "d", "k", "scalar", "exact"], rows)
    out.plot("instances", "instance", ["exact"], "exact commutator identity per instance", style="points")
    return out


# ---------------------------------------------------------------- weights


def run_weights(p: dict, seed: int) -> Outcome:
    out = Outcome()
    w = WeightParams(p["h0"], p["gamma"], p["R"], "stable_in_numerator")
    lam = p["lambda"]
    phi = SymplecticLinearMap.from_matrix(np.diag([np.exp(-lam), np.exp(lam)]))
    dec = decay_ratio_sampler(w, phi, p["t_list"], p["samples"], seed)
    again = decay_ratio_sampler(w, phi, p["t_list"], p["samples"], seed)
    out.check("decay exponent >= 0.8 of the target", dec["fitted_decay"], 0.8 * dec["target_decay"], ">=")
    out.check("decay ratio finite at every scale", bool(np.isfinite(dec["sup_overall"])), True, "==")
    rows = []
    det = dec == again
    for h0, g, r in p["temperate"]:
        tw = WeightParams(h0, g, r)
        tr = temperate_sampler(tw, p["pairs"], seed=seed)
        det &= tr == temperate_sampler(tw, p["pairs"], seed=seed)
        out.check(f"temperate N0 <= 2R (h0={h0}, gamma={g}, R={r})", tr["N0"], 2 * r, "<=")
        out.check(f"temperate fit finite (h0={h0}, gamma={g}, R={r})", tr["finite"], True, "==")
        rows.append([h0, g, r, tr["N0"], tr["C"], tr["slow_variation"]])
    sv = slow_variation_trend(WeightParams(0.1, 0.0, 2.0), pair_count=p["pairs"], seed=seed)
    out.check("slow variation excess decreases with h0", sv["decreasing"], True, "==")
    out.check("samplers deterministic under a fixed seed", det, True, "==")
    osw = order_sandwich(w, seed=seed)
    out.metrics = {
        "decay": {k: dec[k] for k in ("fitted_decay", "target_decay", "sup_overall", "sup_outside_per_t")},
        "slow_variation": sv["rows"],
        "order_sandwich": osw,
    }
    out.table("temperate", ["h0", "gamma", "R", "N0", "C", "slow_variation"], rows)
    out.table("decay", ["t", "max_ratio_outside"], [[t, m] for t, m in zip(dec["t_list"], dec["sup_outside_per_t"])])
    out.plot("decay", "t", ["max_ratio_outside"], "max W(Phi^t rho)/W(rho) beyond C_t", logy=True)
    return out


# ------------------------------------------------------------------- toy


def _toy_params(p: dict) -> tuple[WeightParams, GridSpec, PhaseGrid]:
    w = WeightParams(p["h0"], p["gamma"], p["R"], p["orientation"])
    grid, pg = default_toy_grids(p["L"], p["N"])
    return w, grid, pg


def _toy_moduli(args) -> list:
    p, t = args
    w, grid, pg = _toy_params(p)
    rep = ruelle_eigenvalues(toy_transfer_matrix(t, grid, pg, w), t=t, rates=toy_rates(p["kmax"]))
    return [float(m) for m in rep.moduli[: p["top"]]]


def run_toy(p: dict, seed: int, parallel: bool = False) -> Outcome:
    w, grid, pg = _toy_params(p)
    t = p["t"]
    rates = toy_rates(p["kmax"])
    rep = ruelle_eigenvalues(toy_transfer_matrix(t, grid, pg, w), t=t, rates=rates, rel_tol=p["band_tol"])
    out = Outcome()
    top = rep.moduli[:3]
    pred = np.exp(-t * np.arange(3))
    top_err = float(np.max(np.abs(top - pred) / pred))
    out.check("top three moduli equal 1, e^-t, e^-2t", top_err, p["top_tol"])
    threshold = max(p["count_threshold"], rep.floor)
    resolved = rep.moduli > threshold
    count = int(np.sum(resolved))
    matched = sum(1 for b, keep in zip(rep.bands, resolved) if keep and b >= 0)
    k_resolved = max(k for k in range(p["kmax"] + 1) if np.exp(-k * t) > threshold)
    expected = int(np.floor(min(k_resolved, p["R"] - 1))) + 1
    out.check("count of resolved eigenvalues above the floor", count, expected, "==")
    out.check("resolved eigenvalues matched to predicted bands", matched, count, "==")
    rv = ruelle_eigenvalues(toy_transfer_matrix(t, grid, pg, w, potential=p["V"]), t=t)
    twist = float(np.max(np.abs(rv.eigenvalues[:3] / rep.eigenvalues[:3] - np.exp(t * p["V"]))))
    out.check("constant twist scales the spectrum by e^{tV}", twist, 1e-7)
    sweep = []
    if p["t_list"]:
        jobs = [(p, float(s)) for s in p["t_list"]]
        if parallel and len(jobs) > 1:
            with ProcessPoolExecutor() as ex:
                sweep = list(ex.map(_toy_moduli, jobs))
        else:
            sweep = [_toy_moduli(j) for j in jobs]
    out.metrics = {
        "top_moduli": [float(m) for m in rep.moduli[: p["top"]]],
        "predicted": rep.predicted,
        "floor": rep.floor,
        "count_threshold": threshold,
        "resolved_count": count,
        "expected_count": expected,
        "twist_residual": twist,
        "sweep": [{"t": float(s), "moduli": m} for s, m in zip(p["t_list"], sweep)],
        "phase_points": pg.size,
    }
    rows = [[float(z.real), float(z.imag), float(abs(z)), int(b)] for z, b in zip(rep.eigenvalues, rep.bands)]
    out.table("eigenvalues", ["re", "im", "modulus", "band"], rows)
    out.plot("eigenvalues", "re", ["im"], "toy spectrum (t = %g)" % t, style="points")
    return out


# ------------------------------------------------------------- norm decay


def run_norm_decay(p: dict, seed: int) -> Outcome:
    out = Outcome()
    tw = WeightParams(p["h0"], p["gamma"], p["R"], "frequency_in_numerator")
    grid, pg = default_toy_grids(p["L"], p["N"])
    rows = []
    fits = {}
    toy = TransferModel.toy()
    for name, model, K, w in (
        ("toy_K0", toy, 0, tw),
        ("toy_none", toy, -1, tw),
        ("expanding_K1", TransferModel.diagonal_expanding([1.0]), 1, WeightParams(p["h0"], p["gamma"], p["R_expanding"], "frequency_in_numerator")),
    ):
        f = norm_decay_fit(model, K, w, p["t_list"], grid, pg, p["epsilon"])
        fits[name] = {"slope": f["slope"], "target": f["target"], "margin": f["margin"]}
        out.check(f"{name}: slope <= gamma_(K+1)^+ + eps", f["slope"], f["target"] + p["epsilon"], "<=")
        for t, n in zip(f["t_list"], f["norms"]):
            rows.append([name, t, n])
    out.metrics = fits
    out.table("norms", ["model", "t", "norm"], rows)
    out.plot("norms", "t", ["norm"], "||K_t (Id - T_[0,K])|| in the weighted space", logy=True, style="points")
    return out


# ------------------------------------------------------------------- bands


def run_bands(p: dict, seed: int) -> Outcome:
    out = Outcome()
    rep = band_report(TransferModel.diagonal_expanding(p["rates"]), p["t"], p["kmax"])
    out.check("every modulus inside its annulus", rep["all_inside"], True, "==")
    out.check("gap between bands 0 and 1", any(g["between"] == [0, 1] for g in rep["gaps"]), True, "==")
    out.check("rates monotone in k", rep["monotone"], True, "==")
    iso = band_report(TransferModel.diagonal_expanding([1.0] * len(p["rates"])), p["t"], p["kmax_isotropic"])
    mult = [band_multiplicity(iso, k) for k in range(p["kmax_isotropic"] + 1)]
    ranks = [pol_rank(len(p["rates"]), k) for k in range(p["kmax_isotropic"] + 1)]
    out.check("isotropic multiplicities equal pol_rank(d, k)", mult == ranks, True, "==")
    rows = []
    for b in rep["bands"]:
        for m in b["moduli"]:
            rows.append([b["k"], m, b["annulus"][0], b["annulus"][1]])
    out.metrics = {"rates": rep["rates"], "gaps": rep["gaps"], "isotropic_multiplicities": mult, "ranks": ranks}
    out.table("bands", ["k", "modulus", "inner", "outer"], rows)
    out.plot("bands", "k", ["modulus", "inner", "outer"], "band moduli and predicted annuli", logy=True, style="points")
    return out


# -------------------------------------------------------------- registry


def _toy_constraints(p: dict) -> list:
    out = _grid_constraints(p)
    out += _need(p.get("t", 1.0) >= 0, "t must be non-negative")
    out += _need(p.get("orientation") in (None, "stable_in_numerator", "frequency_in_numerator"), "bad orientation")
    out += _need(p.get("h0", 1.0) > 0 and 0 <= p.get("gamma", 0.0) < 1 and p.get("R", 0.0) >= 0, "bad weight parameters")
    return out


EXPERIMENTS = {
    e.name: e
    for e in [
        Experiment(
            "identity-check",
            "resolution of identity B^dagger B = Id",
            {"L": 12.0, "N": 128, "xi_max": 12.0, "x_stride": 2, "vectors": 20, "tol": 1e-6},
            run_identity,
            _grid_constraints,
        ),
        Experiment(
            "bergman-kernel",
            "Bergman projector kernel in vertical and radial gauge",
            {"L": 12.0, "N": 128, "pairs": 32, "box": 4.0, "tol": 1e-7},
            run_kernel,
            _grid_constraints,
        ),
        Experiment(
            "heisenberg",
            "Weyl-Heisenberg law T(x,xi) T(x',xi') = e^{i xi x'} T(x+x',xi+xi')",
            {"L": 12.0, "N": 128, "pairs": 50, "tol": 1e-7},
            run_heisenberg,
            _grid_constraints,
        ),
        Experiment(
            "metaplectic",
            "Upsilon(phi^-1) = |det phi| Upsilon(phi); Op(phi) unitary and functorial",
            {
                "maps": 100,
                "tol_identity": 1e-10,
                "L": 8.0,
                "N": 64,
                "pairs": 10,
                "tol_op": 1e-5,
                "phase_box": 10.0,
                "phase_spacing": 0.4,
                "phase_pairs": 2,
                "tol_projective": 1e-3,
            },
            run_metaplectic,
            _grid_constraints,
        ),
        Experiment(
            "factorization",
            "metaplectic factorization Op~(Phi) = Op~(Phi_K) (x) Op~(Phi_N)",
            {"spacings": [0.35, 0.3, 0.25, 0.2], "default_spacing": 0.3, "tol": 1e-3},
            run_factorization,
            lambda p: _need(all(s > 0 for s in p["spacings"]) and len(p["spacings"]) >= 2, "spacings must be >= 2 positive values"),
        ),
        Experiment(
            "taylor-residual",
            "Taylor projector algebra and truncated residual R_sigma",
            {"kmax_algebra": 6, "L": 8.0, "N": 64, "k": 0, "sigmas": [2.0, 3.0, 4.0, 6.0, 8.0], "oblique_L": 12.0, "oblique_N": 96, "oblique_k": 1},
            run_taylor,
            _grid_constraints,
        ),
        Experiment(
            "weyl-algebra",
            "[k iota_s, u v] = omega dA(s, u) Id",
            {"instances": 100, "max_dim": 3, "max_degree": 5},
            run_weyl,
            lambda p: _need(1 <= p["max_dim"] <= 4 and 0 <= p["max_degree"] <= 8, "max_dim in 1..4 and max_degree in 0..8"),
        ),
        Experiment(
            "weight-props",
            "decay, temperate and slow-variation properties of W",
            {
                "h0": 0.1,
                "gamma": 0.5,
                "R": 4.0,
                "lambda": 1.0,
                "t_list": [1.0, 2.0, 3.0, 4.0],
                "samples": 4000,
                "pairs": 10000,
                "temperate": [[0.1, 0.0, 2.0], [1.0, 0.5, 8.0], [1.0, 0.0, 8.0]],
            },
            run_weights,
            lambda p: _need(p["h0"] > 0 and 0 <= p["gamma"] < 1 and p["R"] >= 0, "bad weight parameters"),
        ),
        Experiment(
            "toy-spectrum",
            "Ruelle spectrum of X = -x d/dx: e^{-kt}, k = 0, 1, 2, ...",
            {
                "L": 12.0,
                "N": 96,
                "t": 1.0,
                "h0": 1.0,
                "gamma": 0.5,
                "R": 8.0,
                "orientation": "frequency_in_numerator",
                "kmax": 3,
                "top": 8,
                "top_tol": 1e-3,
                "band_tol": 5e-3,
                "count_threshold": 0.05,
                "V": 0.3,
                "t_list": [],
            },
            run_toy,
            _toy_constraints,
            sweeps=True,
        ),
        Experiment(
            "norm-decay",
            "||Op(Phi^t) T^{>=K+1}|| <= C e^{t (gamma_{K+1}^+ + eps)}",
            {"L": 12.0, "N": 96, "h0": 1.0, "gamma": 0.5, "R": 8.0, "R_expanding": 12.0, "t_list": [0.5, 1.0, 1.5, 2.0], "epsilon": 0.15},
            run_norm_decay,
            _toy_constraints,
        ),
        Experiment(
            "band-demo",
            "band structure e^{t gamma_k^-} <= |z| <= e^{t gamma_k^+}, rank pol_rank(d, k)",
            {"rates": [1.0, 1.5], "t": 1.0, "kmax": 2, "kmax_isotropic": 3},
            run_bands,
            lambda p: _need(all(r > 0 for r in p["rates"]) and p["kmax"] >= 1, "rates must be positive and kmax >= 1"),
        ),
    ]
}
