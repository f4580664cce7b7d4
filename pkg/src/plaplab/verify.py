"""Experiment drivers that turn the model's theorems into verdicts.

Each driver runs a parameter sweep, collects named scalar columns, and
derives pass/fail verdicts from those columns alone, so a verdict can be
recomputed from the emitted CSV. Regime gates record the hypothesis they
enforce in the result. Verdict values: "pass", "fail", "out-of-regime",
"inconclusive".
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import RegimeError
from .fields import Field
from .functionals import Problem, energy, hidden_convex_midpoint, weighted_q_mass
from .solver import (
    SolveOptions,
    ground_state,
    positivity_report,
    second_solution,
)
from .spectrum import lambda_star, principal_eigen
from .weights import scale_negative_part

PASS = "pass"
FAIL = "fail"
OUT_OF_REGIME = "out-of-regime"
INCONCLUSIVE = "inconclusive"


@dataclass
class SweepResult:
    """Sweep columns plus verdicts derived from them."""

    name: str
    param_name: str
    param_values: list
    columns: dict[str, list]
    verdicts: dict[str, str]
    tolerances: dict[str, float]
    gates: dict[str, str] = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v in (PASS, OUT_OF_REGIME) for v in self.verdicts.values())

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "param_name": self.param_name,
            "param_values": list(map(float, self.param_values)),
            "columns": {k: [_jsonable(x) for x in v] for k, v in self.columns.items()},
            "verdicts": dict(self.verdicts),
            "tolerances": {k: float(v) for k, v in self.tolerances.items()},
            "gates": dict(self.gates),
            "notes": {k: _jsonable(v) for k, v in self.notes.items()},
        }

    def to_csv(self, path) -> None:
        keys = list(self.columns.keys())
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join([self.param_name] + keys) + "\n")
            for i, pv in enumerate(self.param_values):
                row = [repr(float(pv))]
                for k in keys:
                    row.append(_csv_cell(self.columns[k][i]))
                fh.write(",".join(row) + "\n")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    return x


def _csv_cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if x is None:
        return ""
    return repr(float(x))


# -- verdict helpers (pure functions of columns + tolerances) --------------

def verdict_all_below(values, tol: float) -> str:
    return PASS if all(v <= tol for v in values) else FAIL

def verdict_decreasing(values, slack: float = 0.0) -> str:
    return PASS if all(b < a + slack for a, b in zip(values, values[1:])) else FAIL

def verdict_nonincreasing(values, slack: float = 0.0) -> str:
    return PASS if all(b <= a + slack for a, b in zip(values, values[1:])) else FAIL

def verdict_nondecreasing(values, slack: float = 0.0) -> str:
    return PASS if all(b >= a - slack for a, b in zip(values, values[1:])) else FAIL


def threshold_from_flags(param_values, flags) -> float | None:
    """First parameter value from which a flag holds through the end."""
    for i, _ in enumerate(param_values):
        if all(flags[i:]):
            return param_values[i]
    return None


# -- drivers ---------------------------------------------------------------

def uniqueness_multistart(prob: Problem, opts: SolveOptions | None = None,
                          n_starts: int = 8, dist_tol: float = 1e-4,
                          convexity_tol: float = 1e-10) -> SweepResult:
    """Ground-state uniqueness probe: diverse starts must meet at one field.

    Requires lam < 0 (uniqueness regime). Also certifies the convexity
    mechanism: the q-power midpoint of any two level-set minimizers does
    not beat their mean energy by more than convexity_tol.
    """
    gates = {"uniqueness": "lam < 0"}
    tolerances = {"dist_tol": dist_tol, "convexity_tol": convexity_tol}
    if prob.lam >= 0.0:
        return SweepResult(
            name="uniqueness_multistart", param_name="start",
            param_values=[], columns={}, verdicts={"agreement": OUT_OF_REGIME},
            tolerances=tolerances, gates=gates,
            notes={"reason": f"lam = {prob.lam} is not < 0"},
        )
    opts = opts or SolveOptions()
    starts = _diverse_starts(prob, n_starts, opts.seed)
    fields, m_vals, conv = [], [], []
    for s in starts:
        rep = ground_state(prob, replace(opts, n_starts=1), starts=[s])
        fields.append(rep)
        m_vals.append(rep.m_value)
        conv.append(rep.converged)

    sup_dists = []
    convexity_excess = []
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            sup_dists.append(float(np.max(np.abs(
                fields[i].field.values - fields[j].field.values))))
            v1 = fields[i].constrained_field
            v2 = fields[j].constrained_field
            wmid = hidden_convex_midpoint(v1, v2, prob.q)
            e_mid = energy(prob, wmid).E
            e_mean = 0.5 * (energy(prob, v1).E + energy(prob, v2).E)
            convexity_excess.append(float(e_mid - e_mean))

    max_dist = max(sup_dists) if sup_dists else 0.0
    max_excess = max(convexity_excess) if convexity_excess else 0.0
    verdicts = {}
    if not all(conv):
        verdicts["agreement"] = INCONCLUSIVE
        verdicts["hidden_convexity"] = INCONCLUSIVE
    else:
        verdicts["agreement"] = PASS if max_dist <= dist_tol else FAIL
        verdicts["hidden_convexity"] = (
            PASS if max_excess <= convexity_tol else FAIL
        )
    return SweepResult(
        name="uniqueness_multistart", param_name="start",
        param_values=list(range(len(starts))),
        columns={"m_plus": m_vals, "converged": conv},
        verdicts=verdicts, tolerances=tolerances, gates=gates,
        notes={"max_pairwise_sup_distance": max_dist,
               "max_convexity_excess": max_excess},
    )


def _diverse_starts(prob: Problem, n_starts: int, seed: int) -> list[np.ndarray]:
    """Bumps on each positive component, global shapes, low-mode noise."""
    grid = prob.grid
    w = prob.weight
    dof = grid.dof_mask
    rng = np.random.default_rng(seed)
    starts: list[np.ndarray] = []
    plus_free = w.plus_mask & dof
    labels, count = grid.component_labels(plus_free)
    for c in range(count):
        starts.append(np.where(labels == c, w.a_plus, 0.0))
    starts.append(np.where(plus_free, w.a_plus, 0.0))
    starts.append(np.where(dof, 1.0, 0.0))
    coords = grid.node_coords
    shape = np.ones(grid.n_nodes)
    for axis in range(grid.dim):
        x = coords[:, axis]
        shape = shape * x * (grid.extent[axis] - x)
    starts.append(np.where(dof, shape / max(shape.max(), 1e-300), 0.0))
    while len(starts) < n_starts:
        lowmode = np.zeros(grid.n_nodes)
        for k in range(1, 7):
            mode = np.ones(grid.n_nodes)
            for axis in range(grid.dim):
                mode *= np.sin(k * np.pi * coords[:, axis] / grid.extent[axis])
            lowmode += (rng.standard_normal() / k) * mode
        starts.append(np.where(dof, np.abs(lowmode) + 0.02, 0.0))
    # global shapes can sit on the wrong side of the level set when the
    # negative part dominates; blend them toward the positive support
    bump = np.where(plus_free, w.a_plus, 0.0)
    feasible = []
    for s in starts[:n_starts]:
        for _ in range(40):
            if weighted_q_mass(Field(grid, s), w, prob.q) > 0.0:
                break
            s = s + bump * max(1.0, float(s.max()))
        feasible.append(s)
    return feasible


def monotonicity_sweep(base: Problem, lambdas, opts: SolveOptions | None = None,
                       mono_tol: float = 1e-6,
                       decay_ratio: float = 0.1) -> SweepResult:
    """Ground states grow componentwise with lam on a negative lam list and
    shrink to zero as lam goes to minus infinity."""
    lambdas = [float(x) for x in lambdas]
    gates = {"monotonicity": "strictly increasing list of lam < 0"}
    tolerances = {"mono_tol": mono_tol, "decay_ratio": decay_ratio}
    if any(l >= 0.0 for l in lambdas) or any(
            b <= a for a, b in zip(lambdas, lambdas[1:])):
        return SweepResult(
            name="monotonicity_sweep", param_name="lam", param_values=lambdas,
            columns={}, verdicts={"monotone": OUT_OF_REGIME},
            tolerances=tolerances, gates=gates,
            notes={"reason": "lam list must be strictly increasing and < 0"},
        )
    opts = opts or SolveOptions()
    reports = [ground_state(replace(base, lam=l), opts) for l in lambdas]
    sups = [r.field.sup_norm() for r in reports]
    conv = [r.converged for r in reports]
    violations = [
        float(np.max(a.field.values - b.field.values))
        for a, b in zip(reports, reports[1:])
    ]
    verdicts = {}
    if not all(conv):
        verdicts["monotone"] = INCONCLUSIVE
    else:
        verdicts["monotone"] = (
            PASS if all(v <= mono_tol for v in violations) else FAIL
        ) if violations else PASS
    if len(lambdas) >= 2:
        verdicts["decay"] = PASS if sups[0] < decay_ratio * sups[-1] else FAIL
    columns = {
        "m_plus": [r.m_value for r in reports],
        "sup_norm": sups,
        "converged": conv,
        "pair_violation": violations + [np.nan],
    }
    return SweepResult(
        name="monotonicity_sweep", param_name="lam", param_values=lambdas,
        columns=columns, verdicts=verdicts, tolerances=tolerances, gates=gates,
    )


def blowup_asymptote(base: Problem, lambdas, opts: SolveOptions | None = None,
                     branch: str = "plus", asym_tol: float = 5e-2,
                     eigen=None) -> SweepResult:
    """Normalized level-set minimizers approach the scaled first
    eigenfunction as lam approaches the principal eigenvalue.

    branch 'plus': lam list increasing toward lambda_1 from below, needs
    the eigenfunction's weighted q-mass positive. branch 'minus': list
    decreasing toward lambda_1 from above, needs it negative.
    """
    opts = opts or SolveOptions()
    lambdas = [float(x) for x in lambdas]
    eigen = eigen or principal_eigen(base, opts)
    lam1 = eigen.value
    qphi = weighted_q_mass(eigen.minimizer, base.weight, base.q)
    tolerances = {"asym_tol": asym_tol}
    gates = {
        "branch": ("int a*phi1^q > 0 and lam increasing to lambda_1^-"
                   if branch == "plus"
                   else "int a*phi1^q < 0 and lam decreasing to lambda_1^+"),
    }
    bad = (
        (branch == "plus" and (qphi <= 0.0 or any(l >= lam1 for l in lambdas)
                               or any(b <= a for a, b in zip(lambdas, lambdas[1:]))))
        or (branch == "minus" and (qphi >= 0.0 or any(l <= lam1 for l in lambdas)
                                   or any(b >= a for a, b in zip(lambdas, lambdas[1:]))))
    )
    if bad:
        raise RegimeError(
            f"asymptote branch {branch!r} needs the eigen mass sign and the "
            f"lam list approaching lambda_1 = {lam1:.6g} from the correct side "
            f"(got int a*phi1^q = {qphi:.6g})"
        )
    sign = 1.0 if branch == "plus" else -1.0
    target = eigen.minimizer.values * (sign * qphi) ** (-1.0 / base.q)
    that = target / np.max(np.abs(target))

    dists, m_vals, min_interior, conv = [], [], [], []
    interior = _interior_window(base)
    for l in lambdas:
        prob = replace(base, lam=l)
        if branch == "plus":
            rep = ground_state(prob, opts)
        else:
            rep = second_solution(prob, opts, lam1=lam1, phi1_q_mass=qphi)
        v = rep.constrained_field.values
        dists.append(float(np.max(np.abs(v / np.max(np.abs(v)) - that))))
        m_vals.append(abs(rep.m_value))
        min_interior.append(float(np.min(rep.field.values[interior])))
        conv.append(rep.converged)

    verdicts = {}
    if not all(conv):
        verdicts["asymptote"] = INCONCLUSIVE
    else:
        verdicts["asymptote"] = (
            PASS if verdict_decreasing(dists) == PASS and dists[-1] < asym_tol
            else FAIL
        )
        verdicts["m_to_zero"] = (
            PASS if verdict_decreasing(m_vals) == PASS and m_vals[-1] > 0.0
            else FAIL
        )
        verdicts["interior_growth"] = verdict_nondecreasing(min_interior)
    return SweepResult(
        name=f"blowup_asymptote_{branch}", param_name="lam",
        param_values=lambdas,
        columns={"shape_distance": dists, "m_abs": m_vals,
                 "min_interior": min_interior, "converged": conv},
        verdicts=verdicts, tolerances=tolerances, gates=gates,
        notes={"lambda_1": lam1, "phi1_q_mass": qphi},
    )


def _interior_window(prob: Problem) -> np.ndarray:
    """Free nodes in the centered half of the domain (a compact subset)."""
    grid = prob.grid
    coords = grid.node_coords
    inside = grid.dof_mask.copy()
    for axis in range(grid.dim):
        L = grid.extent[axis]
        inside &= (coords[:, axis] >= 0.25 * L) & (coords[:, axis] <= 0.75 * L)
    return inside


def q_limit_lambda_star(base: Problem, q_values, opts: SolveOptions | None = None,
                        limit_tol: float = 5e-2,
                        slack: float = 1e-9) -> SweepResult:
    """The ground-state threshold at exponent q approaches its value at
    exponent p as q increases to p."""
    opts = opts or SolveOptions()
    q_values = [float(x) for x in q_values]
    gates = {"limit": "increasing exponent list with q <= p"}
    tolerances = {"limit_tol": limit_tol}
    if any(b <= a for a, b in zip(q_values, q_values[1:])) or any(
            x > base.p for x in q_values):
        return SweepResult(
            name="q_limit_lambda_star", param_name="q", param_values=q_values,
            columns={}, verdicts={"limit": OUT_OF_REGIME},
            tolerances=tolerances, gates=gates,
            notes={"reason": "need an increasing list of exponents <= p"},
        )
    at_p = lambda_star(base, q=base.p, opts=opts)
    vals, gaps, conv = [], [], []
    for qq in q_values:
        r = lambda_star(base, q=qq, opts=opts)
        vals.append(r.value)
        gaps.append(abs(r.value - at_p.value))
        conv.append(r.converged)
    verdicts = {}
    if not all(conv) or not at_p.converged:
        verdicts["limit"] = INCONCLUSIVE
    else:
        shrink = verdict_nonincreasing(gaps, slack=slack)
        verdicts["limit"] = (
            PASS if shrink == PASS and gaps[-1] < limit_tol else FAIL
        )
    return SweepResult(
        name="q_limit_lambda_star", param_name="q", param_values=q_values,
        columns={"lambda_star": vals, "gap_to_p": gaps, "converged": conv},
        verdicts=verdicts, tolerances=tolerances, gates=gates,
        notes={"lambda_star_at_p": at_p.value},
    )


def positivity_q_sweep(base: Problem, q_values, opts: SolveOptions | None = None,
                       eps_pos: float = 1e-6, include_second: bool | None = None,
                       spectrum_data: dict | None = None) -> SweepResult:
    """Positivity of the ground state as the exponent q rises toward p.

    Returns the empirical exponent threshold: the least q from which the
    field is positive everywhere through the end of the list. The second
    branch joins when the regime supports it.
    """
    opts = opts or SolveOptions()
    q_values = [float(x) for x in q_values]
    gates = {"regime": "lam < lambda*(a, p); second branch additionally "
                       "int a*phi1^p < 0 and lambda_1 < lam < lambda*(p)"}
    tolerances = {"eps_pos": eps_pos}
    if spectrum_data is None:
        eig = principal_eigen(base, opts)
        star_p = lambda_star(base, q=base.p, opts=opts)
        qphi_p = weighted_q_mass(eig.minimizer, base.weight, base.p)
        spectrum_data = {"lambda_1": eig.value, "lambda_star_p": star_p.value,
                         "phi1_p_mass": qphi_p}
    lam1 = spectrum_data["lambda_1"]
    star_p = spectrum_data["lambda_star_p"]
    qphi_p = spectrum_data["phi1_p_mass"]
    if base.lam >= star_p:
        return SweepResult(
            name="positivity_q_sweep", param_name="q", param_values=q_values,
            columns={}, verdicts={"threshold_found": OUT_OF_REGIME},
            tolerances=tolerances, gates=gates,
            notes={"reason": f"lam = {base.lam} is not < lambda*(p) = {star_p}"},
        )
    if include_second is None:
        include_second = qphi_p < 0.0 and lam1 < base.lam < star_p

    pos_plus, pos_minus, conv = [], [], []
    for qq in q_values:
        prob = replace(base, q=qq)
        rep = ground_state(prob, opts)
        pr = positivity_report(rep.field, base.weight, eps_pos)
        pos_plus.append(pr.positive_everywhere)
        conv.append(rep.converged)
        if include_second:
            rep2 = second_solution(prob, opts)
            pr2 = positivity_report(rep2.field, base.weight, eps_pos)
            pos_minus.append(pr2.positive_everywhere)
    q0 = threshold_from_flags(q_values, pos_plus)
    q0_minus = threshold_from_flags(q_values, pos_minus) if include_second else None
    verdicts = {"threshold_found": PASS if q0 is not None else FAIL}
    if include_second:
        verdicts["threshold_found_second"] = (
            PASS if q0_minus is not None else FAIL
        )
    if not all(conv):
        verdicts = {k: INCONCLUSIVE for k in verdicts}
    columns = {"positive_everywhere": pos_plus, "converged": conv}
    if include_second:
        columns["positive_everywhere_second"] = pos_minus
    return SweepResult(
        name="positivity_q_sweep", param_name="q", param_values=q_values,
        columns=columns, verdicts=verdicts, tolerances=tolerances, gates=gates,
        notes={"q0_estimate": q0, "q0_estimate_second": q0_minus,
               **spectrum_data},
    )


def positivity_delta_sweep(base: Problem, deltas, opts: SolveOptions | None = None,
                           eps_pos: float = 1e-6,
                           lam1: float | None = None) -> SweepResult:
    """Positivity of the ground state as the negative part shrinks.

    The weight is a_plus - delta * a_minus over a decreasing delta list;
    requires lam < lambda_1. Returns the first delta from which positivity
    persists through the end of the (decreasing) list.
    """
    opts = opts or SolveOptions()
    deltas = [float(x) for x in deltas]
    gates = {"regime": "lam < lambda_1 (the shrunk-weight minimum must stay attained)"}
    tolerances = {"eps_pos": eps_pos}
    if lam1 is None:
        lam1 = principal_eigen(base, opts).value
    if base.lam >= lam1:
        return SweepResult(
            name="positivity_delta_sweep", param_name="delta",
            param_values=deltas, columns={},
            verdicts={"threshold_found": OUT_OF_REGIME},
            tolerances=tolerances, gates=gates,
            notes={"reason": f"lam = {base.lam} is not < lambda_1 = {lam1}"},
        )
    if any(b >= a for a, b in zip(deltas, deltas[1:])) or any(d <= 0 for d in deltas):
        raise RegimeError("delta list must be positive and strictly decreasing")
    pos, conv = [], []
    for d in deltas:
        wd = scale_negative_part(base.weight, d)
        prob = replace(base, weight=wd)
        rep = ground_state(prob, opts)
        pr = positivity_report(rep.field, wd, eps_pos)
        pos.append(pr.positive_everywhere)
        conv.append(rep.converged)
    d0 = threshold_from_flags(deltas, pos)
    verdicts = {"threshold_found": PASS if d0 is not None else FAIL}
    if not all(conv):
        verdicts["threshold_found"] = INCONCLUSIVE
    return SweepResult(
        name="positivity_delta_sweep", param_name="delta", param_values=deltas,
        columns={"positive_everywhere": pos, "converged": conv},
        verdicts=verdicts, tolerances=tolerances, gates=gates,
        notes={"delta0_estimate": d0, "lambda_1": lam1},
    )
