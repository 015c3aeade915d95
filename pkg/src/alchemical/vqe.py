"""Joint optimization of circuit angles and alchemical weights.

The Hamiltonian is affine in the weights once the active space is frozen, so
every energy is assembled from a handful of operator pieces::

    H(alpha)   = base + sum_I,s alpha[I][s] block[I][s] + V_nn(alpha)
    H_C(alpha) = H(alpha) + field + V_nq(alpha)

One statevector gives the expectation of every piece, and any alpha can then
be priced without touching the circuit again.

Objectives:

``gap``        f * (<H_C> - <H>) on one state |psi(theta)> (default)
``two_state``  f * (<H_C>_psi' - <H>_psi) with separate angles for each state
``energy``     f * <H> (plain VQE on the vacuum Hamiltonian)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .alchemy import ActiveSpace, hamiltonian_parts, spin_one_body, spin_two_body
from .circuit import Circuit
from .errors import NumericalError, ShapeError
from .integrals import AlchemicalIntegrals
from .pauli import FermionHamiltonian, PauliSum, jordan_wigner, one_body_to_pauli, term_expectations
from .sampling import sampled_terms
from .system import AlphaWeights, ChargeField, Scaffold

__all__ = [
    "AlchemicalProblem", "OptimizerConfig", "RunTrace", "cost", "initial_theta", "number_penalty",
    "optimize", "project_simplex", "reported_binding_energy", "simplex_residual",
]

OBJECTIVES = ("gap", "two_state", "energy")
UPDATES = ("joint", "alternating")
SIMPLEX_SLACK = 1e-6


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 500
    scale: float = 1e3
    restarts: int = 1
    theta_step: float = 1e-4
    alpha_step: float = 1e-3
    tol: float = 1e-8
    seed: int = 0
    objective: str = "gap"
    update: str = "joint"
    shots: int = 0
    penalty_weight: float = 0.0
    penalty_target: float = 0.0
    inner_iterations: int = 50
    alpha_rate: float = 0.05

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale factor f must be positive")
        if self.max_iterations < 1 or self.restarts < 1 or self.inner_iterations < 1:
            raise ValueError("iteration counts and restarts must be >= 1")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.update not in UPDATES:
            raise ValueError(f"update must be one of {UPDATES}")
        if self.shots < 0 or self.penalty_weight < 0:
            raise ValueError("shots and penalty weight must be non-negative")
        if not (self.theta_step > 0 and self.alpha_step > 0 and self.alpha_rate > 0):
            raise ValueError("steps must be positive")

    @classmethod
    def hardware_mimic(cls, **overrides) -> "OptimizerConfig":
        """100 iterations with 8192 shots per measured group."""
        return cls(**{"max_iterations": 100, "shots": 8192, **overrides})


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    theta: np.ndarray | None = None
    alpha: AlphaWeights | None = None
    cost: float = math.inf
    delta_e: float = math.nan
    converged: bool = False
    message: str = ""

    @property
    def unconverged(self) -> bool:
        return not self.converged

    @property
    def best_costs(self) -> np.ndarray:
        return np.array([r["best_cost"] for r in self.records])


# ---------------------------------------------------------------------------
# problem


def _key(x, z, n):
    return (np.asarray(x, dtype=np.int64) << n) | np.asarray(z, dtype=np.int64)


class AlchemicalProblem:
    """Operator pieces plus nuclear tables; see the module docstring."""

    def __init__(self, circuit: Circuit, base: PauliSum, site_blocks, field_block: PauliSum,
                 site_charges, inverse_distances, site_potentials):
        n = circuit.n_qubits
        self.circuit = circuit
        self.site_charges = [np.asarray(z, dtype=float) for z in site_charges]
        self.counts = [len(z) for z in self.site_charges]
        if [len(b) for b in site_blocks] != self.counts:
            raise ShapeError("site blocks do not match the site charge layout")
        self.inverse_distances = np.asarray(inverse_distances, dtype=float)
        self.site_potentials = np.asarray(site_potentials, dtype=float)
        if self.inverse_distances.shape != (len(self.counts),) * 2 or self.site_potentials.shape != (len(self.counts),):
            raise ShapeError("nuclear tables do not match the number of sites")
        pieces = [base] + [b for site in site_blocks for b in site] + [field_block]
        if any(p.n_qubits != n for p in pieces):
            raise ShapeError("operator pieces act on a different number of qubits than the circuit")
        self.pieces = pieces
        keys = np.unique(np.concatenate([_key(p.x, p.z, n) for p in pieces]))
        mask = (1 << n) - 1
        self.terms = PauliSum(keys >> n, keys & mask, np.ones(len(keys)), n)
        self.weights = np.zeros((len(pieces), len(keys)))
        for row, p in enumerate(pieces):
            self.weights[row, np.searchsorted(keys, _key(p.x, p.z, n))] = p.coeffs
        self._n_blocks = sum(self.counts)
        self._charges_flat = np.concatenate(self.site_charges)
        self._site_of = np.repeat(np.arange(len(self.counts)), self.counts)

    @classmethod
    def build(cls, ints: AlchemicalIntegrals, active: ActiveSpace, scaffold: Scaffold,
              field: ChargeField | None, circuit: Circuit) -> "AlchemicalProblem":
        if circuit.n_qubits != active.n_qubits:
            raise ShapeError(f"circuit has {circuit.n_qubits} qubits, active space needs {active.n_qubits}")
        parts = hamiltonian_parts(ints, active, scaffold, field)
        base = jordan_wigner(FermionHamiltonian(0.0, spin_one_body(parts.one_body_base),
                                                spin_two_body(parts.two_body)))
        blocks = [[one_body_to_pauli(spin_one_body(b)) for b in site] for site in parts.site_blocks]
        return cls(circuit, base, blocks, one_body_to_pauli(spin_one_body(parts.field_block)),
                   parts.site_charges, parts.inverse_distances, parts.site_potentials)

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    @property
    def n_alpha(self) -> int:
        return self._n_blocks

    # alpha-dependent scalars ------------------------------------------------
    def mean_charges(self, alpha_flat) -> np.ndarray:
        return np.bincount(self._site_of, weights=alpha_flat * self._charges_flat, minlength=len(self.counts))

    def nuclear(self, alpha_flat) -> tuple[float, float]:
        zbar = self.mean_charges(alpha_flat)
        return 0.5 * float(zbar @ self.inverse_distances @ zbar), float(zbar @ self.site_potentials)

    def hamiltonian(self, alpha: AlphaWeights, field_on: bool = False) -> PauliSum:
        """Assembled Pauli sum for ``alpha`` (for oracle comparisons)."""
        a = alpha.flat()
        v_nn, v_nq = self.nuclear(a)
        coeffs = self.weights[0] + a @ self.weights[1:1 + self._n_blocks]
        const = v_nn
        if field_on:
            coeffs = coeffs + self.weights[-1]
            const += v_nq
        h = PauliSum(self.terms.x, self.terms.z, coeffs, self.n_qubits)
        return (h + const).simplify()

    def gap_operator(self, alpha: AlphaWeights) -> PauliSum:
        _, v_nq = self.nuclear(alpha.flat())
        return (self.pieces[-1] + v_nq).simplify()

    # expectations -------------------------------------------------------------
    def piece_values(self, state, shots: int = 0, rng=None) -> np.ndarray:
        """<piece> for [base, blocks..., field] on ``state``."""
        if shots:
            t = sampled_terms(self.terms, state, shots, rng)
        else:
            t = term_expectations(self.terms, state)
        return self.weights @ t

    def energies(self, values, alpha_flat) -> tuple[float, float]:
        """(E_vac, E_charged) from piece values at (possibly off-simplex) weights."""
        v_nn, v_nq = self.nuclear(alpha_flat)
        e_vac = values[0] + float(alpha_flat @ values[1:1 + self._n_blocks]) + v_nn
        return e_vac, e_vac + values[-1] + v_nq


# ---------------------------------------------------------------------------
# simplex


def _project_vector(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def project_simplex(alpha_raw, counts=None) -> AlphaWeights:
    """Euclidean projection of every site's vector onto the probability simplex.

    ``alpha_raw`` is a list of per-site vectors, or a flat vector with ``counts``.
    """
    if counts is not None:
        flat = np.asarray(alpha_raw, dtype=float).reshape(-1)
        if flat.size != sum(counts):
            raise ShapeError(f"expected {sum(counts)} weights, got {flat.size}")
        alpha_raw = np.split(flat, np.cumsum(counts)[:-1])
    out = []
    for v in alpha_raw:
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)):
            raise NumericalError("non-finite weights cannot be projected", {"alpha": v.tolist()})
        out.append(_project_vector(v))
    return AlphaWeights(out)


def simplex_residual(alpha_flat, counts) -> float:
    parts = np.split(np.asarray(alpha_flat, dtype=float), np.cumsum(counts)[:-1])
    return max(abs(p.sum() - 1.0) for p in parts)


def _as_simplex(alpha, counts) -> AlphaWeights:
    flat = alpha.flat() if isinstance(alpha, AlphaWeights) else np.asarray(alpha, dtype=float).reshape(-1)
    if flat.size != sum(counts):
        raise ShapeError(f"expected {sum(counts)} weights, got {flat.size}")
    off = max(simplex_residual(flat, counts), float(np.max(np.maximum(-flat, flat - 1.0))))
    if off > SIMPLEX_SLACK:
        raise ValueError(f"weights are {off:.3g} off the simplex")
    return project_simplex(flat, counts)


# ---------------------------------------------------------------------------
# cost


def number_penalty(state, target_n: float, weight: float) -> float:
    """weight * <(N - target)^2>; N is diagonal, so only probabilities matter."""
    if weight < 0:
        raise ValueError("penalty weight must be non-negative")
    if weight == 0:
        return 0.0
    state = np.asarray(state)
    occ = np.bitwise_count(np.arange(state.size, dtype=np.uint64)).astype(float)
    return float(weight * (np.abs(state) ** 2 @ (occ - target_n) ** 2))


def _split_theta(problem, theta, objective):
    n = problem.circuit.n_params
    theta = np.asarray(theta, dtype=float).reshape(-1)
    want = 2 * n if objective == "two_state" else n
    if theta.size != want:
        raise ShapeError(f"expected {want} angles for the {objective!r} objective, got {theta.size}")
    return (theta[:n], theta[n:]) if objective == "two_state" else (theta, theta)


def _objective_value(problem, config, alpha_flat, vac_values, chg_values, penalty):
    e_vac, _ = problem.energies(vac_values, alpha_flat)
    _, e_chg = problem.energies(chg_values, alpha_flat)
    if config.objective == "energy":
        return config.scale * e_vac + penalty, e_vac
    delta = e_chg - e_vac
    return config.scale * delta + penalty, delta


def _check_finite(value, **diagnostics):
    if not math.isfinite(value):
        raise NumericalError("cost evaluated to a non-finite value",
                             {k: np.asarray(v).tolist() for k, v in diagnostics.items()})
    return value


def cost(theta, alpha, problem: AlchemicalProblem, config: OptimizerConfig = OptimizerConfig(),
         rng=None) -> float:
    """Scaled objective at (theta, alpha); see the module docstring for the modes."""
    a = _as_simplex(alpha, problem.counts).flat()
    t_vac, t_chg = _split_theta(problem, theta, config.objective)
    shots = config.shots
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    psi = problem.circuit.apply(t_vac)
    vac = problem.piece_values(psi, shots, rng)
    if config.objective == "two_state":
        psi_c = problem.circuit.apply(t_chg)
        chg = problem.piece_values(psi_c, shots, rng)
        penalty = number_penalty(psi, config.penalty_target, config.penalty_weight) + \
            number_penalty(psi_c, config.penalty_target, config.penalty_weight)
    else:
        chg = vac
        penalty = number_penalty(psi, config.penalty_target, config.penalty_weight)
    value, _ = _objective_value(problem, config, a, vac, chg, penalty)
    return _check_finite(value, theta=theta, alpha=a)


def reported_binding_energy(theta, alpha, problem: AlchemicalProblem,
                            config: OptimizerConfig = OptimizerConfig(), rng=None) -> float:
    """cost / f, in hartree (includes the number penalty when one is set)."""
    return cost(theta, alpha, problem, config, rng) / config.scale


# ---------------------------------------------------------------------------
# optimizer


class _Evaluator:
    """Cost, finite-difference gradient and trace bookkeeping for one run."""

    def __init__(self, problem: AlchemicalProblem, config: OptimizerConfig, trace: RunTrace, rng):
        self.problem = problem
        self.config = config
        self.trace = trace
        self.rng = rng
        self.n_theta = problem.circuit.n_params
        self.counts = problem.counts
        self.restart = 0
        self.iteration = 0
        self.last_grad_norm = None  # norm of the most recent finite-difference gradient
        self._cache = {}

    # state pieces ---------------------------------------------------------
    def pieces(self, theta):
        key = theta.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            psi = self.problem.circuit.apply(theta)
            values = self.problem.piece_values(psi, self.config.shots, self.rng)
            pen = number_penalty(psi, self.config.penalty_target, self.config.penalty_weight)
            hit = (values, pen)
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def value(self, theta_vac, theta_chg, alpha_flat):
        vac, pen = self.pieces(theta_vac)
        if self.config.objective == "two_state":
            chg, pen_c = self.pieces(theta_chg)
            pen += pen_c
        else:
            chg = vac
        out = _objective_value(self.problem, self.config, alpha_flat, vac, chg, pen)
        _check_finite(out[0], theta=theta_vac, alpha=alpha_flat)
        return out

    # joint vector [theta, alpha] ------------------------------------------------
    def split(self, x):
        return x[:self.n_theta], x[self.n_theta:]

    def projected(self, a_raw):
        return project_simplex(a_raw, self.counts).flat()

    def joint_cost(self, x):
        theta, a = self.split(x)
        return self.value(theta, theta, self.projected(a))[0]

    def joint_grad(self, x):
        """Forward differences; the alpha part uses the unprojected affine form."""
        theta, a = self.split(x)
        a_proj = self.projected(a)
        base = self.value(theta, theta, a_proj)[0]
        g = np.empty_like(x)
        h = self.config.theta_step
        for j in range(self.n_theta):
            t = theta.copy()
            t[j] += h
            g[j] = (self.value(t, t, a_proj)[0] - base) / h
        ha = self.config.alpha_step
        for j in range(a.size):
            ap = a_proj.copy()
            ap[j] += ha
            g[self.n_theta + j] = (self.value(theta, theta, ap)[0] - base) / ha
        self.last_grad_norm = float(np.linalg.norm(g))
        return g

    def record(self, theta_vac, theta_chg, a_raw, grad_norm=None):
        a = self.projected(a_raw)
        value, delta = self.value(theta_vac, theta_chg, a)
        self.iteration += 1
        if value < self.trace.cost:
            self.trace.cost = value
            self.trace.delta_e = delta
            self.trace.theta = np.concatenate([theta_vac, theta_chg]) if self.config.objective == "two_state" \
                else theta_vac.copy()
            self.trace.alpha = AlphaWeights.from_flat(a, self.counts)
        alpha_sites = AlphaWeights.from_flat(a, self.counts)
        self.trace.records.append({
            "iteration": self.iteration,
            "restart": self.restart,
            "alpha": [v.tolist() for v in alpha_sites.values],
            "cost": value,
            "delta_e": delta,
            "residual": simplex_residual(a, self.counts),
            "raw_residual": simplex_residual(a_raw, self.counts),
            "grad_norm": grad_norm,
            "best_cost": self.trace.cost,
        })


def _constraints(n_theta, counts):
    cons = []
    start = n_theta
    for c in counts:
        sl = slice(start, start + c)
        jac = np.zeros(n_theta + sum(counts))
        jac[sl] = 1.0
        cons.append({"type": "eq", "fun": (lambda x, sl=sl: x[sl].sum() - 1.0),
                     "jac": (lambda x, jac=jac: jac)})
        start += c
    return cons


def _bounds(n_theta, n_alpha):
    # angles are periodic, so only the weights get box constraints
    return [(None, None)] * n_theta + [(0.0, 1.0)] * n_alpha


def _periodic(theta) -> np.ndarray:
    """Map angles into [0, 2 pi); every gate is 2 pi periodic up to a global sign."""
    return np.mod(theta, 2 * np.pi)


def _joint(ev: _Evaluator, theta, a, max_iter):
    n_theta = ev.n_theta

    def callback(xk):
        t, ak = ev.split(xk)
        ev.record(_periodic(t), _periodic(t), ak, ev.last_grad_norm)

    res = minimize(ev.joint_cost, np.concatenate([theta, a]), jac=ev.joint_grad, method="SLSQP",
                   bounds=_bounds(n_theta, a.size), constraints=_constraints(n_theta, ev.counts),
                   callback=callback, options={"maxiter": max_iter, "ftol": ev.config.tol})
    t, ak = ev.split(res.x)
    return _periodic(t), ev.projected(ak), res.status == 0, res.message, res.nit


def _minimize_theta(ev: _Evaluator, theta, fun, max_iter):
    h = ev.config.theta_step

    def grad(t):
        base = fun(t)
        g = np.empty_like(t)
        for j in range(t.size):
            tp = t.copy()
            tp[j] += h
            g[j] = (fun(tp) - base) / h
        return g

    res = minimize(fun, theta, jac=grad, method="SLSQP", options={"maxiter": max_iter, "ftol": ev.config.tol})
    return _periodic(res.x), res.status == 0


def _alternating(ev: _Evaluator, theta, a, max_iter):
    """theta sweep at fixed alpha, then an alpha solve at the fixed state."""
    n_alpha = a.size
    inner = ev.config.inner_iterations
    converged = False
    for _ in range(max_iter):
        theta, _ = _minimize_theta(ev, theta, lambda t: ev.value(t, t, a)[0], inner)
        vac, pen = ev.pieces(theta)
        x_eq = np.zeros((len(ev.counts), n_alpha))
        for i, (s, c) in enumerate(zip(np.cumsum([0] + ev.counts[:-1]), ev.counts)):
            x_eq[i, s:s + c] = 1.0

        def fa(ak):
            return _objective_value(ev.problem, ev.config, ak, vac, vac, pen)[0]

        res = minimize(fa, a, method="SLSQP", bounds=[(0.0, 1.0)] * n_alpha,
                       constraints=[{"type": "eq", "fun": lambda ak: x_eq @ ak - 1.0, "jac": lambda ak: x_eq}],
                       options={"maxiter": inner, "ftol": ev.config.tol, "eps": ev.config.alpha_step})
        a_new = ev.projected(res.x)
        before = ev.value(theta, theta, a)[0]
        ev.record(theta, theta, res.x)
        after = ev.value(theta, theta, a_new)[0]
        step = float(np.abs(a_new - a).max())
        a = a_new
        if step < 1e-10 and abs(before - after) <= ev.config.tol * max(1.0, abs(after)):
            converged = True
            break
    return theta, a, converged, "alternating sweeps finished", ev.iteration


def _two_state(ev: _Evaluator, theta, a, max_iter):
    """Separate ground-state searches for H and H_C, then a projected alpha step.

    With both states fixed the binding energy is linear in alpha, so the
    alpha update is a projected-gradient step of size ``alpha_rate``.
    """
    n = ev.n_theta
    t_vac, t_chg = theta[:n].copy(), theta[n:].copy()
    inner = ev.config.inner_iterations
    converged = False
    p = ev.problem
    for _ in range(max_iter):
        t_vac, _ = _minimize_theta(ev, t_vac, lambda t: p.energies(ev.pieces(t)[0], a)[0] + ev.pieces(t)[1], inner)
        t_chg, _ = _minimize_theta(ev, t_chg, lambda t: p.energies(ev.pieces(t)[0], a)[1] + ev.pieces(t)[1], inner)
        base = ev.value(t_vac, t_chg, a)[0]
        g = np.empty_like(a)
        for j in range(a.size):
            ap = a.copy()
            ap[j] += ev.config.alpha_step
            g[j] = (ev.value(t_vac, t_chg, ap)[0] - base) / ev.config.alpha_step
        a_raw = a - ev.config.alpha_rate * g / ev.config.scale
        ev.record(t_vac, t_chg, a_raw, float(np.linalg.norm(g)))
        a_new = ev.projected(a_raw)
        step = float(np.abs(a_new - a).max())
        a = a_new
        if step < 1e-10:
            converged = True
            break
    return np.concatenate([t_vac, t_chg]), a, converged, "two-state sweeps finished", ev.iteration


def initial_theta(problem: AlchemicalProblem, config: OptimizerConfig, rng=None) -> np.ndarray:
    """Uniform angles in [0, pi]; doubled for the two-state objective."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    n = problem.circuit.n_params * (2 if config.objective == "two_state" else 1)
    return rng.uniform(0.0, np.pi, n)


def optimize(problem: AlchemicalProblem, config: OptimizerConfig = OptimizerConfig(),
             theta0=None, alpha0: AlphaWeights | None = None):
    """Minimize the configured objective; returns ``(theta_opt, alpha_opt, trace)``.

    Each restart starts from the previous restart's angles and weights. The
    trace keeps the best point seen; ``trace.converged`` is False when the
    final restart stopped on the iteration cap.
    """
    rng = np.random.default_rng(config.seed)
    theta = initial_theta(problem, config, rng) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    _split_theta(problem, theta, config.objective)
    alpha = AlphaWeights.uniform(problem.counts) if alpha0 is None else _as_simplex(alpha0, problem.counts)
    a = alpha.flat()
    trace = RunTrace()
    ev = _Evaluator(problem, config, trace, rng)
    if config.objective == "two_state":
        ev.record(theta[:ev.n_theta], theta[ev.n_theta:], a)
    else:
        ev.record(theta, theta, a)
    step = {"two_state": _two_state}.get(config.objective, _joint if config.update == "joint" else _alternating)
    converged, message = False, ""
    for r in range(config.restarts):
        ev.restart = r
        theta, a, converged, message, _ = step(ev, theta, a, config.max_iterations)
        if config.objective == "two_state":
            ev.record(theta[:ev.n_theta], theta[ev.n_theta:], a)
        else:
            ev.record(theta, theta, a)
    if config.objective == "two_state":
        # the bilevel scheme does not minimize one function; report where it ended
        trace.theta = np.asarray(theta)
        trace.alpha = AlphaWeights.from_flat(a, problem.counts)
        trace.delta_e = trace.records[-1]["delta_e"]
    trace.converged = bool(converged)
    trace.message = str(message)
    return trace.theta, trace.alpha, trace


def with_overrides(config: OptimizerConfig, **changes) -> OptimizerConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
