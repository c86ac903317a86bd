"""Core: one mechanism, its state layout, processes, parameters and solver.

Typical host use::

    core = Core.from_files(["mechanism.json"])
    emis = core.get_rate_handle("CO emission")
    state = core.new_state()
    for step in range(n):
        emis.value = 1.2e-6
        state, stats = core.solve(state, env, dt)
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from os import PathLike
from typing import Iterable, Sequence

import numpy as np

from mpkin import _kernels
from mpkin.aero_rep import SingleParticleRep, build_aero_rep
from mpkin.config import (
    AEROSOL, GAS, ConfigError, Diagnostic, MechanismConfig, dump_config, errors_only,
    load_config, parse_config, validate,
)
from mpkin.layout import EnvironmentalState, StateLayout, build_layout
from mpkin.linalg import (
    JacobianBuilder, ProductPlan, SparseJacobian, SparsePattern, pattern_from_coo,
)
from mpkin.parameters import build_parameters
from mpkin.processes import Process, ProcessContext, build_processes
from mpkin.solver import SolverError, SolverOptions, SolveStats, integrate

DEFAULT_GAS_ABS_TOL = 1.0e-14  # ppm
DEFAULT_AEROSOL_ABS_TOL = 1.0e-20  # kg m-3

CORE_MAGIC = b"MPKC"
CORE_VERSION = 1
_CORE_HEADER = struct.Struct("<4sIQ")


class CoreInitError(ConfigError):
    """Configuration rejected at initialization; ``diagnostics`` lists the errors."""

    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = list(diagnostics)
        lines = "\n".join(str(d) for d in self.diagnostics)
        super().__init__(f"configuration has {len(self.diagnostics)} error(s):\n{lines}")


class RateHandle:
    """Settable rate of one updatable process (photolysis, loss, emission)."""

    def __init__(self, label: str, process: Process):
        self.label = label
        self._process = process

    @property
    def process_type(self) -> str:
        return self._process.process_type

    @property
    def value(self) -> float:
        return self._process.rate

    @value.setter
    def value(self, v: float) -> None:
        self._process.set_rate(v)

    def set(self, v: float) -> None:
        self._process.set_rate(v)

    def __repr__(self) -> str:
        return f"RateHandle({self.label!r}, value={self.value!r})"


class Core:
    def __init__(self, config: MechanismConfig, options: SolverOptions | None = None):
        errors = errors_only(validate(config))
        if errors:
            raise CoreInitError(errors)
        self.config = config
        self.layout: StateLayout = build_layout(config)
        self.aero_rep = build_aero_rep(config, self.layout)
        self.parameters, water, self.n_params = build_parameters(config, self.layout)
        ctx = ProcessContext(config, self.layout, self.aero_rep, water)
        self.processes: list[Process] = build_processes(ctx)
        self._labels = {p.label: p for p in self.processes if p.label is not None}
        self._base_options = options
        self.env: EnvironmentalState | None = None
        self._resume = None  # (problem key, returned state, BDF history)
        self._freeze()
        self._set_tolerances(options)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_files(cls, paths: Iterable[str | PathLike], options: SolverOptions | None = None
                   ) -> "Core":
        return cls(load_config(paths), options)

    @classmethod
    def from_json(cls, documents: str | Sequence[str], options: SolverOptions | None = None
                  ) -> "Core":
        return cls(parse_config(documents), options)

    def _freeze(self) -> None:
        n = self.layout.n_total
        npar = self.n_params
        jb = JacobianBuilder(n)
        fpb = JacobianBuilder(n, npar)  # d f / d lambda
        ppb = JacobianBuilder(npar, n)  # d lambda / d y
        for p in self.processes:
            p.register_jacobian_elements(jb, fpb)
        for par in self.parameters:
            par.register(ppb)
        self.fparam_pattern = fpb.freeze()
        self.param_pattern = ppb.freeze()
        # slots created by the chain rule are registered before freezing
        if npar:
            a_rows, a_cols = self.fparam_pattern.coo()
            b_rows, b_cols = self.param_pattern.coo()
            by_row: dict[int, list[int]] = {}
            for r, c in zip(b_rows.tolist(), b_cols.tolist()):
                by_row.setdefault(r, []).append(c)
            rows, cols = [], []
            for r, k in zip(a_rows.tolist(), a_cols.tolist()):
                for c in by_row.get(k, ()):
                    rows.append(r)
                    cols.append(c)
            jb.register(rows, cols)
        self.pattern: SparsePattern = jb.freeze(include_diagonal=True)
        self._plan = ProductPlan(self.pattern, self.fparam_pattern, self.param_pattern) if npar \
            else None

        procs = self.processes
        self._f_idx = np.concatenate([p.f_idx for p in procs]) if procs else np.zeros(0, np.int64)
        self._j_pos = np.concatenate(
            [self.pattern.positions(p.j_rows, p.j_cols) for p in procs]
        ) if procs else np.zeros(0, np.int64)
        self._fp_pos = np.concatenate(
            [self.fparam_pattern.positions(p.p_rows, p.p_cols) for p in procs]
        ) if procs else np.zeros(0, np.int64)
        self._pp_pos = np.concatenate(
            [self.param_pattern.positions(q.p_rows, q.p_cols) for q in self.parameters]
        ) if self.parameters else np.zeros(0, np.int64)

        # only variables some process drives are integrated
        self.active = np.unique(self._f_idx)
        rows, cols = self.pattern.coo()
        inv = np.full(n, -1, dtype=np.int64)
        inv[self.active] = np.arange(self.active.size)
        keep = (inv[rows] >= 0) & (inv[cols] >= 0)
        self.active_pattern = pattern_from_coo(self.active.size, self.active.size,
                                               inv[rows[keep]], inv[cols[keep]])
        ra, ca = self.active_pattern.coo()
        self._active_pos = self.pattern.positions(self.active[ra], self.active[ca])
        self.water_offsets = [(par.water_offsets, par.indices) for par in self.parameters]

    def _set_tolerances(self, options: SolverOptions | None) -> None:
        n = self.layout.n_total
        atol = np.empty(n)
        atol[: self.layout.n_gas] = DEFAULT_GAS_ABS_TOL
        atol[self.layout.n_gas:] = DEFAULT_AEROSOL_ABS_TOL
        for i, name in enumerate(self.layout.gas_species):
            sp = self.config.find_species(name, GAS)
            if sp.absolute_tolerance is not None:
                atol[i] = sp.absolute_tolerance
        for inst in self.layout.phase_instances:
            for name, off in zip(inst.species, inst.offsets):
                sp = self.config.find_species(name, AEROSOL)
                if sp.absolute_tolerance is not None:
                    atol[off] = sp.absolute_tolerance
        rtol = self.config.relative_tolerance or 1.0e-4
        if options is None:
            options = SolverOptions(rel_tol=rtol, abs_tol=atol)
        else:
            given = np.asarray(options.abs_tol, dtype=float)
            if given.ndim == 0 and options.abs_tol == SolverOptions.abs_tol:
                options = SolverOptions(**{**asdict(options), "abs_tol": atol})
        self.options = options

    # -- handles and environment -------------------------------------------

    def get_rate_handle(self, label: str) -> RateHandle:
        if label not in self._labels:
            raise KeyError(f"no process labelled {label!r}")
        proc = self._labels[label]
        if not proc.updatable:
            raise TypeError(f"process {label!r} ({proc.process_type}) has no updatable rate")
        return RateHandle(label, proc)

    def set_environment(self, env: EnvironmentalState) -> None:
        """Refresh environment-dependent constants iff the environment changed."""
        if env == self.env:
            return
        for p in self.processes:
            p.update_for_new_environmental_state(env)
        for par in self.parameters:
            par.update_for_new_environmental_state(env)
        self.env = env

    def set_particle_weights(self, weights) -> None:
        if not isinstance(self.aero_rep, SingleParticleRep):
            raise TypeError("particle weights need the single-particle representation")
        self.aero_rep.set_weights(weights)

    def _need_env(self) -> None:
        if self.env is None:
            raise RuntimeError("set an environmental state before evaluating the system")

    # -- state --------------------------------------------------------------

    @property
    def n_total(self) -> int:
        return self.layout.n_total

    def new_state(self) -> np.ndarray:
        return np.zeros(self.layout.n_total)

    def compute_parameters(self, y: np.ndarray) -> np.ndarray:
        lam = np.zeros(self.n_params)
        for par in self.parameters:
            par.calculate(y, lam)
        return lam

    def compute_forcing(self, y: np.ndarray) -> np.ndarray:
        """f(y): parameters first, then every process contribution."""
        self._need_env()
        y = np.asarray(y, dtype=np.float64)
        lam = self.compute_parameters(y)
        f = np.zeros(self.layout.n_total)
        if self.processes:
            vals = np.concatenate([p.forcing_values(y, lam) for p in self.processes])
            _kernels.scatter_add(f, self._f_idx, vals)
        return f

    def compute_jacobian(self, y: np.ndarray) -> SparseJacobian:
        """J_solver = J_direct + (d f / d lambda)(d lambda / d y) on the frozen pattern."""
        self._need_env()
        y = np.asarray(y, dtype=np.float64)
        lam = self.compute_parameters(y)
        data = np.zeros(self.pattern.nnz)
        jv, pv = [], []
        for p in self.processes:
            a, b = p.jacobian_values(y, lam)
            jv.append(a)
            pv.append(b)
        if jv:
            _kernels.scatter_add(data, self._j_pos, np.concatenate(jv))
        if self._plan is not None:
            fp = np.zeros(self.fparam_pattern.nnz)
            if self._fp_pos.size:
                _kernels.scatter_add(fp, self._fp_pos, np.concatenate(pv))
            pp = np.zeros(self.param_pattern.nnz)
            _kernels.scatter_add(pp, self._pp_pos,
                                 np.concatenate([q.jacobian_values(y) for q in self.parameters]))
            self._plan.apply(data, fp, pp)
        return SparseJacobian(self.pattern, data)

    def production_loss(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """P and L with f = P - L y (reference-solver split)."""
        self._need_env()
        lam = self.compute_parameters(y)
        prod = np.zeros(self.layout.n_total)
        loss = np.zeros(self.layout.n_total)
        if self.processes:
            parts = [p.production_loss(y, lam) for p in self.processes]
            _kernels.scatter_add(prod, self._f_idx, np.concatenate([a for a, _ in parts]))
            _kernels.scatter_add(loss, self._f_idx, np.concatenate([b for _, b in parts]))
        return prod, loss

    def write_diagnosed_water(self, y: np.ndarray) -> None:
        """Copy diagnosed water into its state slots (for output)."""
        if not self.parameters:
            return
        lam = self.compute_parameters(y)
        for offsets, idx in self.water_offsets:
            y[offsets] = lam[idx]

    # -- solving ------------------------------------------------------------

    def solve(self, state: np.ndarray, env: EnvironmentalState, dt: float,
              options: SolverOptions | None = None) -> tuple[np.ndarray, SolveStats]:
        """Advance ``state`` by ``dt`` seconds under the current rates and ``env``.

        A call that continues from the state returned by the previous call,
        with unchanged rates, environment and options, resumes the BDF
        history instead of restarting at first order.
        """
        if not dt > 0:
            raise ValueError("dt must be > 0")
        self.set_environment(env)
        opts = options or self.options
        y = np.array(state, dtype=np.float64)
        if y.shape != (self.layout.n_total,):
            raise ValueError(f"state must have length {self.layout.n_total}")
        act = self.active
        if act.size == 0:
            self.write_diagnosed_water(y)
            return y, SolveStats()
        base = y.copy()
        atol = np.broadcast_to(np.asarray(opts.abs_tol, dtype=float), y.shape)[act]
        red = SolverOptions(**{**asdict(opts), "abs_tol": atol.copy()})

        def fun(t, z):
            full = base.copy()
            full[act] = z
            return self.compute_forcing(full)[act]

        def jac(t, z):
            full = base.copy()
            full[act] = z
            return self.compute_jacobian(full).data[self._active_pos]

        key = self._problem_key(opts)
        history = None
        if self._resume is not None:
            prev_key, prev_y, prev_hist = self._resume
            if prev_key == key and np.array_equal(prev_y, y):
                history = prev_hist
        self._resume = None
        try:
            z, stats, hist = integrate(fun, jac, y[act], (0.0, float(dt)), red,
                                       jac_pattern=self.active_pattern, history=history,
                                       keep_history=True)
        except SolverError as exc:
            full = base.copy()
            full[act] = exc.y
            raise SolverError(str(exc), exc.t, full, exc.stats) from None
        y[act] = z
        self.write_diagnosed_water(y)
        if hist is not None:
            self._resume = (key, y.copy(), hist)
        return y, stats

    def _problem_key(self, opts: SolverOptions) -> tuple:
        """Everything besides the state that defines the ODE being integrated."""
        weights = (self.aero_rep.weights.tobytes()
                   if isinstance(self.aero_rep, SingleParticleRep) else b"")
        rates = tuple(p.rate for p in self.processes if p.updatable)
        atol = np.asarray(opts.abs_tol, dtype=float).tobytes()
        return (self.env, rates, weights, opts.rel_tol, atol, opts.max_order,
                opts.nonneg_policy, opts.max_step)

    def reset_history(self) -> None:
        """Forget the integration history; the next solve starts cold."""
        self._resume = None

    # -- serialization ------------------------------------------------------

    def serialize(self) -> bytes:
        rates = [[i, p.rate] for i, p in enumerate(self.processes) if p.updatable]
        opts = asdict(self.options)
        opts["abs_tol"] = np.asarray(opts["abs_tol"], dtype=float).tolist()
        payload = {
            "config": json.loads(dump_config(self.config, include_aero_rep=True)),
            "options": opts,
            "rates": rates,
            "env": None if self.env is None else [self.env.temperature, self.env.pressure,
                                                  self.env.relative_humidity],
            "particle_weights": (self.aero_rep.weights.tolist()
                                 if isinstance(self.aero_rep, SingleParticleRep) else None),
        }
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        return _CORE_HEADER.pack(CORE_MAGIC, CORE_VERSION, len(body)) + body

    @classmethod
    def deserialize(cls, buf: bytes) -> "Core":
        if len(buf) < _CORE_HEADER.size:
            raise ValueError("core buffer shorter than its header")
        magic, version, length = _CORE_HEADER.unpack_from(buf)
        if magic != CORE_MAGIC:
            raise ValueError("not a serialized core (bad magic)")
        if version != CORE_VERSION:
            raise ValueError(f"unsupported core serialization version {version}")
        if len(buf) != _CORE_HEADER.size + length:
            raise ValueError("core buffer length does not match its header")
        try:
            payload = json.loads(buf[_CORE_HEADER.size:].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"corrupted core payload: {exc}") from None
        config = parse_config(json.dumps(payload["config"]))
        opts = payload["options"]
        opts["abs_tol"] = np.asarray(opts["abs_tol"], dtype=float)
        core = cls(config, SolverOptions(**opts))
        core.options = SolverOptions(**opts)
        for i, value in payload["rates"]:
            core.processes[i].set_rate(value)
        if payload["particle_weights"] is not None:
            core.set_particle_weights(payload["particle_weights"])
        if payload["env"] is not None:
            t, p, rh = payload["env"]
            core.set_environment(EnvironmentalState(t, p, rh))
        return core


def initialize(config_paths: Iterable[str | PathLike], solver_options: SolverOptions | None = None
               ) -> Core:
    return Core.from_files(config_paths, solver_options)


def serialize_core(core: Core) -> bytes:
    return core.serialize()


def deserialize_core(buf: bytes) -> Core:
    return Core.deserialize(buf)
