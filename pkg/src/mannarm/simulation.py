"""Closed-loop integration: state containers, the composed derivative,
RK4 stepping, and the scenario runner.

Two engines produce identical run semantics. The "kernel" engine is the
flat-array loop in `_kernel` (numba-compiled when available) and is the
default. The "reference" engine drives the dataclass-level operations
below step by step; it exists so every piece of the composition can be
verified independently, and an equivalence test keeps the two aligned.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel, memory as wm, metrics_io
from .dynamics import (ArmParams, PlantState, SingularMassError, apply_jump,
                       plant_derivative, reference_eval)
from .neurocontroller import (NetworkParams, baseline_term, error_state,
                              hidden_activations, init_network, nn_output,
                              robustifying_term, total_torque,
                              weight_derivatives)
from .scenarios import ScenarioSpec, validate_scenario


class DivergedError(RuntimeError):
    """Closed-loop state exceeded the divergence bound.

    Carries the failure time and the trace collected so far.
    """

    def __init__(self, t: float, trace: "Trace"):
        super().__init__(f"simulation diverged at t={t:.6g} s")
        self.t = t
        self.trace = trace


@dataclass
class SimConfig:
    """Integration settings; seed/t_end fall back to the scenario values.

    dt is the discrete-event grid: attention selections are held, jumps
    applied, reallocation checked and samples taken at this spacing. Each
    step advances the continuous states by `substeps` internal RK4
    sub-integrations of length dt/substeps; the default of 4 keeps the
    integration stable when large mass drops stiffen the error loop
    (the robustifying gain scales with the learned weight norms).
    """

    dt: float = 1e-3
    t_end: float | None = None
    sample_every: int = 10
    substeps: int = 4
    divergence_bound: float = 1e3
    seed: int | None = None
    engine: str = "auto"  # auto | kernel | reference

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.t_end is not None and self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.engine not in ("auto", "kernel", "reference"):
            raise ValueError(f"unknown engine {self.engine!r}")


@dataclass
class ClosedLoopState:
    """Everything the closed loop integrates or switches.

    The current arm parameters ride along because jump events make them
    part of the run state (piecewise constant between jumps). mem is None
    for the plain-network controller.
    """

    plant: PlantState
    net: NetworkParams
    mem: wm.WorkingMemory | None
    arm: ArmParams


@dataclass(frozen=True)
class TraceRecord:
    """One sampled instant of the closed loop."""

    t: float
    x: np.ndarray
    xdot: np.ndarray
    ref: np.ndarray
    err: np.ndarray
    ferr: np.ndarray
    tau: np.ndarray
    u_ad: np.ndarray
    read: np.ndarray
    att_w: np.ndarray
    att_dist: np.ndarray
    n_active: int
    att_index: int
    realloc_fired: int


class Trace:
    """Columnar trace of sampled records (arrays indexed by sample)."""

    VECTOR2 = ("x", "xdot", "ref", "err", "ferr", "tau", "u_ad")

    def __init__(self, t, x, xdot, ref, err, ferr, tau, u_ad, read,
                 att_w, att_dist, n_active, att_index, realloc_fired):
        self.t = t
        self.x = x
        self.xdot = xdot
        self.ref = ref
        self.err = err
        self.ferr = ferr
        self.tau = tau
        self.u_ad = u_ad
        self.read = read
        self.att_w = att_w
        self.att_dist = att_dist
        self.n_active = n_active
        self.att_index = att_index
        self.realloc_fired = realloc_fired

    def __len__(self):
        return self.t.size

    def __getitem__(self, i) -> TraceRecord:
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        return TraceRecord(
            t=float(self.t[i]), x=self.x[i], xdot=self.xdot[i],
            ref=self.ref[i], err=self.err[i], ferr=self.ferr[i],
            tau=self.tau[i], u_ad=self.u_ad[i], read=self.read[i],
            att_w=self.att_w[i], att_dist=self.att_dist[i],
            n_active=int(self.n_active[i]), att_index=int(self.att_index[i]),
            realloc_fired=int(self.realloc_fired[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def column_names(self) -> list[str]:
        names = ["t"]
        for f in self.VECTOR2:
            names += [f"{f}_1", f"{f}_2"]
        names += [f"read_{k + 1}" for k in range(self.read.shape[1])]
        names += [f"att_w_{i + 1}" for i in range(self.att_w.shape[1])]
        names += [f"att_dist_{i + 1}" for i in range(self.att_dist.shape[1])]
        names += ["n_active", "att_index", "realloc_fired"]
        return names

    def row(self, i) -> list:
        vals = [self.t[i]]
        for f in self.VECTOR2:
            vals += list(getattr(self, f)[i])
        vals += list(self.read[i]) + list(self.att_w[i]) + list(self.att_dist[i])
        vals += [int(self.n_active[i]), int(self.att_index[i]),
                 int(self.realloc_fired[i])]
        return vals

    def truncated(self, n: int) -> "Trace":
        kw = {k: getattr(self, k)[:n] for k in
              ("t", "x", "xdot", "ref", "err", "ferr", "tau", "u_ad", "read",
               "att_w", "att_dist", "n_active", "att_index", "realloc_fired")}
        return Trace(**kw)


@dataclass
class RunResult:
    """Everything one scenario run produced."""

    trace: Trace
    summary: metrics_io.RunSummary
    diagnostics: dict
    scenario: ScenarioSpec
    config: SimConfig


def attention_config(scenario: ScenarioSpec) -> wm.AttentionConfig | None:
    """Map the scenario's controller fields onto an attention setup."""
    if scenario.controller == "nn":
        return None
    key = "state" if scenario.key_design == "state" else "content"
    if scenario.controller == "mann-soft":
        mode = "soft"
    elif scenario.key_design == "state":
        mode = "hard_state"
    else:
        mode = "hard_content"
    return wm.AttentionConfig(mode=mode, reallocation=scenario.reallocation,
                              sharpness=scenario.sharpness, soft_key=key)


def initial_state(scenario: ScenarioSpec, seed: int) -> ClosedLoopState:
    """Seeded initial closed-loop state.

    The plant starts in perfect tracking unless the scenario overrides
    x0/xdot0; the network input layer is seeded random, the output layer
    zero; the memory bank depends on the controller variant.
    """
    arm = scenario.arm_params()
    s0, sd0, _ = reference_eval(scenario.reference, 0.0)
    x0 = np.array(scenario.x0, dtype=float) if scenario.x0 is not None else s0
    xd0 = (np.array(scenario.xdot0, dtype=float)
           if scenario.xdot0 is not None else sd0)
    plant = PlantState(x=x0, xdot=xd0)

    n_hidden = (scenario.n_hidden_equiv if scenario.controller == "nn"
                else scenario.n_hidden)
    net = init_network(n_hidden, seed)

    cfg = attention_config(scenario)
    mem = None
    if cfg is not None:
        err0 = error_state(plant, reference_eval(scenario.reference, 0.0),
                           scenario.gains)
        sigma0 = hidden_activations(net, err0.x_tilde)
        common = dict(write_gain=scenario.write_gain, key_rate=scenario.key_rate,
                      threshold=scenario.threshold)
        if scenario.controller == "mann-proposed":
            mem = wm.init_growing(n_hidden, scenario.capacity, sigma0, x0,
                                  cfg.state_keyed, **common)
        else:
            mem = wm.init_full(n_hidden, scenario.capacity, x0, cfg.state_keyed,
                               content_base=scenario.write_gain * sigma0,
                               **common)
    return ClosedLoopState(plant=plant, net=net, mem=mem, arm=arm)


def _controller_outputs(state: ClosedLoopState, t: float,
                        scenario: ScenarioSpec,
                        att: wm.AttentionWeights | None):
    """Instantaneous controller quantities at (state, t)."""
    ref = reference_eval(scenario.reference, t)
    err = error_state(state.plant, ref, scenario.gains)
    sig = hidden_activations(state.net, err.x_tilde)
    if state.mem is not None and att is not None:
        read_vec = wm.read(state.mem, att)
        mem_norm = state.mem.frobenius_norm()
    else:
        read_vec = np.zeros(state.net.n_hidden)
        mem_norm = 0.0
    u_ad = nn_output(state.net, err.x_tilde, read_vec)
    u_bl = baseline_term(err.r, scenario.gains)
    v = robustifying_term(state.net, mem_norm, err.r, scenario.gains)
    tau = total_torque(u_bl, u_ad, v)
    return ref, err, sig, read_vec, u_ad, tau


def closed_loop_derivative(state: ClosedLoopState, t: float,
                           scenario: ScenarioSpec,
                           att: wm.AttentionWeights | None = None
                           ) -> ClosedLoopState:
    """Stacked time derivative of the full closed loop.

    The attention selection is a discrete quantity: pass the weights held
    for the current step, or leave None to select fresh from the state
    (the arm parameters ride along unchanged; they only move at jumps).
    """
    cfg = attention_config(scenario)
    if state.mem is not None and att is None:
        ref = reference_eval(scenario.reference, t)
        err = error_state(state.plant, ref, scenario.gains)
        sig = hidden_activations(state.net, err.x_tilde)
        att = wm.attention(state.mem, cfg, state.plant.x, sig)
    ref, err, sig, read_vec, u_ad, tau = _controller_outputs(
        state, t, scenario, att)
    plant_d = plant_derivative(state.arm, state.plant, tau)
    net_d = weight_derivatives(state.net, err, scenario.gains)
    mem_d = None
    if state.mem is not None:
        correction = state.net.W_out @ err.r
        dh = np.zeros_like(state.mem.contents)
        dh[:, :state.mem.n_active] = wm.write_derivative(
            state.mem, att, sig, correction)
        dkeys = None
        if state.mem.keys is not None:
            dkeys = np.zeros_like(state.mem.keys)
            dkeys[:, :state.mem.n_active] = wm.key_derivative(
                state.mem, att, state.plant.x)
        mem_d = replace(state.mem, contents=dh, keys=dkeys)
    return ClosedLoopState(plant=plant_d, net=net_d, mem=mem_d, arm=state.arm)


def rk4_step(f, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def pack_state(state: ClosedLoopState) -> np.ndarray:
    """Flatten the continuous sub-states into the kernel layout."""
    parts = [state.plant.x, state.plant.xdot,
             state.net.W_out.ravel(), state.net.b_out,
             state.net.W_in.ravel(), state.net.b_in]
    if state.mem is not None:
        parts.append(state.mem.contents.ravel())
        if state.mem.keys is not None:
            parts.append(state.mem.keys.ravel())
    return np.concatenate(parts)


def unpack_state(y: np.ndarray, template: ClosedLoopState) -> ClosedLoopState:
    """Rebuild a ClosedLoopState from a flat vector; discrete fields
    (active count, arm parameters) are taken from the template."""
    nh = template.net.n_hidden
    cap = template.mem.capacity if template.mem is not None else 0
    keyed = template.mem is not None and template.mem.keys is not None
    o_w, o_bo, o_v, o_bv, o_h, o_k, size = _kernel.layout(nh, cap, keyed)
    plant = PlantState(x=y[0:2].copy(), xdot=y[2:4].copy())
    net = NetworkParams(
        W_out=y[o_w:o_bo].reshape(nh, 2).copy(),
        b_out=y[o_bo:o_v].copy(),
        W_in=y[o_v:o_bv].reshape(_kernel.N_INPUT, nh).copy(),
        b_in=y[o_bv:o_h].copy())
    mem = None
    if template.mem is not None:
        keys = y[o_k:size].reshape(2, cap).copy() if keyed else None
        mem = replace(template.mem,
                      contents=y[o_h:o_k].reshape(nh, cap).copy(), keys=keys)
    return ClosedLoopState(plant=plant, net=net, mem=mem, arm=template.arm)


@dataclass
class StepInfo:
    """Discrete events of one closed-loop step."""

    att: wm.AttentionWeights | None
    realloc_fired: bool
    realloc_target: int


def step_closed_loop(state: ClosedLoopState, t: float, dt: float,
                     scenario: ScenarioSpec,
                     substeps: int = 1) -> tuple[ClosedLoopState, StepInfo]:
    """One full closed-loop step: freeze the attention selection, advance
    the continuous states by `substeps` RK4 sub-integrations, then apply
    the reallocation rule on the result."""
    cfg = attention_config(scenario)
    att = None
    if state.mem is not None:
        ref = reference_eval(scenario.reference, t)
        err = error_state(state.plant, ref, scenario.gains)
        sig = hidden_activations(state.net, err.x_tilde)
        att = wm.attention(state.mem, cfg, state.plant.x, sig)

    def f(tt, yy):
        st = unpack_state(yy, state)
        return pack_state(closed_loop_derivative(st, tt, scenario, att))

    h = dt / substeps
    y_next = pack_state(state)
    for m in range(substeps):
        y_next = rk4_step(f, t + m * h, y_next, h)
    new_state = unpack_state(y_next, state)

    fired = False
    target = -1
    if new_state.mem is not None and cfg.reallocation != "off":
        active = (cfg.reallocation == "always"
                  or new_state.mem.n_active < new_state.mem.capacity)
        if active:
            ref = reference_eval(scenario.reference, t + dt)
            err = error_state(new_state.plant, ref, scenario.gains)
            sig = hidden_activations(new_state.net, err.x_tilde)
            if wm.needs_reallocation(new_state.mem, sig):
                target = wm.reallocate(new_state.mem, sig, new_state.plant.x)
                fired = True
    return new_state, StepInfo(att=att, realloc_fired=fired,
                               realloc_target=target)


def _alloc_trace(n_samples: int, nh: int, cap: int) -> Trace:
    def f2():
        return np.zeros((n_samples, 2))
    return Trace(
        t=np.zeros(n_samples), x=f2(), xdot=f2(), ref=f2(), err=f2(),
        ferr=f2(), tau=f2(), u_ad=f2(), read=np.zeros((n_samples, nh)),
        att_w=np.zeros((n_samples, cap)), att_dist=np.zeros((n_samples, cap)),
        n_active=np.zeros(n_samples, dtype=np.int64),
        att_index=np.zeros(n_samples, dtype=np.int64),
        realloc_fired=np.zeros(n_samples, dtype=np.int64))


def _jump_arrays(scenario: ScenarioSpec, dt: float):
    steps = np.array([int(round(ev.time / dt)) for ev in scenario.jumps],
                     dtype=np.int64)
    kinds = np.array([0 if ev.kind == "scale" else 1 for ev in scenario.jumps],
                     dtype=np.int64)
    factors = np.array([ev.factor for ev in scenario.jumps], dtype=float)
    dm2 = np.array([list(ev.dm_squared) for ev in scenario.jumps],
                   dtype=float).reshape(len(scenario.jumps), 2)
    return steps, kinds, factors, dm2


def _run_kernel(scenario, config, state0, n_steps):
    cfg = attention_config(scenario)
    nh = state0.net.n_hidden
    cap = state0.mem.capacity if state0.mem is not None else 0
    keyed = state0.mem is not None and state0.mem.keys is not None
    att_mode = 0
    metric = 0
    if cfg is not None:
        att_mode = 1 if cfg.mode == "soft" else 2
        metric = 1 if cfg.state_keyed else 0
    realloc_mode = {"off": 0, "initial": 1, "always": 2}[scenario.reallocation]
    if cfg is None:
        realloc_mode = 0

    scal = np.zeros(_kernel.N_SCAL)
    g = scenario.gains
    scal[_kernel.S_K_ROBUST] = g.k_robust
    scal[_kernel.S_KAPPA] = g.kappa
    scal[_kernel.S_CW] = g.Cw
    scal[_kernel.S_CV] = g.Cv
    scal[_kernel.S_ZM] = g.Zm
    scal[_kernel.S_WRITE_GAIN] = scenario.write_gain
    scal[_kernel.S_KEY_RATE] = scenario.key_rate
    scal[_kernel.S_THRESHOLD] = scenario.threshold
    scal[_kernel.S_SHARPNESS] = scenario.sharpness
    scal[_kernel.S_DIV_BOUND] = config.divergence_bound
    ref = np.array([
        [scenario.ref1.offset, scenario.ref1.amplitude, scenario.ref1.omega],
        [scenario.ref2.offset, scenario.ref2.amplitude, scenario.ref2.omega]])

    jsteps, jkinds, jfactors, jdm2 = _jump_arrays(scenario, config.dt)
    n_samples = n_steps // config.sample_every + 1
    trace = _alloc_trace(n_samples, nh, cap)
    diag = np.zeros(_kernel.N_DIAG)
    y = pack_state(state0)
    arm = state0.arm

    status, steps_done, samples = _kernel.run_loop(
        y, n_steps, config.dt, config.sample_every, config.substeps,
        nh, cap, 1 if keyed else 0,
        state0.mem.n_active if state0.mem is not None else 0,
        att_mode, metric, realloc_mode,
        arm.m1, arm.m2, arm.l1, arm.l2, arm.g,
        scenario.gains.Kv, scenario.gains.Lambda, scal, ref,
        jsteps, jkinds, jfactors, jdm2,
        trace.t, trace.x, trace.xdot, trace.ref, trace.err, trace.ferr,
        trace.tau, trace.u_ad, trace.read, trace.att_w, trace.att_dist,
        trace.n_active, trace.att_index, trace.realloc_fired, diag)
    return status, steps_done, trace.truncated(samples), diag, y


def _run_reference(scenario, config, state0, n_steps):
    """Dataclass-level twin of the kernel loop (same event ordering)."""
    cfg = attention_config(scenario)
    nh = state0.net.n_hidden
    cap = state0.mem.capacity if state0.mem is not None else 0
    n_samples = n_steps // config.sample_every + 1
    trace = _alloc_trace(n_samples, nh, cap)
    diag = np.zeros(_kernel.N_DIAG)
    state = state0
    jumps = list(scenario.jumps)
    jstep = [int(round(ev.time / config.dt)) for ev in jumps]
    jp = 0
    samp = 0
    ar_since = 0
    status = _kernel.OK
    steps_done = 0

    def select(st, t):
        if st.mem is None:
            return None, np.full(cap, np.nan)
        ref = reference_eval(scenario.reference, t)
        err = error_state(st.plant, ref, scenario.gains)
        sig = hidden_activations(st.net, err.x_tilde)
        att = wm.attention(st.mem, cfg, st.plant.x, sig)
        if cfg.state_keyed:
            d = wm.state_distances(st.mem, st.plant.x)
        else:
            d = wm.content_distances(st.mem, sig)
        dists = np.full(cap, np.nan)
        dists[:st.mem.n_active] = d
        return att, dists

    def record(i, st, t, att, dists, ar):
        ref, err, sig, read_vec, u_ad, tau = _controller_outputs(
            st, t, scenario, att)
        trace.t[i] = t
        trace.x[i] = st.plant.x
        trace.xdot[i] = st.plant.xdot
        trace.ref[i] = ref[0]
        trace.err[i] = err.e
        trace.ferr[i] = err.r
        trace.tau[i] = tau
        trace.u_ad[i] = u_ad
        trace.read[i] = read_vec
        if att is not None:
            trace.att_w[i, :att.weights.size] = att.weights
            trace.att_index[i] = att.index
        else:
            trace.att_index[i] = -1
        trace.att_dist[i] = dists
        trace.n_active[i] = st.mem.n_active if st.mem is not None else 0
        trace.realloc_fired[i] = ar

    for n in range(n_steps):
        t = n * config.dt
        while jp < len(jumps) and jstep[jp] == n:
            state = replace(state, arm=apply_jump(state.arm, jumps[jp]))
            diag[_kernel.D_JUMPS_APPLIED] += 1
            jp += 1
        att, dists = select(state, t)
        if att is not None:
            ssum = float(att.weights.sum())
            diag[_kernel.D_WRSUM_ERR] = max(diag[_kernel.D_WRSUM_ERR],
                                            abs(ssum - 1.0))
            if cfg.mode != "soft":
                onehot = np.all((att.weights == 0.0) | (att.weights == 1.0))
                if not onehot or ssum != 1.0:
                    diag[_kernel.D_ONEHOT_VIOL] += 1
        if n % config.sample_every == 0:
            record(samp, state, t, att, dists, ar_since)
            samp += 1
            ar_since = 0
        prev_contents = (state.mem.contents.copy()
                         if state.mem is not None else None)

        def f(tt, yy):
            st = unpack_state(yy, state)
            return pack_state(closed_loop_derivative(st, tt, scenario, att))

        h = config.dt / config.substeps
        y_next = pack_state(state)
        for m in range(config.substeps):
            y_next = rk4_step(f, t + m * h, y_next, h)
        new_state = unpack_state(y_next, state)

        if prev_contents is not None:
            untouched = att.weights == 0.0
            for i in np.nonzero(untouched)[0]:
                if not np.array_equal(new_state.mem.contents[:, i],
                                      prev_contents[:, i]):
                    diag[_kernel.D_RETENTION_VIOL] += 1
        state = new_state
        steps_done = n + 1

        norm = (np.linalg.norm(state.plant.x)
                + np.linalg.norm(state.plant.xdot))
        if not norm <= config.divergence_bound:
            status = _kernel.DIVERGED
            break

        if state.mem is not None and cfg.reallocation != "off":
            active = (cfg.reallocation == "always"
                      or state.mem.n_active < state.mem.capacity)
            if active:
                ref = reference_eval(scenario.reference, t + config.dt)
                err = error_state(state.plant, ref, scenario.gains)
                sig = hidden_activations(state.net, err.x_tilde)
                if wm.needs_reallocation(state.mem, sig):
                    wm.reallocate(state.mem, sig, state.plant.x)
                    diag[_kernel.D_REALLOC_COUNT] += 1
                    ar_since = 1

    if status == _kernel.OK and n_steps % config.sample_every == 0:
        t = n_steps * config.dt
        att, dists = select(state, t)
        record(samp, state, t, att, dists, ar_since)
        samp += 1
    diag[_kernel.D_FINAL_ACTIVE] = (state.mem.n_active
                                    if state.mem is not None else 0)
    return status, steps_done, trace.truncated(samp), diag, pack_state(state)


def run_scenario(scenario: ScenarioSpec,
                 config: SimConfig | None = None) -> RunResult:
    """Integrate one scenario end to end and summarize it.

    Deterministic: identical (scenario, config) pairs produce identical
    traces. Raises DivergedError when the divergence guard trips and
    SingularMassError when the inertia solve fails.
    """
    if config is None:
        config = SimConfig()
    validate_scenario(scenario)
    t_end = config.t_end if config.t_end is not None else scenario.duration
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    seed = config.seed if config.seed is not None else scenario.seed
    n_steps = int(round(t_end / config.dt))

    state0 = initial_state(scenario, seed)
    engine = config.engine
    if engine == "auto":
        engine = "kernel"
    if engine == "kernel":
        status, steps_done, trace, diag, _y = _run_kernel(
            scenario, config, state0, n_steps)
    else:
        status, steps_done, trace, diag, _y = _run_reference(
            scenario, config, state0, n_steps)

    if status == _kernel.SINGULAR:
        raise SingularMassError(
            f"inertia solve failed at t={steps_done * config.dt:.6g}")
    if status == _kernel.DIVERGED:
        raise DivergedError(steps_done * config.dt, trace)

    diagnostics = {
        "engine": engine,
        "steps": int(steps_done),
        "onehot_violations": int(diag[_kernel.D_ONEHOT_VIOL]),
        "retention_violations": int(diag[_kernel.D_RETENTION_VIOL]),
        "realloc_count": int(diag[_kernel.D_REALLOC_COUNT]),
        "attention_sum_max_err": float(diag[_kernel.D_WRSUM_ERR]),
        "final_n_active": int(diag[_kernel.D_FINAL_ACTIVE]),
        "jumps_applied": int(diag[_kernel.D_JUMPS_APPLIED]),
        "seed": int(seed),
    }
    jump_times = [ev.time for ev in scenario.jumps if ev.time < t_end]
    summary = metrics_io.summarize_run(trace, jump_times)
    return RunResult(trace=trace, summary=summary, diagnostics=diagnostics,
                     scenario=scenario, config=config)
