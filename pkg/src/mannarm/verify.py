"""Built-in property and oracle checks, runnable from the CLI.

Each check pairs an implementation path with an independent expectation:
a structural identity, a closed-form solution, or a hand-derived value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ArmParams, PlantState, coriolis_matrix, mass_matrix, plant_derivative
from .memory import WorkingMemory, hard_attention_content, read, write_derivative
from .neurocontroller import (NetworkParams, basis_jacobian, init_network,
                              nn_output)
from .simulation import rk4_step

BENCH_ARM = ArmParams(m1=0.8, m2=2.3, l1=1.0, l2=1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_skew_symmetry(n_states: int = 1000, seed: int = 0) -> CheckResult:
    """d(M)/dt - 2 Vm must be skew-symmetric for random states."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        x = rng.uniform(-math.pi, math.pi, 2)
        xd = rng.uniform(-5.0, 5.0, 2)
        dm_dx2 = np.array([
            [-2.0 * BENCH_ARM.psi * math.sin(x[1]), -BENCH_ARM.psi * math.sin(x[1])],
            [-BENCH_ARM.psi * math.sin(x[1]), 0.0]])
        mdot = dm_dx2 * xd[1]
        s = mdot - 2.0 * coriolis_matrix(BENCH_ARM, x, xd)
        worst = max(worst, float(np.max(np.abs(s + s.T))))
    return CheckResult("skew-symmetry of Mdot - 2Vm", worst < 1e-10,
                       f"max |S + S^T| = {worst:.3e} over {n_states} states")


def check_mass_positive_definite(n_grid: int = 181) -> CheckResult:
    vals = []
    for x2 in np.linspace(-math.pi, math.pi, n_grid):
        m = mass_matrix(BENCH_ARM, np.array([0.0, x2]))
        vals.append(np.linalg.eigvalsh(m)[0])
    lo = float(min(vals))
    return CheckResult("inertia matrix positive definite",
                       lo > 0.0, f"min eigenvalue {lo:.4f} over x2 grid")


def check_rk4_exponential() -> CheckResult:
    y = np.array([1.0])
    dt = 1e-3
    for i in range(1000):
        y = rk4_step(lambda t, v: -v, i * dt, y, dt)
    err = abs(float(y[0]) - math.exp(-1.0))
    return CheckResult("RK4 vs exp(-t) closed form", err < 1e-10,
                       f"|y(1) - e^-1| = {err:.3e}")


def check_rk4_order() -> CheckResult:
    """Global-error order on y' = -5y over [0, 1] (kept well above the
    roundoff floor, unlike the unit-rate problem at these step sizes)."""
    lam = -5.0
    errs = []
    dts = (4e-3, 2e-3, 1e-3)
    for dt in dts:
        n = int(round(1.0 / dt))
        y = np.array([1.0])
        for i in range(n):
            y = rk4_step(lambda t, v: lam * v, i * dt, y, dt)
        errs.append(abs(float(y[0]) - math.exp(lam)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    order = min(orders)
    return CheckResult("RK4 convergence order", order >= 3.9,
                       f"pairwise orders {['%.2f' % o for o in orders]}")


def check_write_equilibrium() -> CheckResult:
    """Attended column must follow the closed form
    h(t) = target + (h0 - target) e^-t toward write_gain * write_vec."""
    rng = np.random.default_rng(1)
    n = 10
    write_vec = rng.uniform(0.0, 1.0, n)
    h0 = rng.uniform(-1.0, 1.0, n)
    gain = 0.75
    dt = 1e-3
    y = h0.copy()
    t_end = 3.0
    for i in range(int(t_end / dt)):
        y = rk4_step(lambda t, v: gain * write_vec - v, i * dt, y, dt)
    exact = gain * write_vec + (h0 - gain * write_vec) * math.exp(-t_end)
    err = float(np.max(np.abs(y - exact)))
    return CheckResult("memory write equilibrium closed form", err < 1e-6,
                       f"max |h - closed form| = {err:.3e}")


def check_key_equilibrium() -> CheckResult:
    """Attended state key follows k(t) = x + (k0 - x) e^(-c_k t)."""
    k0 = np.array([0.4, -0.2])
    target = np.array([1.0, 0.5])
    rate = 1.0
    dt = 1e-3
    y = k0.copy()
    t_end = 2.0
    for i in range(int(t_end / dt)):
        y = rk4_step(lambda t, v: -rate * (v - target), i * dt, y, dt)
    exact = target + (k0 - target) * math.exp(-rate * t_end)
    err = float(np.max(np.abs(y - exact)))
    return CheckResult("state key equilibrium closed form", err < 1e-6,
                       f"max |k - closed form| = {err:.3e}")


def check_basis_jacobian_fd(seed: int = 2) -> CheckResult:
    """Diagonal of the basis Jacobian vs central finite differences."""
    rng = np.random.default_rng(seed)
    net = init_network(10, seed)
    worst = 0.0
    for _ in range(20):
        x = rng.uniform(-1.0, 1.0, 10)
        jac = basis_jacobian(net, x)
        z = net.W_in.T @ x + net.b_in
        eps = 1e-6
        for k in range(10):
            zp, zm = z.copy(), z.copy()
            zp[k] += eps
            zm[k] -= eps
            sig = lambda v: 1.0 / (1.0 + np.exp(-v))
            fd = (sig(zp[k]) - sig(zm[k])) / (2 * eps)
            worst = max(worst, abs(jac[k, k] - fd))
        worst = max(worst, float(np.max(np.abs(jac[-1, :]))))
    return CheckResult("basis Jacobian vs finite differences", worst < 1e-6,
                       f"max |jac - fd| = {worst:.3e}")


def check_gravity_solve() -> CheckResult:
    """Hand-derived acceleration under gravity only at the zero posture."""
    state = PlantState(x=np.zeros(2), xdot=np.zeros(2))
    d = plant_derivative(BENCH_ARM, state, np.zeros(2))
    expect = np.linalg.solve(np.array([[10.0, 4.6], [4.6, 2.3]]),
                             np.array([52.92, 22.54]))
    err = float(np.max(np.abs(d.xdot + expect)))
    return CheckResult("gravity-only acceleration", err < 1e-9,
                       f"max |xddot - (-M^-1 N)| = {err:.3e}")


def check_read_one_hot() -> CheckResult:
    rng = np.random.default_rng(3)
    contents = rng.normal(size=(10, 5))
    mem = WorkingMemory(contents=contents.copy(), n_active=5, capacity=5)
    q = contents[:, 3] / mem.write_gain
    att = hard_attention_content(mem, q)
    ok = att.index == 3 and np.array_equal(read(mem, att), contents[:, 3])
    dh = write_derivative(mem, att, np.zeros(10), np.zeros(10))
    frozen = all(np.all(dh[:, i] == 0.0) for i in range(5) if i != 3)
    return CheckResult("one-hot read and frozen unattended writes",
                       ok and frozen, f"selected {att.index}, frozen {frozen}")


def check_output_affine_in_read(seed: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    net = NetworkParams(W_out=rng.normal(size=(10, 2)), b_out=rng.normal(size=2),
                        W_in=rng.normal(size=(10, 10)), b_in=rng.normal(size=10))
    x = rng.uniform(-1, 1, 10)
    h1, h2 = rng.normal(size=10), rng.normal(size=10)
    lhs = nn_output(net, x, h1) - nn_output(net, x, h2)
    rhs = -(net.W_out.T @ (h1 - h2))
    err = float(np.max(np.abs(lhs - rhs)))
    return CheckResult("adaptive output affine in memory read", err < 1e-12,
                       f"max deviation {err:.3e}")


ALL_CHECKS = (
    check_skew_symmetry,
    check_mass_positive_definite,
    check_gravity_solve,
    check_rk4_exponential,
    check_rk4_order,
    check_write_equilibrium,
    check_key_equilibrium,
    check_basis_jacobian_fd,
    check_read_one_hot,
    check_output_affine_in_read,
)


def run_checks() -> list[CheckResult]:
    return [fn() for fn in ALL_CHECKS]
