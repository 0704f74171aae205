"""Two-layer sigmoidal network with continuous-time weight adaptation,
plus the surrounding control terms (filtered-error feedback, robustifying
term, torque composition).

Conventions: the network input is the 10-vector
[e, edot, s, sdot, sddot] (two entries per block); the output-layer
weights start at zero so the adaptive torque contribution is zero until
the error signal drives learning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import PlantState

N_INPUT = 10
WEIGHT_INIT_SCALE = 0.1


def _as_gain_matrix(value) -> np.ndarray:
    """Accept a scalar or a 2x2 matrix; return a 2x2 float array."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(2)
    if arr.shape != (2, 2):
        raise ValueError(f"gain must be scalar or 2x2, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class NetworkParams:
    """Estimated network weights.

    W_out: (n_hidden, 2) output weights; b_out: (2,) output bias;
    W_in: (10, n_hidden) input weights; b_in: (n_hidden,) hidden bias.
    The same container type doubles as the weight-derivative bundle.
    """

    W_out: np.ndarray
    b_out: np.ndarray
    W_in: np.ndarray
    b_in: np.ndarray

    @property
    def n_hidden(self) -> int:
        return self.W_in.shape[1]


@dataclass(frozen=True, eq=False)
class ControllerGains:
    """Feedback / learning gains.

    Kv and Lambda accept scalars (interpreted as multiples of identity)
    or full 2x2 matrices.
    """

    Kv: np.ndarray = field(default_factory=lambda: 20.0 * np.eye(2))
    Lambda: np.ndarray = field(default_factory=lambda: 5.0 * np.eye(2))
    k_robust: float = 10.0
    kappa: float = 0.0
    Cw: float = 10.0
    Cv: float = 10.0
    Zm: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "Kv", _as_gain_matrix(self.Kv))
        object.__setattr__(self, "Lambda", _as_gain_matrix(self.Lambda))
        if self.k_robust <= 0 or self.Cw <= 0 or self.Cv <= 0:
            raise ValueError("k_robust, Cw, Cv must be positive")
        if self.kappa < 0 or self.Zm < 0:
            raise ValueError("kappa and Zm must be nonnegative")

    def __eq__(self, other):
        if not isinstance(other, ControllerGains):
            return NotImplemented
        return (np.array_equal(self.Kv, other.Kv)
                and np.array_equal(self.Lambda, other.Lambda)
                and (self.k_robust, self.kappa, self.Cw, self.Cv, self.Zm)
                == (other.k_robust, other.kappa, other.Cw, other.Cv, other.Zm))


@dataclass(frozen=True)
class ErrorState:
    """Tracking errors and the assembled network input.

    r = edot + Lambda e is the filtered error; it doubles as the (row)
    learning signal in the weight update law.
    """

    e: np.ndarray
    edot: np.ndarray
    r: np.ndarray
    x_tilde: np.ndarray

    @property
    def h_e(self) -> np.ndarray:
        return self.r


def init_network(n_hidden: int, seed: int, n_input: int = N_INPUT,
                 scale: float = WEIGHT_INIT_SCALE) -> NetworkParams:
    """Seeded initial weights: input layer uniform on [-scale, scale],
    output layer zero (the adaptive torque starts at zero)."""
    rng = np.random.default_rng(seed)
    W_in = rng.uniform(-scale, scale, size=(n_input, n_hidden))
    b_in = rng.uniform(-scale, scale, size=n_hidden)
    return NetworkParams(
        W_out=np.zeros((n_hidden, 2)),
        b_out=np.zeros(2),
        W_in=W_in,
        b_in=b_in,
    )


def sigmoid(z):
    """Numerically safe logistic function (never overflows)."""
    z = np.asarray(z, dtype=float)
    ez = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 1.0 / (1.0 + ez), ez / (1.0 + ez))


def preactivation(net: NetworkParams, x_tilde) -> np.ndarray:
    return net.W_in.T @ np.asarray(x_tilde, dtype=float) + net.b_in


def hidden_activations(net: NetworkParams, x_tilde) -> np.ndarray:
    """Hidden-layer output; also the memory write vector and content query."""
    return sigmoid(preactivation(net, x_tilde))


def augmented_basis(net: NetworkParams, x_tilde) -> np.ndarray:
    """Hidden activations with a trailing 1 (bias slot)."""
    return np.append(hidden_activations(net, x_tilde), 1.0)


def basis_jacobian(net: NetworkParams, x_tilde) -> np.ndarray:
    """Jacobian of the augmented basis w.r.t. the preactivations:
    diag(sig*(1-sig)) stacked over a zero row (the bias slot is constant)."""
    sig = hidden_activations(net, x_tilde)
    return np.vstack([np.diag(sig * (1.0 - sig)), np.zeros((1, sig.size))])


def nn_output(net: NetworkParams, x_tilde, read_vec) -> np.ndarray:
    """Adaptive torque term; the memory read is added to the hidden
    activations before the output layer (zero read gives the plain net)."""
    sig = hidden_activations(net, x_tilde)
    return -(net.W_out.T @ (sig + np.asarray(read_vec, dtype=float))) - net.b_out


def error_state(plant: PlantState, ref, gains: ControllerGains) -> ErrorState:
    """Assemble tracking errors and the network input from a reference
    triple (s, sdot, sddot)."""
    s, sdot, sddot = ref
    e = np.asarray(s, dtype=float) - plant.x
    edot = np.asarray(sdot, dtype=float) - plant.xdot
    r = edot + gains.Lambda @ e
    x_tilde = np.concatenate([e, edot, s, sdot, sddot])
    return ErrorState(e=e, edot=edot, r=r, x_tilde=x_tilde)


def weight_derivatives(net: NetworkParams, err: ErrorState,
                       gains: ControllerGains) -> NetworkParams:
    """Continuous-time learning law for both layers.

    Computed in the stacked form ([W_out; b_out^T] and [W_in; b_in^T])
    and split back into the four weight blocks. The decay term scales
    with the Euclidean norm of the tracking error.
    """
    z = preactivation(net, err.x_tilde)
    sig = sigmoid(z)
    n = sig.size
    sig_aug = np.append(sig, 1.0)
    jac = np.vstack([np.diag(sig * (1.0 - sig)), np.zeros((1, n))])
    Wb = np.vstack([net.W_out, net.b_out])     # (n+1, 2)
    Vb = np.vstack([net.W_in, net.b_in])       # (11, n)
    e_norm = float(np.linalg.norm(err.e))

    dWb = (gains.Cw * np.outer(sig_aug - jac @ z, err.r)
           - gains.kappa * gains.Cw * e_norm * Wb)
    x_aug = np.append(err.x_tilde, 1.0)
    dVb = (gains.Cv * np.outer(x_aug, err.r) @ Wb.T @ jac
           - gains.kappa * gains.Cv * e_norm * Vb)
    return NetworkParams(W_out=dWb[:n], b_out=dWb[n], W_in=dVb[:-1], b_in=dVb[-1])


def robustifying_term(net: NetworkParams, memory_norm: float, r,
                      gains: ControllerGains) -> np.ndarray:
    """Feedback term proportional to the weight/memory norms; dominates
    the approximation residue the adaptive term leaves behind."""
    bound = (np.linalg.norm(net.W_out) + np.linalg.norm(net.W_in)
             + memory_norm + gains.Zm)
    return -gains.k_robust * bound * np.asarray(r, dtype=float)


def baseline_term(r, gains: ControllerGains) -> np.ndarray:
    """Filtered-error feedback component u_bl = -Kv r."""
    return -(gains.Kv @ np.asarray(r, dtype=float))


def total_torque(u_bl, u_ad, v) -> np.ndarray:
    """Torque applied to the plant: the negated sum of the three
    controller components."""
    return -(np.asarray(u_bl, dtype=float) + np.asarray(u_ad, dtype=float)
             + np.asarray(v, dtype=float))
