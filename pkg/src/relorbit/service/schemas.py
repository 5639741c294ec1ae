"""Pydantic request/response models for the experiment service.

Every command takes a RunConfig-shaped body ({m, c, k, potential, command,
params}) and every response echoes the normalized config, so a saved response
config can be replayed as a config file.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str = ""
    m: float = 1.0
    c: float = 1.0
    k: float = 1.0
    potential: str = "coulomb"
    params: Dict = Field(default_factory=dict)


class InitState(BaseModel):
    """Initial data: either an explicit (q, p) pair or an (ell, h) level set."""
    model_config = ConfigDict(extra="forbid")

    q: Optional[List[float]] = None
    p: Optional[List[float]] = None
    ell: Optional[float] = None
    h: Optional[float] = None


class SimulateParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    init: InitState
    t0: float = 0.0
    t1: float = 100.0
    rtol: float = 1e-12
    atol: float = 1e-14
    method: str = "rk45"
    max_steps: int = 2_000_000
    collision_radius: float = 1e-8


class ClassifyParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ell: float
    h: float
    tol: float = 1e-9
    witness: bool = True


class ClassifyGridParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ell_min: float = -3.0
    ell_max: float = 3.0
    n_ell: int = 61
    h_min: float = -2.0
    h_max: float = 1.0
    n_h: int = 61
    tol: float = 1e-9
    jobs: int = 1


class CircularParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r0: float = 2.0
    scan: bool = False
    scan_r_min: float = 0.1
    scan_r_max: float = 100.0
    scan_n: int = 20


class PeriodParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ell: float = 2.0
    rho0: Optional[float] = None      # default: the equilibrium radius at ell
    xi: Optional[List[float]] = None  # default: 0.05 rho0 halved three times
    rtol: float = 1e-12
    jobs: int = 1


class BertrandParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a: List[float] = Field(default_factory=lambda: [0.5])
    rho_star: float = 1.0
    ell_star: float = 2.0
    rho_range: List[float] = Field(default_factory=lambda: [0.4, 2.4])
    rho0: Optional[List[float]] = None  # measurement points; default 3 interior
    xi0_fraction: float = 0.05
    n_grid: int = 801
    rtol: float = 1e-12
    jobs: int = 1


class RungeLenzParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    init: InitState
    n_periods: float = 3.0
    rtol: float = 1e-12
    n_theta: int = 256


class CollisionParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    init: InitState
    r_stop: float = 1e-10
    n_window: int = 21
    window_fraction: float = 0.1
    rtol: float = 1e-12


class WitnessOut(BaseModel):
    q: List[float]
    p: List[float]
    H: float
    L: float


class ClassifyResponse(BaseModel):
    summary: str
    label: str
    code: int
    sigma_sq: Optional[float]
    h_min: Optional[float]
    note: str
    witness: Optional[WitnessOut]
    config: RunConfig


class ClassifyGridResponse(BaseModel):
    summary: str
    counts: Dict[str, int]
    csv: str
    config: RunConfig


class SimulateResponse(BaseModel):
    summary: str
    n_samples: int
    t_final: float
    events: List[List]       # [kind, time] pairs
    H_drift_rel: float
    L_drift_rel: float
    n_perihelia: int
    n_aphelia: int
    final_q: List[float]
    final_p: List[float]
    csv: str
    config: RunConfig


class CircularOrbitOut(BaseModel):
    r0: float
    Omega: float
    L: float
    Gamma: float


class MomentumScanOut(BaseModel):
    constant: bool
    max_rel_deviation: float


class CircularResponse(BaseModel):
    summary: str
    orbit: CircularOrbitOut
    scan: Optional[MomentumScanOut]
    config: RunConfig


class PeriodResponse(BaseModel):
    summary: str
    rho0: float
    ell: float
    Theta0: float
    c2: float
    c2_gap: float
    c1: float
    residual: float
    method_agreement: float
    xi: List[float]
    P: List[float]
    P_return_map: List[float]
    csv: str
    sidecar: Dict
    config: RunConfig


class BertrandPointOut(BaseModel):
    rho0: float
    ell: float
    x: float
    Q_x: float
    c2_formula: float
    c2_measured: float
    rel_err: float


class BertrandFamilyOut(BaseModel):
    a: float
    K: Optional[float]
    Q_at_K: Optional[float]
    Q_at_K_identity: Optional[float]
    cubic_positive: bool
    no_isochronous_family: bool
    gamma_tilde_min: Optional[float]
    truncated: bool
    x_monotone: bool
    points: List[BertrandPointOut]
    family_csv: str
    metadata: Dict


class BertrandResponse(BaseModel):
    summary: str
    families: List[BertrandFamilyOut]
    config: RunConfig


class PrecessionOut(BaseModel):
    apsidal_angle: float
    predicted: float
    precession_per_period: float
    n_perihelia: int


class RungeLenzResponse(BaseModel):
    summary: str
    sigma_sq: float
    invariant_drift: float
    invariant_scale: float
    ode_residual: float
    ode_residual_half: float
    gamma_link_residual: float
    dRdt_residual: float
    precession: Optional[PrecessionOut]
    csv: str
    config: RunConfig


class CollisionResponse(BaseModel):
    summary: str
    fit: Dict
    config: RunConfig


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = ""
