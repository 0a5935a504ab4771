"""Model parameters of the two-sublattice Fe / Er spin Hamiltonian."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .constants import K_B, MU_B

# The six parameters adjusted when fitting resonance data.
FIT_PARAMETERS = ("J_Er", "g_Er_x", "A_Er_x", "A_Er_z", "A_Fe_z", "g_Fe_x")


@dataclass(frozen=True)
class ModelParams:
    """Spin-Hamiltonian constants (meV, Tesla, dimensionless Lande factors).

    Defaults are the published mean-field fit. The coordination numbers are
    not published; the defaults are calibrated values (see README).
    """

    # Fe3+
    J_Fe: float = 4.96
    D_Fe_y: float = -0.107
    A_Fe_x: float = 0.0073
    A_Fe_z: float = 0.0176
    A_Fe_xz: float = 0.0
    # Er3+
    J_Er: float = 0.01328
    A_Er_x: float = 0.124
    A_Er_z: float = 0.1480
    A_Er_xz: float = 0.0
    # Fe-Er
    J: float = 0.6
    D_x: float = 0.034
    D_y: float = 0.003
    # Lande factors
    g_Fe_x: float = 3.5734
    g_Fe_y: float = 2.0
    g_Fe_z: float = 0.6
    g_Er_x: float = 4.16
    g_Er_y: float = 3.4
    g_Er_z: float = 9.6
    # spins and lattice
    S_Fe: float = 2.5
    s_Er: float = 0.5
    z_Fe: float = 3.0
    z_Er: float = 28.0
    mu_B: float = MU_B
    k_B: float = K_B

    def __post_init__(self) -> None:
        if self.J_Fe <= 0:
            raise ValueError("J_Fe must be positive (antiferromagnetic)")
        for name in ("g_Fe_x", "g_Fe_y", "g_Fe_z", "g_Er_x", "g_Er_y", "g_Er_z"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.S_Fe != 2.5 or self.s_Er != 0.5:
            raise ValueError("spin magnitudes are fixed at 5/2 (Fe) and 1/2 (Er)")
        if self.z_Fe < 1 or self.z_Er < 1:
            raise ValueError("coordination numbers must be >= 1")

    def replace(self, **changes: Any) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter names: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


def load_params(path: str | Path | None = None) -> ModelParams:
    """Read a flat JSON key/value file; ``None`` loads the shipped defaults."""
    if path is None:
        text = resources.files("magdicke").joinpath("data/table_s1.json").read_text()
    else:
        text = Path(path).read_text()
    return ModelParams.from_dict(json.loads(text))


def save_params(params: ModelParams, path: str | Path) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n")
