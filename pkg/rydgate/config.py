# Copyright 2022-2024 The rydgate authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Rydgate Config
--------------

Gate and sweep configuration files.  The INI layout is key=value with
sections; keys before the first section are general settings:

.. code-block:: ini

    preset = rb87

    [atoms]
    n = 2

    [lasers]
    delta_ghz = 1.2
    omega_c_mhz = 420
    omega_p_max_mhz = 70
    # t_raman_us is derived from the pi-pulse condition when omitted

    [decay]
    gamma_p_per_us = 36
    gamma_p_convention = rate
    tau_r_us = 66

    [interactions]
    v_control_over_eps = 40, 40
    v_ensemble_over_eps = 0, 5; 5, 0

    [sweep]
    experiment = blocking
    points = 25

YAML files (``.yaml`` or ``.yml``) use the same nested layout.  Unknown
sections and keys are errors.  A ``preset`` loads the Rb87 parameter set and
explicit keys override it.

Environment settings are read by :py:class:`RydGateSettings`:

- RYDGATE_WORKERS: the sweep worker count
- LOG_LEVEL: the package log level
"""

import configparser
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Union

import numpy as np
import yaml
from pydantic import BaseModel
from pydantic import BaseSettings
from pydantic import Extra
from pydantic import Field
from pydantic import ValidationError
from pydantic import validator

from rydgate.hilbert import Model
from rydgate.logger import get_logger
from rydgate.physics import RB87_CONTROL_RATIO
from rydgate.physics import RB87_DELTA
from rydgate.physics import RB87_GAMMA_P
from rydgate.physics import RB87_OMEGA_P_MAX
from rydgate.physics import RB87_TAU_R
from rydgate.physics import RB87_V_CONTROL_OVER_EPS
from rydgate.physics import GammaConvention
from rydgate.physics import ParameterError
from rydgate.physics import PhysParams
from rydgate.physics import epsilon
from rydgate.physics import ghz
from rydgate.physics import mhz
from rydgate.physics import pi_pulse_duration
from rydgate.physics import pi_pulse_omega_max
from rydgate.physics import us

LOGGER = get_logger(__name__)

GENERAL_SECTION = "general"

PRESETS = ("rb87",)

YAML_SUFFIXES = (".yaml", ".yml")


class ConfigError(ValueError):
    """An unreadable config file, an unknown key or a bad value"""


def parse_list(value: Any) -> Any:
    """``"40, 40"`` -> ``[40.0, 40.0]``; a scalar string becomes one value"""
    if isinstance(value, str):
        items = [item.strip() for item in value.replace("\n", ",").split(",")]
        return [float(item) for item in items if item]
    if isinstance(value, (int, float)):
        return [float(value)]
    return value


def parse_matrix(value: Any) -> Any:
    """``"0, 5; 5, 0"`` (or rows on separate lines) -> ``[[0, 5], [5, 0]]``"""
    if isinstance(value, str):
        rows = [row.strip() for row in value.replace("\n", ";").split(";")]
        return [parse_list(row) for row in rows if row]
    return value


class ConfigSection(BaseModel):
    class Config:
        extra = Extra.forbid
        allow_mutation = False


class AtomsSection(ConfigSection):
    #: number of ensemble atoms N
    n: Optional[int] = Field(default=None, ge=1)


class LasersSection(ConfigSection):
    delta_ghz: Optional[float] = Field(default=None, gt=0)
    omega_c_mhz: Optional[float] = Field(default=None, ge=0)
    omega_p_max_mhz: Optional[float] = Field(default=None, gt=0)
    t_raman_us: Optional[float] = Field(default=None, gt=0)
    #: Ω_c / max Ω_p, used when omega_c_mhz is omitted
    control_ratio: Optional[float] = Field(default=None, gt=0)


class DecaySection(ConfigSection):
    gamma_p_per_us: Optional[float] = Field(default=None, ge=0)
    gamma_p_convention: GammaConvention = GammaConvention.RATE
    tau_r_us: Optional[float] = Field(default=None, gt=0)

    @validator("gamma_p_convention", pre=True)
    def lower_convention(cls, value):
        return value.lower() if isinstance(value, str) else value


class InteractionsSection(ConfigSection):
    #: V_k/ε per atom; one value is broadcast to every atom
    v_control_over_eps: Optional[List[float]] = None
    #: V_jk/ε rows
    v_ensemble_over_eps: Optional[List[List[float]]] = None
    #: one V_jk/ε for every pair
    v_ensemble_uniform_over_eps: Optional[float] = Field(default=None, ge=0)

    _parse_control = validator("v_control_over_eps", pre=True, allow_reuse=True)(parse_list)
    _parse_ensemble = validator("v_ensemble_over_eps", pre=True, allow_reuse=True)(
        parse_matrix
    )

    @validator("v_control_over_eps")
    def nonnegative_control(cls, value):
        if value is not None and any(v < 0 for v in value):
            raise ValueError("v_control_over_eps must be >= 0")
        return value

    @validator("v_ensemble_uniform_over_eps", always=True)
    def one_ensemble_form(cls, value, values):
        if value is not None and values.get("v_ensemble_over_eps") is not None:
            raise ValueError(
                "Use v_ensemble_over_eps or v_ensemble_uniform_over_eps, not both"
            )
        return value


class SweepSection(ConfigSection):
    experiment: Optional[str] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    points: Optional[int] = Field(default=None, ge=2)
    #: linear or log
    spacing: Optional[str] = None
    #: the x_max curves of the GHZ sweep
    x_max: Optional[List[float]] = None
    workers: Optional[int] = Field(default=None, ge=1)
    model: Optional[Model] = None
    decay: Optional[bool] = None
    out: Optional[str] = None

    _parse_x_max = validator("x_max", pre=True, allow_reuse=True)(parse_list)

    @validator("experiment", "spacing", pre=True)
    def lower_name(cls, value):
        return value.strip().lower() if isinstance(value, str) else value

    @validator("spacing")
    def known_spacing(cls, value):
        if value is not None and value not in ("linear", "log"):
            raise ValueError(f"spacing must be linear or log: {value}")
        return value

    @validator("model", pre=True)
    def parse_model(cls, value):
        return Model.parse(value) if value is not None else value


class RydGateConfig(BaseModel):
    """
    A gate or sweep configuration, one field per file section.

    .. code-block::

        config = RydGateConfig.load("gate.ini")
        params = config.to_params()
    """

    preset: Optional[str] = None
    atoms: AtomsSection = Field(default_factory=AtomsSection)
    lasers: LasersSection = Field(default_factory=LasersSection)
    decay: DecaySection = Field(default_factory=DecaySection)
    interactions: InteractionsSection = Field(default_factory=InteractionsSection)
    sweep: SweepSection = Field(default_factory=SweepSection)

    class Config:
        extra = Extra.forbid
        allow_mutation = False

    @validator("preset", pre=True)
    def known_preset(cls, value):
        if value is None:
            return value
        value = str(value).strip().lower()
        if value not in PRESETS:
            raise ValueError(f"Unknown preset {value!r}, use one of {PRESETS}")
        return value

    @classmethod
    def parse_sections(cls, sections: Dict[str, Any]) -> "RydGateConfig":
        """
        :param sections: a mapping of section name to key/value mapping; the
            ``general`` section (or top-level keys) holds ``preset``
        :raises ConfigError: for unknown sections or keys and bad values
        """
        data = dict(sections or {})
        general = data.pop(GENERAL_SECTION, None) or {}
        data = {**general, **data}
        try:
            return cls.parse_obj(data)
        except ValidationError as err:
            raise ConfigError(f"Invalid config: {err}") from err

    @classmethod
    def loads_ini(cls, text: str) -> "RydGateConfig":
        parser = configparser.ConfigParser(
            inline_comment_prefixes=("#", ";;"), interpolation=None
        )
        try:
            parser.read_string(f"[{GENERAL_SECTION}]\n{text}")
        except configparser.Error as err:
            raise ConfigError(f"Unreadable config: {err}") from err
        sections = {name: dict(parser.items(name)) for name in parser.sections()}
        return cls.parse_sections(sections)

    @classmethod
    def loads_yaml(cls, text: str) -> "RydGateConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as err:
            raise ConfigError(f"Unreadable YAML config: {err}") from err
        if data is not None and not isinstance(data, dict):
            raise ConfigError("A YAML config must be a mapping of sections")
        return cls.parse_sections(data or {})

    @classmethod
    def load(cls, config_file: Union[str, Path]) -> "RydGateConfig":
        """Load an INI or YAML (by suffix) config file"""
        config_file = Path(config_file)
        try:
            text = config_file.read_text()
        except OSError as err:
            raise ConfigError(f"Cannot read config file {config_file}: {err}") from err
        if config_file.suffix.lower() in YAML_SUFFIXES:
            config = cls.loads_yaml(text)
        else:
            config = cls.loads_ini(text)
        LOGGER.debug("Loaded config: %s", config_file)
        return config

    def to_params(self, n_atoms: Optional[int] = None) -> PhysParams:
        """
        Build physical parameters; the preset fills omitted keys.  The Raman
        duration follows the π-pulse condition unless ``t_raman_us`` is set,
        and without ``omega_p_max_mhz`` the peak is derived from the duration.

        :param n_atoms: overrides ``[atoms] n``
        :raises ConfigError: when required keys are missing
        :raises ParameterError: for inconsistent physical values
        """
        preset = self.preset == "rb87"
        lasers = self.lasers
        decay = self.decay
        n = n_atoms or self.atoms.n or 1

        delta = ghz(lasers.delta_ghz) if lasers.delta_ghz else (RB87_DELTA if preset else None)
        if delta is None:
            raise ConfigError("[lasers] delta_ghz is required without a preset")

        t_raman = us(lasers.t_raman_us) if lasers.t_raman_us else None
        if lasers.omega_p_max_mhz:
            omega_p_max = mhz(lasers.omega_p_max_mhz)
        elif t_raman is not None:
            omega_p_max = pi_pulse_omega_max(delta, t_raman)
        elif preset:
            omega_p_max = RB87_OMEGA_P_MAX
        else:
            raise ConfigError("[lasers] needs omega_p_max_mhz or t_raman_us")
        if t_raman is None:
            t_raman = pi_pulse_duration(delta, omega_p_max)

        if lasers.omega_c_mhz is not None:
            omega_c = mhz(lasers.omega_c_mhz)
        elif lasers.control_ratio or preset:
            omega_c = (lasers.control_ratio or RB87_CONTROL_RATIO) * omega_p_max
        else:
            raise ConfigError("[lasers] needs omega_c_mhz or control_ratio")

        if decay.gamma_p_per_us is not None:
            gamma_p = decay.gamma_p_convention.to_rate(decay.gamma_p_per_us)
        else:
            gamma_p = RB87_GAMMA_P if preset else 0.0
        if decay.tau_r_us is not None:
            tau_r = us(decay.tau_r_us)
        else:
            tau_r = RB87_TAU_R if preset else float("inf")

        params = PhysParams(
            delta=delta,
            omega_c=omega_c,
            omega_p_max=omega_p_max,
            t_raman=t_raman,
            gamma_p=gamma_p,
            tau_r=tau_r,
            n_atoms=n,
        )
        interactions = self.interactions
        v_control = interactions.v_control_over_eps
        if v_control is None:
            v_control = RB87_V_CONTROL_OVER_EPS if preset else 0.0
        elif len(v_control) == 1:
            v_control = v_control[0]
        v_ensemble = interactions.v_ensemble_over_eps
        if v_ensemble is None:
            v_ensemble = interactions.v_ensemble_uniform_over_eps or 0.0
        if epsilon(params) <= 0:
            if np.any(np.asarray(v_control)) or np.any(np.asarray(v_ensemble)):
                raise ParameterError("Interactions in units of epsilon need omega_c > 0")
            return params
        return params.with_interactions(v_control, v_ensemble)

    @classmethod
    def from_params(cls, params: PhysParams, preset: Optional[str] = None) -> "RydGateConfig":
        """The config of a parameter set, in file units"""
        eps = epsilon(params)
        v_control = [v / eps for v in params.v_control] if eps > 0 else [0.0]
        v_ensemble = (params.v_ensemble_matrix / eps).tolist() if eps > 0 else None
        if len(set(v_control)) == 1:
            v_control = v_control[:1]
        uniform = None
        if v_ensemble is not None:
            off_diagonal = {
                v for j, row in enumerate(v_ensemble) for k, v in enumerate(row) if j != k
            }
            if len(off_diagonal) <= 1:
                uniform = off_diagonal.pop() if off_diagonal else 0.0
                v_ensemble = None
        return cls(
            preset=preset,
            atoms=AtomsSection(n=params.n_atoms),
            lasers=LasersSection(
                delta_ghz=params.delta / ghz(1.0),
                omega_c_mhz=params.omega_c / mhz(1.0),
                omega_p_max_mhz=params.omega_p_max / mhz(1.0),
                t_raman_us=params.t_raman / us(1.0),
            ),
            decay=DecaySection(
                gamma_p_per_us=params.gamma_p / 1e6,
                tau_r_us=params.tau_r / us(1.0),
            ),
            interactions=InteractionsSection(
                v_control_over_eps=v_control,
                v_ensemble_over_eps=v_ensemble,
                v_ensemble_uniform_over_eps=uniform,
            ),
        )

    def dumps(self) -> str:
        """Render INI text; ``None`` values are omitted"""

        def render(value) -> str:
            if isinstance(value, float):
                return format(value, ".12g")
            if isinstance(value, list):
                if value and isinstance(value[0], list):
                    return "; ".join(render(row) for row in value)
                return ", ".join(render(v) for v in value)
            if hasattr(value, "value"):
                return str(value.value)
            return str(value)

        lines = []
        if self.preset:
            lines.append(f"preset = {self.preset}")
        for name in ("atoms", "lasers", "decay", "interactions", "sweep"):
            section = getattr(self, name)
            items = [(k, v) for k, v in section.dict().items() if v is not None]
            if not items:
                continue
            if lines:
                lines.append("")
            lines.append(f"[{name}]")
            lines.extend(f"{key} = {render(value)}" for key, value in items)
        return "\n".join(lines) + "\n"


class RydGateSettings(BaseSettings):
    """Environment settings"""

    workers: Optional[int] = Field(
        default=None, ge=1, env="RYDGATE_WORKERS", description="sweep worker processes"
    )
    log_level: str = Field(default="INFO", env="LOG_LEVEL", description="package log level")
