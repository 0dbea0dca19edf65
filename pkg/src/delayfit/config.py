"""INI run configuration.

Sections and keys (all optional unless marked)::

    [model]        name (required); cheyne: m; hiv: k, m, delta, c, T0, n_p, N
    [ic]           family (required)
    [true_params]  theta, tau, phi        needed by simulate/experiment
    [init_params]  theta, tau, phi (required for fit); phi_from_data
    [grid]         T, data_dt, n_tau, gradcheck_n_tau
    [loss]         running_norm, terminal_norm, weights
    [optimizer]    n_epochs, lr, L_min, beta1, beta2, tau_floor
    [noise]        level, levels, trials, seed
    [output]       dir, plots
    [gradcheck]    models, h_rel, tol_theta_phi, tol_tau, corrupt_jac_theta

Vectors are comma separated. ``phi_from_data`` lists phi indices whose
initial value is replaced by the first data sample. ``--config`` also
accepts the name of a bundled preset (see ``PRESETS``).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .loss import LossConfig, NormKind
from .models import HIVConstants, make_ic, make_model
from .trainer import FitConfig
from .types import ConfigError

MODEL_PRESETS = ("exponential", "logistic", "enso", "cheyne", "hiv")
PRESETS = MODEL_PRESETS + ("all",)

_SECTIONS = ("model", "ic", "true_params", "init_params", "grid", "loss",
             "optimizer", "noise", "output", "gradcheck")
_MODEL_KEYS = {
    "cheyne": {"m": int},
    "hiv": {k: float for k in ("k", "m", "delta", "c", "T0", "n_p", "N")},
}


@dataclass(frozen=True)
class GradcheckSettings:
    models: tuple = ()
    n_tau: int | None = None
    h_rel: float = 1e-4
    tol_theta_phi: float = 1e-2
    tol_tau: float = 5e-2
    corrupt_jac_theta: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    model: str
    ic: str
    model_kwargs: dict = field(default_factory=dict)
    true_theta: tuple | None = None
    true_tau: float | None = None
    true_phi: tuple | None = None
    init_theta: tuple | None = None
    init_tau: float | None = None
    init_phi: tuple | None = None
    phi_from_data: tuple = ()
    T: float | None = None
    data_dt: float = 0.1
    n_tau: int = 10
    loss: LossConfig = field(default_factory=LossConfig)
    n_epochs: int = 500
    lr: float = 0.03
    L_min: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    tau_floor: float = 1e-3
    noise_level: float = 0.0
    noise_levels: tuple = (0.0,)
    trials: int = 20
    seed: int = 0
    out_dir: str = "out"
    plots: bool = True
    gradcheck: GradcheckSettings = field(default_factory=GradcheckSettings)
    source: str = ""

    def dynamics(self):
        return make_model(self.model, **self.model_kwargs)

    def history(self):
        return make_ic(self.ic, self.dynamics().d)

    def require_truth(self):
        if self.true_tau is None or self.true_theta is None or self.true_phi is None:
            raise ConfigError(f"{self.source}: [true_params] theta, tau and phi are required")
        self._check_lengths(self.true_theta, self.true_phi, "true_params")

    def require_init(self):
        if self.init_tau is None or self.init_theta is None or self.init_phi is None:
            raise ConfigError(f"{self.source}: [init_params] theta, tau and phi are required")
        self._check_lengths(self.init_theta, self.init_phi, "init_params")

    def _check_lengths(self, theta, phi, section):
        f, x0 = self.dynamics(), self.history()
        if len(theta) != f.p:
            raise ConfigError(f"[{section}] theta needs {f.p} values for {self.model}, got {len(theta)}")
        if len(phi) != x0.q:
            raise ConfigError(f"[{section}] phi needs {x0.q} values for {self.ic}, got {len(phi)}")

    def fit_config(self, seed: int | None = None) -> FitConfig:
        self.require_init()
        return FitConfig(
            model=self.model, ic=self.ic,
            init_theta=tuple(self.init_theta), init_tau=self.init_tau,
            init_phi=tuple(self.init_phi), T=None, n_tau=self.n_tau,
            n_epochs=self.n_epochs, lr0=self.lr, L_min=self.L_min, loss=self.loss,
            seed=self.seed if seed is None else seed, beta1=self.beta1, beta2=self.beta2,
            tau_floor=self.tau_floor, init_phi_from_data=tuple(self.phi_from_data),
            model_kwargs=dict(self.model_kwargs),
        )

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _vec(text: str, what: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}")


def _ints(text: str, what: str) -> tuple:
    return tuple(int(v) for v in _vec(text, what))


def _get(cp, section, key, conv, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}")


def _norm(text: str | None, weights):
    if text is None or text.strip().lower() in ("", "none"):
        return None
    try:
        return NormKind(text.strip(), weights)
    except ValueError as exc:
        raise ConfigError(f"[loss] {exc}")


def preset_path(name: str) -> Path:
    return Path(str(resources.files("delayfit") / "presets" / f"{name}.ini"))


def resolve(path_or_preset) -> Path:
    p = Path(path_or_preset)
    if p.exists():
        return p
    if str(path_or_preset) in PRESETS:
        return preset_path(str(path_or_preset))
    raise ConfigError(f"config file {path_or_preset} not found (bundled presets: {', '.join(PRESETS)})")


def parse(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys such as T0 and L_min are case sensitive
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}")
    unknown = [s for s in cp.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {unknown}")

    name = _get(cp, "model", "name", str)
    if not name:
        raise ConfigError(f"{source}: [model] name is required")
    family = _get(cp, "ic", "family", str)
    if not family:
        raise ConfigError(f"{source}: [ic] family is required")

    kwargs = {}
    model_keys = _MODEL_KEYS.get(name, {})
    if cp.has_section("model"):
        for key in cp.options("model"):
            if key == "name":
                continue
            if key not in model_keys:
                raise ConfigError(f"{source}: [model] {key} is not a setting of {name}")
            kwargs[key] = _get(cp, "model", key, model_keys[key])
    if name == "hiv" and kwargs:
        kwargs = {"constants": HIVConstants(**kwargs)}

    weights = _get(cp, "loss", "weights", lambda s: _vec(s, "weights"))
    running = _norm(_get(cp, "loss", "running_norm", str, "L2"), weights or None)
    terminal = _norm(_get(cp, "loss", "terminal_norm", str), weights or None)
    try:
        loss = LossConfig(running, terminal)
    except ValueError as exc:
        raise ConfigError(f"{source}: [loss] {exc}")

    level = _get(cp, "noise", "level", float, 0.0)
    gc = GradcheckSettings(
        models=tuple(m.strip() for m in _get(cp, "gradcheck", "models", str, "").split(",") if m.strip()),
        n_tau=_get(cp, "grid", "gradcheck_n_tau", int),
        h_rel=_get(cp, "gradcheck", "h_rel", float, 1e-4),
        tol_theta_phi=_get(cp, "gradcheck", "tol_theta_phi", float, 1e-2),
        tol_tau=_get(cp, "gradcheck", "tol_tau", float, 5e-2),
        corrupt_jac_theta=_get(cp, "gradcheck", "corrupt_jac_theta", float, 0.0),
    )
    cfg = RunConfig(
        model=name, ic=family, model_kwargs=kwargs,
        true_theta=_get(cp, "true_params", "theta", lambda s: _vec(s, "theta")),
        true_tau=_get(cp, "true_params", "tau", float),
        true_phi=_get(cp, "true_params", "phi", lambda s: _vec(s, "phi")),
        init_theta=_get(cp, "init_params", "theta", lambda s: _vec(s, "theta")),
        init_tau=_get(cp, "init_params", "tau", float),
        init_phi=_get(cp, "init_params", "phi", lambda s: _vec(s, "phi")),
        phi_from_data=_get(cp, "init_params", "phi_from_data", lambda s: _ints(s, "phi_from_data"), ()),
        T=_get(cp, "grid", "T", float),
        data_dt=_get(cp, "grid", "data_dt", float, 0.1),
        n_tau=_get(cp, "grid", "n_tau", int, 10),
        loss=loss,
        n_epochs=_get(cp, "optimizer", "n_epochs", int, 500),
        lr=_get(cp, "optimizer", "lr", float, 0.03),
        L_min=_get(cp, "optimizer", "L_min", float, 0.01),
        beta1=_get(cp, "optimizer", "beta1", float, 0.9),
        beta2=_get(cp, "optimizer", "beta2", float, 0.999),
        tau_floor=_get(cp, "optimizer", "tau_floor", float, 1e-3),
        noise_level=level,
        noise_levels=_get(cp, "noise", "levels", lambda s: _vec(s, "levels"), (level,)),
        trials=_get(cp, "noise", "trials", int, 20),
        seed=_get(cp, "noise", "seed", int, 0),
        out_dir=_get(cp, "output", "dir", str, "out"),
        plots=_get(cp, "output", "plots", lambda s: cp.BOOLEAN_STATES[s.strip().lower()], True),
        gradcheck=gc,
        source=source,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    f = cfg.dynamics()  # raises on unknown model
    make_ic(cfg.ic, f.d)
    if cfg.n_tau < 1:
        raise ConfigError("[grid] n_tau must be >= 1")
    if not cfg.data_dt > 0:
        raise ConfigError("[grid] data_dt must be positive")
    if cfg.n_epochs < 0 or not cfg.lr > 0 or not cfg.L_min > 0:
        raise ConfigError("[optimizer] need n_epochs >= 0, lr > 0, L_min > 0")
    if not cfg.tau_floor > 0:
        raise ConfigError("[optimizer] tau_floor must be positive")
    if cfg.trials < 1:
        raise ConfigError("[noise] trials must be >= 1")
    if cfg.noise_level < 0 or any(v < 0 for v in cfg.noise_levels):
        raise ConfigError("[noise] levels must be >= 0")
    if cfg.init_tau is not None and not cfg.init_tau > 0:
        raise ConfigError("[init_params] tau must be positive")
    if cfg.true_tau is not None and not cfg.true_tau > 0:
        raise ConfigError("[true_params] tau must be positive")
    for m in cfg.gradcheck.models:
        if m not in MODEL_PRESETS:
            raise ConfigError(f"[gradcheck] unknown preset {m!r}")


def load(path_or_preset) -> RunConfig:
    path = resolve(path_or_preset)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")
    return parse(text, str(path))
