"""Seeded trial batches over the protocol and its attacks, plus report output.

Each trial draws from its own generator seeded with ``(seed, trial_index)``, so a
report does not depend on the order trials run in.
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .attacks import (
    MaExchange,
    PauliForgery,
    Permutation,
    outcome_from_record,
    symmetric_joint_state,
)
from .pauli import PauliString
from .protocol import TEST_MODES, VARIANTS, honest_recovery_exact, run_session
from .qotp import IH, PAULI, EncryptionScheme, uv_scheme
from .statevector import NAMED_GATES, fidelity, swap_test_joint

CONFIG_KEYS = (
    "n",
    "trials",
    "seed",
    "scheme",
    "variant",
    "test_mode",
    "attack",
    "message",
    "per_trial",
    "format",
    "out",
)
REQUIRED_KEYS = ("n", "trials", "scheme")
DEFAULTS = {
    "seed": "0",
    "variant": "A",
    "test_mode": "projective",
    "attack": "none",
    "message": "random",
    "per_trial": "false",
    "format": "table",
    "out": None,
}
FORMATS = ("table", "json", "csv")
MESSAGES = ("random", "zero", "plus")
ATTACK_KINDS = ("none", "pauli", "pauli-adapted", "ma-exchange", "ma-exchange-z", "permutation", "symmetric-demo")
DEMO_SEED = 20100
RECORD_FIELDS = ("trial", "accepted", "success", "detected", "analytic_detection", "fidelity")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    trials: int
    seed: int = 0
    scheme: str = "pauli"
    variant: str = "A"
    test_mode: str = "projective"
    attack: str = "none"
    message: str = "random"
    per_trial: bool = False
    name: str = "run"

    def encryption_scheme(self) -> EncryptionScheme:
        return parse_scheme(self.scheme)

    def echo(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k != "per_trial"}


def parse_scheme(text: str) -> EncryptionScheme:
    if text == "pauli":
        return PAULI
    if text == "ih":
        return IH
    if text.startswith("uv:"):
        parts = text[3:].split(",")
        if len(parts) != 2 or any(p not in NAMED_GATES for p in parts):
            raise ConfigError("scheme", f"uv needs two gates from {sorted(NAMED_GATES)}, got {text!r}")
        return uv_scheme(*parts)
    raise ConfigError("scheme", f"expected pauli, ih or uv:U,V, got {text!r}")


def parse_attack(text: str, n: int):
    """Return an attack object, ``None`` for honest runs, or ``"symmetric-demo"``."""
    kind, _, arg = text.partition(":")
    if kind not in ATTACK_KINDS:
        raise ConfigError("attack", f"unknown attack {kind!r}; choose from {', '.join(ATTACK_KINDS)}")
    if kind in ("none", "symmetric-demo"):
        if arg:
            raise ConfigError("attack", f"{kind} takes no argument")
        return None if kind == "none" else kind
    if not arg:
        raise ConfigError("attack", f"{kind} needs an argument, e.g. {kind}:...")
    if kind in ("pauli", "pauli-adapted"):
        try:
            q = PauliString.parse(arg)
        except ValueError as exc:
            raise ConfigError("attack", str(exc)) from None
        if len(q) != n:
            raise ConfigError("attack", f"Pauli {arg!r} has {len(q)} letters, n is {n}")
        return PauliForgery(q, q.conjugate_by_hadamard() if kind == "pauli-adapted" else None)
    try:
        idx = tuple(int(v) for v in arg.split(","))
    except ValueError:
        raise ConfigError("attack", f"expected comma-separated indices, got {arg!r}") from None
    if kind == "permutation":
        if sorted(idx) != list(range(n)):
            raise ConfigError("attack", f"{arg!r} is not a permutation of {n} positions")
        return Permutation(idx)
    if any(not 0 <= i < n for i in idx):
        raise ConfigError("attack", f"target indices {arg!r} out of range for n={n}")
    return MaExchange(idx, "Z" if kind == "ma-exchange-z" else "X")


def _as_int(key: str, value) -> int:
    try:
        return int(str(value).strip())
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {value!r}") from None


def _as_bool(key: str, value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {value!r}")


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"unknown key in {path}:{lineno}")
        values[key] = value
    return values


def build_config(values: dict, required=REQUIRED_KEYS) -> tuple[ExperimentConfig, dict]:
    """Validate merged raw values; returns the config and output options."""
    unknown = set(values) - set(CONFIG_KEYS)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(key, "unknown key")
    merged = {**DEFAULTS, **{k: v for k, v in values.items() if v is not None}}
    for key in required:
        if merged.get(key) is None:
            raise ConfigError(key, "missing required field")

    n = _as_int("n", merged["n"])
    if n < 1:
        raise ConfigError("n", "must be at least 1")
    if n > 6:
        raise ConfigError("n", "at most 6 qubits per message are supported")
    trials = _as_int("trials", merged["trials"])
    if trials < 1:
        raise ConfigError("trials", "must be at least 1")
    seed = _as_int("seed", merged["seed"])
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be a non-negative 64-bit integer")
    parse_scheme(merged["scheme"])
    if merged["variant"] not in VARIANTS:
        raise ConfigError("variant", f"expected A or B, got {merged['variant']!r}")
    if merged["test_mode"] not in TEST_MODES:
        raise ConfigError("test_mode", f"expected projective or swap, got {merged['test_mode']!r}")
    if merged["message"] not in MESSAGES:
        raise ConfigError("message", f"expected one of {', '.join(MESSAGES)}, got {merged['message']!r}")
    parse_attack(merged["attack"], n)
    fmt = merged["format"]
    if fmt not in FORMATS:
        raise ConfigError("format", f"expected one of {', '.join(FORMATS)}, got {fmt!r}")

    config = ExperimentConfig(
        n=n,
        trials=trials,
        seed=seed,
        scheme=merged["scheme"],
        variant=merged["variant"],
        test_mode=merged["test_mode"],
        attack=merged["attack"],
        message=merged["message"],
        per_trial=_as_bool("per_trial", merged["per_trial"]),
    )
    return config, {"format": fmt, "out": merged["out"]}


def parse_config(argv_values: dict, config_file: str | Path | None = None) -> tuple[ExperimentConfig, dict]:
    """Merge file values with command-line values; the command line wins."""
    values = read_config_file(config_file) if config_file else {}
    values.update({k: v for k, v in argv_values.items() if v is not None})
    return build_config(values)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    accept_rate: float
    success_rate: float
    mean_detection: float
    analytic_detection: float | None
    records: list[dict] | None = None
    duration_s: float = 0.0

    def summary(self) -> dict:
        return {
            "name": self.config.name,
            "config": self.config.echo(),
            "trials": self.config.trials,
            "accept_rate": _r(self.accept_rate),
            "success_rate": _r(self.success_rate),
            "mean_detection": _r(self.mean_detection),
            "analytic_detection": None if self.analytic_detection is None else _r(self.analytic_detection),
        }

    def to_dict(self, include_timing: bool = False) -> dict:
        out = self.summary()
        if self.records is not None:
            out["records"] = self.records
        if include_timing:
            out["duration_s"] = round(self.duration_s, 6)
        return out


def _r(x: float) -> float:
    return round(float(x), 12)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def run_trial(config: ExperimentConfig, trial: int, scheme: EncryptionScheme | None = None, attack=None) -> dict:
    rng = trial_rng(config.seed, trial)
    scheme = scheme or config.encryption_scheme()
    if attack is None:
        attack = parse_attack(config.attack, config.n)

    if attack == "symmetric-demo":
        passed = swap_test_joint(symmetric_joint_state(), rng)
        return _record(trial, passed, passed, 0.0, 1.0)

    tamper = None if attack is None else attack.forge
    record = run_session(config.n, scheme, config.variant, config.test_mode, rng, config.message, tamper=tamper)
    if attack is None:
        accepted = record.result.accepted
        success = accepted and honest_recovery_exact(record)
        return _record(trial, accepted, success, 0.0, record.result.recovered_fidelity)
    outcome = outcome_from_record(record, attack, scheme, config.test_mode)
    return _record(
        trial,
        outcome.accepted,
        outcome.success,
        outcome.analytic_detection,
        fidelity(outcome.intended_target, outcome.delivered),
    )


def _record(trial, accepted, success, analytic, fid) -> dict:
    return {
        "trial": trial,
        "accepted": bool(accepted),
        "success": bool(success),
        "detected": not accepted,
        "analytic_detection": None if analytic is None else _r(analytic),
        "fidelity": _r(fid),
    }


def run(config: ExperimentConfig) -> ExperimentReport:
    start = time.perf_counter()
    scheme = config.encryption_scheme()
    attack = parse_attack(config.attack, config.n)
    records = [run_trial(config, t, scheme, attack) for t in range(config.trials)]
    analytic = [r["analytic_detection"] for r in records]
    return ExperimentReport(
        config=config,
        accept_rate=sum(r["accepted"] for r in records) / config.trials,
        success_rate=sum(r["success"] for r in records) / config.trials,
        mean_detection=sum(r["detected"] for r in records) / config.trials,
        analytic_detection=None if None in analytic else sum(analytic) / len(analytic),
        records=records if config.per_trial else None,
        duration_s=time.perf_counter() - start,
    )


def demo_configs(seed: int = DEMO_SEED, n: int = 4, trials: int = 1000) -> list[ExperimentConfig]:
    """Honest run, direct Pauli forgery, Bell-record forgery, Hadamard defense."""
    mixed = "".join("XYZ"[k % 3] for k in range(n))
    return [
        ExperimentConfig(n, trials, seed, "pauli", "A", "projective", "none", name="honest"),
        ExperimentConfig(n, trials, seed + 1, "pauli", "A", "projective", f"pauli:{mixed}", name="pauli-forgery"),
        ExperimentConfig(
            n, trials, seed + 2, "pauli", "B", "projective",
            "ma-exchange:" + ",".join(map(str, range(n))), name="ma-exchange-forgery",
        ),
        ExperimentConfig(n, trials, seed + 3, "ih", "A", "projective", "pauli:" + "X" * n, name="ih-defense"),
    ]


def render(reports: list[ExperimentReport], fmt: str, include_timing: bool = False) -> str:
    if fmt == "json":
        if len(reports) == 1:
            body = reports[0].to_dict(include_timing)
        else:
            body = {"experiments": [r.to_dict(include_timing) for r in reports]}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        return _render_csv(reports)
    if fmt == "table":
        return _render_table(reports)
    raise ValueError(f"unknown format {fmt!r}")


def _render_csv(reports: list[ExperimentReport]) -> str:
    buf = io.StringIO()
    if len(reports) == 1 and reports[0].records is not None:
        writer = csv.DictWriter(buf, fieldnames=RECORD_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rec in reports[0].records:
            writer.writerow({k: "" if rec[k] is None else rec[k] for k in RECORD_FIELDS})
        return buf.getvalue()
    fields = ["name", "n", "trials", "seed", "scheme", "variant", "test_mode", "attack", "message",
              "accept_rate", "success_rate", "mean_detection", "analytic_detection"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        s = rep.summary()
        row = {**s["config"], **{k: s[k] for k in ("accept_rate", "success_rate", "mean_detection")}}
        row["analytic_detection"] = "" if s["analytic_detection"] is None else s["analytic_detection"]
        writer.writerow({k: row[k] for k in fields})
    return buf.getvalue()


def _render_table(reports: list[ExperimentReport]) -> str:
    head = ("experiment", "scheme", "var", "mode", "attack", "trials", "accept", "success", "detect", "analytic", "secs")
    rows = [head]
    for rep in reports:
        c = rep.config
        rows.append((
            c.name, c.scheme, c.variant, c.test_mode, c.attack, str(c.trials),
            f"{rep.accept_rate:.4f}", f"{rep.success_rate:.4f}", f"{rep.mean_detection:.4f}",
            "-" if rep.analytic_detection is None else f"{rep.analytic_detection:.4f}",
            f"{rep.duration_s:.2f}",
        ))
    widths = [max(len(r[k]) for r in rows) for k in range(len(head))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def emit_report(reports, fmt: str = "table", path: str | Path | None = None, include_timing: bool = False) -> str:
    """Render and write to ``path`` (stdout when ``None``); returns the text."""
    if isinstance(reports, ExperimentReport):
        reports = [reports]
    text = render(list(reports), fmt, include_timing)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text
