"""Command-line front end.

Subcommands: ``generate`` (CMC or perturbed sphere profiles), ``energy``
(evaluate a stored profile), ``verify`` (criticality, minimality, descent,
identities suites), ``sweep`` (parameter tables).  Configuration comes
from flags, optionally merged over a JSON config file; every output embeds
the effective configuration so a run can be reproduced bit for bit from
its own artifacts.

Exit codes: 0 success, 1 invalid configuration or malformed input,
2 sphere nonexistence, 3 I/O failure, 4 verification threshold failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import experiments, profile as profile_mod
from .experiments import (
    PerturbationSpec,
    SweepSpec,
    descend_energy,
    sweep,
    verify_criticality,
    verify_minimality,
    write_sweep_csv,
)
from .functional import (
    FunctionalCoefficients,
    canonical_coefficients,
    energy,
    gauss_bonnet_total,
    h_squared_identity_check,
    residual_trace,
    second_summand_derivative_check,
    willmore_relation_check,
)
from .geometry import GeometryParams
from .profile import (
    ExistenceViolation,
    InadmissiblePerturbation,
    IntegrationError,
    Profile,
    generate_cmc_sphere,
    perturbed_sphere,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EXISTENCE = 2
EXIT_IO = 3
EXIT_VERIFICATION = 4

# Named tolerances exposed as --tol-<name>; unset ones fall back to the
# module defaults and all effective values are echoed into output metadata.
TOLERANCES = {
    "rtol": profile_mod.DEFAULT_RTOL,
    "atol": profile_mod.DEFAULT_ATOL,
    "conservation": profile_mod.CONSERVATION_TOL,
    "closure-identity": profile_mod.CLOSURE_IDENTITY_TOL,
    "axis-epsilon": profile_mod.AXIS_EPSILON,
    "residual": experiments.RESIDUAL_TOL,
    "variation": experiments.VARIATION_TOL,
    "energy": experiments.ENERGY_TOL,
    "min-excess": experiments.MIN_EXCESS,
    "second-summand": experiments.SECOND_SUMMAND_TOL,
    "identity": 1e-12,
    "relation": 1e-8,
    "gauss-bonnet": 1e-3,
    "derivative-check": 1e-5,
    "descent-coeff": 1e-4,
}


class ConfigError(ValueError):
    """Invalid command line or configuration file."""


class VerificationFailure(RuntimeError):
    """A verification suite missed its thresholds."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); 2 means nonexistence here
        raise ConfigError(message)


@dataclass
class RunConfig:
    """Effective configuration of one command invocation."""

    k: float | None = None
    tau: float | None = None
    H: float | None = None
    alpha: float | None = None
    beta: float | None = None
    epsilon: float | None = None
    mode: int = 1
    samples: int = profile_mod.DEFAULT_SAMPLES
    out: str | None = None
    format: str = "csv"
    seed: int = 20260810
    family_dims: int = 3
    max_iterations: int = 200
    tolerances: dict = field(default_factory=dict)

    def geometry(self) -> GeometryParams:
        if self.k is None or self.tau is None:
            raise ConfigError("k and tau are required (flags --k/--tau or config file)")
        return GeometryParams(self.k, self.tau)

    def coefficients(self, g: GeometryParams) -> FunctionalCoefficients:
        if self.alpha is None and self.beta is None:
            return canonical_coefficients(g)
        canonical = canonical_coefficients(g)
        return FunctionalCoefficients(
            alpha=canonical.alpha if self.alpha is None else self.alpha,
            beta=canonical.beta if self.beta is None else self.beta,
        )

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, TOLERANCES[name])

    def effective(self) -> dict:
        data = {
            "k": self.k,
            "tau": self.tau,
            "H": self.H,
            "alpha": self.alpha,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "mode": self.mode,
            "samples": self.samples,
            "out": self.out,
            "format": self.format,
            "seed": self.seed,
            "family_dims": self.family_dims,
            "max_iterations": self.max_iterations,
            "tolerances": {name: self.tol(name) for name in TOLERANCES},
        }
        return data


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--k", type=float, help="base curvature")
    parser.add_argument("--tau", type=float, help="bundle curvature")
    parser.add_argument("--H", type=float, help="mean curvature of the CMC sphere")
    parser.add_argument("--alpha", type=float, help="energy coefficient alpha")
    parser.add_argument("--beta", type=float, help="energy coefficient beta")
    parser.add_argument("--epsilon", type=float, help="shape perturbation amplitude")
    parser.add_argument("--mode", type=int, help="shape perturbation mode (default 1)")
    parser.add_argument("--samples", type=int, help="profile sample count")
    parser.add_argument("--out", "-o", help="output path")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--seed", type=int, help="seed for randomized identity checks")
    for name in TOLERANCES:
        parser.add_argument(
            f"--tol-{name}",
            type=float,
            dest=f"tol_{name.replace('-', '_')}",
            help=f"override tolerance {name} (default {TOLERANCES[name]:g})",
        )


def _build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            with path.open() as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        for key in ("k", "tau", "H", "alpha", "beta", "epsilon"):
            if data.get(key) is not None:
                setattr(config, key, float(data[key]))
        for key in ("mode", "samples", "seed", "family_dims", "max_iterations"):
            if data.get(key) is not None:
                setattr(config, key, int(data[key]))
        if data.get("out") is not None:
            config.out = str(data["out"])
        if data.get("format") is not None:
            config.format = str(data["format"])
        for name, value in data.get("tolerances", {}).items():
            if name not in TOLERANCES:
                raise ConfigError(f"unknown tolerance {name!r} in config file")
            config.tolerances[name] = float(value)
    for key in ("k", "tau", "H", "alpha", "beta", "epsilon"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    for key in ("mode", "samples", "seed", "family_dims", "max_iterations"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "out", None) is not None:
        config.out = args.out
    if getattr(args, "format", None) is not None:
        config.format = args.format
    for name in TOLERANCES:
        value = getattr(args, f"tol_{name.replace('-', '_')}", None)
        if value is not None:
            config.tolerances[name] = value
    if config.samples < 9:
        raise ConfigError("samples must be at least 9")
    if config.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {config.format!r}")
    return config


def _write_json(path: Path, document: dict) -> None:
    with path.open("w") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _profile_to_json(p: Profile) -> dict:
    return {
        "geometry": p.geometry.to_dict(),
        "mean_curvature": p.mean_curvature,
        "closure": p.closure.value,
        "orientation": p.orientation,
        "j_drift": p.j_drift,
        "closure_residual": p.closure_residual,
        "tolerances": p.tolerances,
        "samples": {
            "s": [repr(float(x)) for x in p.s],
            "u": [repr(float(x)) for x in p.u],
            "v": [repr(float(x)) for x in p.v],
            "sigma": [repr(float(x)) for x in p.sigma],
        },
    }


def _profile_from_json(path: Path) -> Profile:
    with path.open() as fh:
        data = json.load(fh)
    if "profile" in data:
        data = data["profile"]
    samples = data["samples"]
    mean_curvature = data.get("mean_curvature")
    return Profile(
        s=np.array([float(x) for x in samples["s"]]),
        u=np.array([float(x) for x in samples["u"]]),
        v=np.array([float(x) for x in samples["v"]]),
        sigma=np.array([float(x) for x in samples["sigma"]]),
        geometry=GeometryParams.from_dict(data["geometry"]),
        mean_curvature=None if mean_curvature is None else float(mean_curvature),
        closure=profile_mod.Closure(data.get("closure", "Open")),
        orientation=int(data.get("orientation", 1)),
        j_drift=data.get("j_drift"),
        closure_residual=data.get("closure_residual"),
        tolerances=data.get("tolerances"),
    )


def load_profile(path) -> Profile:
    """Read a profile written by ``generate`` (CSV plus sidecar, or JSON)."""
    path = Path(path)
    if path.suffix == ".json" and not path.name.endswith(".csv.json"):
        return _profile_from_json(path)
    return Profile.from_csv(path)


def cmd_generate(config: RunConfig) -> int:
    if config.H is None:
        raise ConfigError("generate requires --H")
    if config.out is None:
        raise ConfigError("generate requires --out")
    g = config.geometry()
    if config.epsilon is not None and config.epsilon != 0.0:
        spec = PerturbationSpec(config.epsilon, config.mode)
        result = perturbed_sphere(g, config.H, spec, n_samples=config.samples)
    else:
        result = generate_cmc_sphere(
            g,
            config.H,
            n_samples=config.samples,
            rtol=config.tol("rtol"),
            atol=config.tol("atol"),
            axis_epsilon=config.tol("axis-epsilon"),
            identity_tol=config.tol("closure-identity"),
            conservation_tol=config.tol("conservation"),
        )
    out = Path(config.out)
    if config.format == "json":
        _write_json(out, {"config": config.effective(), "profile": _profile_to_json(result)})
    else:
        result.to_csv(out, metadata={"config": config.effective()})
    print(f"wrote {out} ({result.closure.value}, {len(result)} samples)")
    return EXIT_OK


def cmd_energy(config: RunConfig, profile_path: str) -> int:
    try:
        prof = load_profile(profile_path)
    except FileNotFoundError:
        raise
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed profile file {profile_path}: {exc}") from exc
    g = prof.geometry
    coeffs = config.coefficients(g)
    try:
        report = energy(prof, coeffs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"E = {report.E!r}")
    print(f"E - 4*pi = {report.E - 4.0 * math.pi!r}")
    if config.out:
        doc = {
            "config": config.effective(),
            "profile_file": str(profile_path),
            "coefficients": coeffs.to_dict(),
            "report": report.to_dict(),
        }
        _write_json(Path(config.out), doc)
        print(f"wrote {config.out}")
    return EXIT_OK


def _identities_report(config: RunConfig) -> dict:
    g = config.geometry()
    H = config.H if config.H is not None else 1.0
    rng = np.random.default_rng(config.seed)
    n_random = 10_000
    u_hi = min(3.0, 0.9 * g.domain_radius)
    u = rng.uniform(0.05, u_hi, n_random)
    sigma = rng.uniform(0.0, math.pi, n_random)
    sigma_dot = rng.uniform(-2.0, 2.0, n_random)
    identity_max = float(np.max(h_squared_identity_check(g, u, sigma, sigma_dot)))

    cmc = generate_cmc_sphere(g, H, n_samples=config.samples)
    spec = PerturbationSpec(config.epsilon if config.epsilon is not None else 0.1, config.mode)
    perturbed = perturbed_sphere(g, H, spec, n_samples=config.samples)
    checks = {
        "h_squared_identity": identity_max,
        "willmore_relation_cmc": willmore_relation_check(cmc),
        "willmore_relation_perturbed": willmore_relation_check(perturbed),
        "gauss_bonnet_cmc": abs(gauss_bonnet_total(cmc) - 4.0 * math.pi),
        "gauss_bonnet_perturbed": abs(gauss_bonnet_total(perturbed) - 4.0 * math.pi),
        "second_summand_derivative_cmc": second_summand_derivative_check(cmc),
        "second_summand_derivative_perturbed": second_summand_derivative_check(perturbed),
    }
    thresholds = {
        "h_squared_identity": config.tol("identity"),
        "willmore_relation_cmc": config.tol("relation"),
        "willmore_relation_perturbed": config.tol("relation"),
        "gauss_bonnet_cmc": config.tol("gauss-bonnet"),
        "gauss_bonnet_perturbed": config.tol("gauss-bonnet"),
        "second_summand_derivative_cmc": config.tol("derivative-check"),
        "second_summand_derivative_perturbed": config.tol("derivative-check"),
    }
    failed = [name for name, value in checks.items() if value > thresholds[name]]
    return {
        "checks": checks,
        "thresholds": thresholds,
        "failed": failed,
        "passed": not failed,
    }


def cmd_verify(config: RunConfig, which: str, trace_path: str | None = None) -> int:
    g = config.geometry()
    doc: dict = {"experiment": which, "config": config.effective()}
    failure: str | None = None

    if which == "criticality":
        if config.H is None:
            raise ConfigError("verify criticality requires --H")
        coeffs = config.coefficients(g)
        report = verify_criticality(
            g,
            config.H,
            coeffs,
            residual_tol=config.tol("residual"),
            variation_tol=config.tol("variation"),
            n_samples=config.samples,
        )
        doc["report"] = report.to_dict()
        doc["passed"] = report.passed
        if trace_path:
            prof = generate_cmc_sphere(g, config.H, n_samples=config.samples)
            _write_trace(Path(trace_path), prof, coeffs)
        if not report.passed:
            if report.max_residual >= config.tol("residual"):
                failure = f"max residual {report.max_residual:.3e}"
            else:
                worst = max(report.variations, key=lambda v: abs(v.dE_dt))
                failure = f"first variation {worst.dE_dt:.3e} ({worst.velocity_profile_id})"
    elif which == "minimality":
        if config.H is None:
            raise ConfigError("verify minimality requires --H")
        report = verify_minimality(
            g,
            config.H,
            energy_tol=config.tol("energy"),
            min_excess=config.tol("min-excess"),
            second_summand_tol=config.tol("second-summand"),
            n_samples=config.samples,
        )
        doc["report"] = report.to_dict()
        doc["passed"] = report.passed
        if not report.passed:
            failure = "minimality thresholds"
    elif which == "descent":
        if config.H is None:
            raise ConfigError("verify descent requires --H")
        start = None
        if config.epsilon is not None:
            start = PerturbationSpec(config.epsilon, config.mode)
        report = descend_energy(
            g,
            config.H,
            config.family_dims,
            start=start,
            max_iterations=config.max_iterations,
            coeff_tol=config.tol("descent-coeff"),
            energy_tol=config.tol("energy"),
        )
        doc["report"] = report.to_dict()
        doc["passed"] = report.converged
        if not report.converged:
            failure = f"descent stagnation (gradient norm {report.gradient_norm:.3e})"
    elif which == "identities":
        report = _identities_report(config)
        doc["report"] = report
        doc["passed"] = report["passed"]
        if not report["passed"]:
            failure = f"identity check {report['failed'][0]}"
    else:
        raise ConfigError(f"unknown verification suite {which!r}")

    out = Path(config.out) if config.out else Path(f"verify_{which}.json")
    _write_json(out, doc)
    print(f"wrote {out}")
    if failure is not None:
        print(f"FAILED: {failure}", file=sys.stderr)
        raise VerificationFailure(failure)
    print("passed")
    return EXIT_OK


def _write_trace(path: Path, prof: Profile, coeffs: FunctionalCoefficients) -> None:
    trace = residual_trace(prof, coeffs)
    columns = ["s", "u", "sigma", "H", "K", "nu", "residual"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in zip(*(trace[c] for c in columns)):
            writer.writerow([repr(float(x)) for x in row])


def cmd_sweep(config: RunConfig, spec_path: str) -> int:
    try:
        with Path(spec_path).open() as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read sweep spec: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep spec is not valid JSON: {exc}") from exc
    try:
        spec = SweepSpec.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep spec: {exc}") from exc
    rows = sweep(spec, n_samples=config.samples)
    out = Path(config.out) if config.out else Path("sweep.csv")
    with out.open("w", newline="") as fh:
        write_sweep_csv(rows, fh)
    _write_json(
        out.with_name(out.name + ".json"),
        {"config": config.effective(), "spec": data, "rows": len(rows)},
    )
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tw", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a CMC or perturbed sphere profile")
    _add_common(p_gen)

    p_energy = sub.add_parser("energy", help="evaluate the energy of a stored profile")
    p_energy.add_argument("profile", help="profile file written by generate")
    _add_common(p_energy)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument(
        "which", choices=("criticality", "minimality", "descent", "identities")
    )
    p_verify.add_argument("--trace", help="write per-sample residual trace CSV (criticality)")
    _add_common(p_verify)
    p_verify.add_argument("--family-dims", type=int, dest="family_dims")
    p_verify.add_argument("--max-iterations", type=int, dest="max_iterations")

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep from a spec file")
    p_sweep.add_argument("spec", help="JSON sweep specification")
    _add_common(p_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _build_config(args)
        if args.command == "generate":
            return cmd_generate(config)
        if args.command == "energy":
            return cmd_energy(config, args.profile)
        if args.command == "verify":
            return cmd_verify(config, args.which, trace_path=args.trace)
        if args.command == "sweep":
            return cmd_sweep(config, args.spec)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExistenceViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXISTENCE
    except InadmissiblePerturbation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except VerificationFailure:
        return EXIT_VERIFICATION
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
