"""Command-line front end.

Exit codes: 0 success, 2 usage or parameter error, 3 solver failure,
4 numerical failure. Every command writes ``<out>.manifest.json`` next to
its output; ``ufofdm replay <manifest>`` re-runs it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ChannelModel, analytic_psd, compute_papr_ccdf, empirical_psd, \
    filter_sidelobe_db, run_ber_experiment, sigma_tilde, write_ber_csv, write_ccdf_csv, \
    write_psd_csv
from .chain import ChainConfig
from .design import DesignSpec, DEFAULT_STOPBAND_START, format_angle, parse_angle, \
    parse_carriers, read_config, shift_carriers
from .errors import ConfigurationError, ExperimentError, FactorizationError, ParameterError, \
    SolverError, SpectralNullError
from .lp import write_mps
from .pipeline import design_filter
from .reference import dolph_chebyshev, identity_filter
from .spectral import FirFilter

log = logging.getLogger("ufofdm")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_NUMERIC = 0, 2, 3, 4
THREADS_ENV = "UFOFDM_THREADS"


class UsageError(Exception):
    pass


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest_path(out) -> Path:
    return Path(out).with_suffix(".manifest.json")


def _write_manifest(args, argv, started, inputs, outputs, results=None):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    doc = {
        "command": args.command,
        "parameters": params,
        "argv": argv,
        "master_seed": params.get("seed"),
        "tool_version": __version__,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "wall_clock_seconds": time.time() - started,
    }
    if results:
        doc["results"] = results
    path = _manifest_path(outputs[0])
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (tuple, set)):
        return list(o)
    return str(o)


def _canonical_argv(args, flags) -> list[str]:
    argv = [args.command]
    for dest, flag in flags:
        value = getattr(args, dest)
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif value is not None:
            argv += [flag, str(value)]
    return argv


def _load_filter(path) -> FirFilter:
    try:
        return FirFilter.load(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read filter file {path}: {exc}") from exc


def _spec_for(f: FirFilter, args) -> DesignSpec:
    M = f.M if f.M is not None else args.M
    carriers = f.carriers if f.carriers is not None else parse_carriers(args.carriers, M)
    start = parse_angle(getattr(args, "stopband_start", DEFAULT_STOPBAND_START))
    return DesignSpec(M=M, N=f.N, carriers=carriers, stopband_start=start)


def _parse_snr_grid(text: str) -> list[float]:
    try:
        if ":" in text:
            lo, step, hi = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [round(lo + i * step, 12) for i in range(count)]
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"bad SNR grid {text!r}; expected lo:step:hi") from None


# --------------------------------------------------------------------------- commands

DESIGN_FLAGS = [("M", "--M"), ("N", "--N"), ("carriers", "--carriers"), ("lam", "--lambda"),
                ("stopband_start", "--stopband-start"), ("grid_S", "--grid-S"),
                ("grid_G", "--grid-G"), ("tol", "--tol"), ("out", "--out"),
                ("dump_lp", "--dump-lp")]


def cmd_design(args) -> int:
    started = time.time()
    start = parse_angle(args.stopband_start)
    spec = DesignSpec(M=args.M, N=args.N, carriers=parse_carriers(args.carriers, args.M),
                      lam=args.lam, stopband_start=start, stopband_grid_S=args.grid_S,
                      nonneg_grid_G=args.grid_G)
    outer = shift_carriers(spec).omega_c.max()
    overlap = start <= outer
    if overlap:
        log.warning("stopband start %s lies below the outermost carrier (%.6f rad); "
                    "side-lobe and carrier-gain constraints conflict", format_angle(start), outer)
    if args.dump_lp:
        from .design import assemble_lp
        write_mps(assemble_lp(spec, allow_overlap=overlap), args.dump_lp, name="UFOFDM")
    result = design_filter(spec, tol=args.tol, allow_overlap=overlap)
    result.filter.save(args.out)
    diag = result.diagnostics()
    print(f"status          {diag['status']} ({diag['iterations']} iterations)")
    print(f"objective       {diag['objective']:.12g}")
    print(f"t1              {diag['t1']:.12g}")
    print(f"t2              {diag['t2']:.12g}")
    print(f"residuals       primal {diag['primal_residual']:.3e}  dual {diag['dual_residual']:.3e}"
          f"  gap {diag['gap']:.3e}")
    print(f"repaired        {diag['repaired']}")
    print(f"roundtrip error {diag['roundtrip_error']:.3e}")
    print(f"stopband max    {diag['stopband_max_db']:.2f} dB")
    print(f"wrote           {args.out}")
    outputs = [args.out] + ([args.dump_lp] if args.dump_lp else [])
    _write_manifest(args, _canonical_argv(args, DESIGN_FLAGS), started, [], outputs,
                    {k: v for k, v in diag.items()})
    return EXIT_OK


SPECTRUM_FLAGS = [("filter", "--filter"), ("points", "--points"), ("empirical", "--empirical"),
                  ("seed", "--seed"), ("stopband_start", "--stopband-start"), ("out", "--out")]


def cmd_spectrum(args) -> int:
    started = time.time()
    f = _load_filter(args.filter)
    spec = _spec_for(f, args)
    if args.empirical:
        fft_size = 1 << max(4 * spec.M - 1, 2 * (args.points - 1) - 1).bit_length()
        rng = np.random.default_rng(args.seed)
        trace = empirical_psd(f, spec, args.empirical, fft_size, rng)
    else:
        trace = analytic_psd(f, spec, args.points)
    write_psd_csv(trace, args.out)
    peak = trace.omega[int(np.argmax(trace.analytic_db))]
    sb = trace.stopband_max_db(spec.stopband_start)
    print(f"peak at         {peak / np.pi:.6f} pi")
    print(f"stopband max    {sb:.2f} dB (from {format_angle(spec.stopband_start)})")
    side = filter_sidelobe_db(f)
    if np.isfinite(side):
        print(f"filter sidelobe {side:.2f} dB")
    print(f"wrote           {args.out}")
    _write_manifest(args, _canonical_argv(args, SPECTRUM_FLAGS), started, [args.filter],
                    [args.out], {"stopband_max_db": sb, "peak_omega": float(peak),
                                 "filter_sidelobe_db": side if np.isfinite(side) else None})
    return EXIT_OK


BER_FLAGS = [("filter", "--filter"), ("channel", "--channel"), ("L", "--L"), ("D", "--D"),
             ("snr_db", "--snr-db"), ("snr_definition", "--snr-definition"), ("bits", "--bits"),
             ("seed", "--seed"), ("real_taps", "--real-taps"), ("out", "--out")]


def cmd_ber(args) -> int:
    started = time.time()
    f = _load_filter(args.filter)
    spec = _spec_for(f, args)
    L = args.L if args.channel == "rayleigh" else 1
    if L - 1 > args.D:
        raise UsageError(f"L-1 = {L - 1} exceeds the zero padding D = {args.D}; the "
                         "no-intersymbol-interference assumption L-1 <= D is violated")
    if args.bits < 1:
        raise UsageError("--bits must be positive")
    cfg = ChainConfig(spec.M, args.D, spec.carriers, f)
    model = ChannelModel(args.channel, L, args.real_taps)
    curve = run_ber_experiment(cfg, model, _parse_snr_grid(args.snr_db), args.bits, args.seed,
                               threads=args.threads, snr_definition=args.snr_definition)
    write_ber_csv(curve, args.out)
    for p in curve.points:
        print(f"snr {p.snr_db:7.2f} dB  ber {p.ber:.6e}  [{p.ci_low:.3e}, {p.ci_high:.3e}]"
              f"  errors {p.bit_errors}/{p.bits}")
    print(f"wrote {args.out}")
    redraws = sum(p.redraws for p in curve.points)
    _write_manifest(args, _canonical_argv(args, BER_FLAGS), started, [args.filter], [args.out],
                    {"sigma_tilde": curve.sigma_tilde, "channel_redraws": redraws,
                     "channel_model": curve.channel_model})
    return EXIT_OK


PAPR_FLAGS = [("filter", "--filter"), ("symbols", "--symbols"), ("seed", "--seed"),
              ("interpolate", "--interpolate"), ("out", "--out")]


def cmd_papr(args) -> int:
    started = time.time()
    f = _load_filter(args.filter)
    spec = _spec_for(f, args)
    if args.symbols < 1000:
        log.warning("only %d symbols; CCDF tail estimates will be coarse", args.symbols)
    ccdf = compute_papr_ccdf(f, spec, args.symbols, args.seed, interpolate=args.interpolate,
                             threads=args.threads)
    write_ccdf_csv(ccdf, args.out)
    st = sigma_tilde(f, spec)
    print(f"sigma_tilde     {st:.6f}")
    for p in (1e-1, 1e-2, 1e-3):
        if p * ccdf.symbols_evaluated >= 1:
            print(f"PAPR at {p:g}    {ccdf.threshold_at(p):.3f} dB")
    print(f"wrote           {args.out}")
    _write_manifest(args, _canonical_argv(args, PAPR_FLAGS), started, [args.filter], [args.out],
                    {"sigma_tilde": st})
    return EXIT_OK


CHEB_FLAGS = [("N", "--N"), ("attenuation_db", "--attenuation-db"), ("M", "--M"),
              ("carriers", "--carriers"), ("out", "--out")]


def cmd_chebyshev(args) -> int:
    started = time.time()
    if args.N < 2:
        raise UsageError("--N must be at least 2 for a Dolph-Chebyshev filter")
    ctx = DesignSpec(M=args.M, N=args.N, carriers=parse_carriers(args.carriers, args.M))
    f = dolph_chebyshev(args.N, args.attenuation_db, ctx)
    f.save(args.out)
    print(f"coefficients    {np.array2string(f.coefficients, precision=6)}")
    print("normalized to the power-conservation equality of the carrier set")
    print(f"wrote           {args.out}")
    _write_manifest(args, _canonical_argv(args, CHEB_FLAGS), started, [], [args.out])
    return EXIT_OK


IDENTITY_FLAGS = [("M", "--M"), ("carriers", "--carriers"), ("out", "--out")]


def cmd_identity(args) -> int:
    started = time.time()
    spec = DesignSpec(M=args.M, N=1, carriers=parse_carriers(args.carriers, args.M))
    identity_filter(spec).save(args.out)
    print(f"wrote {args.out}")
    _write_manifest(args, _canonical_argv(args, IDENTITY_FLAGS), started, [], [args.out])
    return EXIT_OK


def cmd_replay(args) -> int:
    doc = json.loads(Path(args.manifest).read_text())
    argv = list(doc["argv"])
    threads = doc.get("parameters", {}).get("threads")
    if args.threads is not None:
        threads = args.threads
    if threads is not None and doc["command"] in ("ber", "papr"):
        argv += ["--threads", str(threads)]
    return main(argv)


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ufofdm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--config", help="key = value file; its entries override flags")
        sp.add_argument("--out", default=out_default)

    d = sub.add_parser("design", help="design a filter by linear programming")
    common(d, "filter.json")
    d.add_argument("--M", type=int, default=128)
    d.add_argument("--N", type=int, default=16)
    d.add_argument("--carriers", default="4:19")
    d.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    d.add_argument("--stopband-start", default="17pi/64")
    d.add_argument("--grid-S", dest="grid_S", type=int, default=None)
    d.add_argument("--grid-G", dest="grid_G", type=int, default=None)
    d.add_argument("--tol", type=float, default=1e-10)
    d.add_argument("--dump-lp", default=None, help="also write the LP in MPS format")
    d.set_defaults(func=cmd_design)

    def filter_ctx(sp):
        sp.add_argument("--filter", required=True)
        sp.add_argument("--M", type=int, default=128, help="used if the filter file lacks M")
        sp.add_argument("--carriers", default="4:19", help="used if the filter file lacks them")

    s = sub.add_parser("spectrum", help="power spectrum of a filtered OFDM signal")
    common(s, "psd.csv")
    filter_ctx(s)
    s.add_argument("--points", type=int, default=4096)
    s.add_argument("--empirical", type=int, default=0, metavar="FRAMES")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--stopband-start", default="17pi/64")
    s.set_defaults(func=cmd_spectrum)

    b = sub.add_parser("ber", help="Monte Carlo bit error rate")
    common(b, "ber.csv")
    filter_ctx(b)
    b.add_argument("--channel", choices=("awgn", "rayleigh"), default="rayleigh")
    b.add_argument("--L", type=int, default=12)
    b.add_argument("--D", type=int, default=16)
    b.add_argument("--snr-db", default="0:2:16")
    b.add_argument("--snr-definition", choices=("sigma_s_over_sigma_n", "eb_n0"),
                   default="sigma_s_over_sigma_n")
    b.add_argument("--bits", type=int, default=1_000_000)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--real-taps", action="store_true", help="real Gaussian channel taps")
    b.add_argument("--threads", type=int, default=_default_threads())
    b.set_defaults(func=cmd_ber)

    q = sub.add_parser("papr", help="PAPR complementary CDF")
    common(q, "ccdf.csv")
    filter_ctx(q)
    q.add_argument("--symbols", type=int, default=100_000)
    q.add_argument("--seed", type=int, default=1)
    q.add_argument("--interpolate", type=int, default=1)
    q.add_argument("--threads", type=int, default=_default_threads())
    q.set_defaults(func=cmd_papr)

    c = sub.add_parser("chebyshev", help="Dolph-Chebyshev baseline filter")
    common(c, "chebyshev.json")
    c.add_argument("--N", type=int, default=16)
    c.add_argument("--attenuation-db", type=float, default=45.0)
    c.add_argument("--M", type=int, default=128)
    c.add_argument("--carriers", default="4:19")
    c.set_defaults(func=cmd_chebyshev)

    i = sub.add_parser("identity", help="identity filter (plain OFDM baseline)")
    common(i, "identity.json")
    i.add_argument("--M", type=int, default=128)
    i.add_argument("--carriers", default="4:19")
    i.set_defaults(func=cmd_identity)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--threads", type=int, default=None)
    r.set_defaults(func=cmd_replay)
    return p


def _config_argv(argv: list[str]) -> list[str]:
    """Append flags from ``--config`` so they take precedence over earlier ones."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    try:
        entries = read_config(Path(argv[i + 1]).read_text())
    except (OSError, ParameterError) as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    extra = []
    for key, value in entries.items():
        flag = "--" + ("lambda" if key == "lambda" else
                       key if key in ("grid_S", "grid_G") else key.replace("_", "-"))
        flag = flag.replace("grid_", "grid-")
        if value.lower() in ("true", "yes", "on"):
            extra.append(flag)
        elif value.lower() not in ("false", "no", "off"):
            extra += [flag, value]
    return argv + extra


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_config_argv(argv))
    except UsageError as exc:
        print(f"ufofdm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, ParameterError) as exc:
        print(f"ufofdm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        sol = exc.solution
        print(f"ufofdm: solver failure: {exc}", file=sys.stderr)
        if sol is not None and sol.certificate is not None:
            print(f"certificate norm {np.linalg.norm(sol.certificate):.3e} "
                  f"({sol.certificate.size} entries)", file=sys.stderr)
        return EXIT_SOLVER
    except (FactorizationError, SpectralNullError, ExperimentError) as exc:
        print(f"ufofdm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
