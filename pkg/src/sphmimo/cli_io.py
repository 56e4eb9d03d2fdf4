"""Configuration, file formats and the `sphmimo` command-line workflows.

Subcommands: `simulate` (synthesize an RIR tensor from a scene config),
`analyze-rank` (effective-rank curve and singular spectra of a tensor),
`reproduce` (regularized sound-field reproduction report), and `ingest`
(pack measured per-loudspeaker WAVs into a tensor). Flags override config
fields, which override defaults.

Exit codes: 0 success, 2 validation error, 3 I/O or format error,
4 numeric/domain error.

All file writes go through a temp-file-and-rename so partial outputs never
appear, and every emitted file is byte-deterministic for a fixed config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from . import __version__
from . import analysis as ana
from . import room_image as ri
from .errors import DomainError, FormatError, ValidationError
from .mimo_freefield import SphArraySpec, elements_to_sh
from .sph_sampling import make_grid, read_grid_csv
from .sph_special import sh_num_coeffs

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

SH_MANIFEST_HEADER = ["channel", "mic_sh_index", "speaker_sh_index"]
ELEMENT_MANIFEST_HEADER = ["channel", "mic_element", "speaker_element"]


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """A fully validated run: scene objects plus synthesis/analysis settings."""

    room: ri.RoomSpec
    speaker: SphArraySpec
    microphone: SphArraySpec
    fs: int
    num_samples: int
    frequency_hz: float
    tau_grid: str
    threshold_db: float
    spectrum_taus: tuple
    output_dir: Path
    raw: dict


def _get(block: dict, key: str, context: str, expected=None):
    if key not in block:
        raise ValidationError(f"{context}.{key}: required field is missing")
    value = block[key]
    if expected is not None and not isinstance(value, expected):
        names = expected.__name__ if isinstance(expected, type) \
            else "/".join(t.__name__ for t in expected)
        raise ValidationError(f"{context}.{key}: expected {names}, got {type(value).__name__}")
    return value


def _build_grid(block: dict, context: str):
    if "file" in block:
        return read_grid_csv(block["file"])
    kind = _get(block, "kind", context, str)
    size = _get(block, "size", context, int)
    try:
        return make_grid(kind, size)
    except ValueError as exc:
        raise ValidationError(f"{context}: {exc}") from None


def _build_reflection(value, context: str) -> ri.WallReflection:
    if isinstance(value, (int, float)):
        return ri.WallReflection.uniform(float(value))
    if isinstance(value, dict):
        walls = _get(value, "walls", context, dict)
        if "band_edges_hz" in value:
            return ri.WallReflection(
                np.stack([np.atleast_1d(np.asarray(walls[w], dtype=float))
                          if w in walls else _missing_wall(context, w)
                          for w in ri.WALLS]),
                band_edges=np.asarray(value["band_edges_hz"], dtype=float))
        return ri.WallReflection.from_walls(walls)
    raise ValidationError(f"{context}: expected a number or an object with 'walls'")


def _missing_wall(context, wall):
    raise ValidationError(f"{context}.walls.{wall}: required wall is missing")


def _build_array(block: dict, role: str, context: str) -> SphArraySpec:
    grid = _build_grid(_get(block, "grid", context, dict), f"{context}.grid")
    common = dict(radius=float(_get(block, "radius", context, (int, float))),
                  grid=grid,
                  sh_order=_get(block, "sh_order", context, int),
                  role=role)
    if role == "loudspeaker":
        if "cap_alpha" not in block:
            raise ValidationError(f"{context}.cap_alpha: required field is missing "
                                  "(cap aperture half-angle, radians)")
        return SphArraySpec(cap_alpha=float(block["cap_alpha"]), **common)
    kind = _get(block, "sphere_kind", context, str)
    r_scatter = block.get("r_scatter")
    return SphArraySpec(sphere_kind=kind,
                        r_scatter=None if r_scatter is None else float(r_scatter),
                        **common)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: top level must be a JSON object")
    version = raw.get("version")
    if version != 1:
        raise ValidationError(f"version: expected 1, got {version!r}")

    scene = _get(raw, "scene", "config", dict)
    room_block = _get(scene, "room", "scene", dict)
    reflection = _build_reflection(_get(room_block, "reflection", "scene.room"),
                                   "scene.room.reflection")
    room = ri.RoomSpec(
        dims=np.asarray(_get(room_block, "dims", "scene.room", list), dtype=float),
        reflection=reflection,
        max_order=_get(room_block, "max_order", "scene.room", int),
        pos_speaker=np.asarray(_get(room_block, "pos_speaker", "scene.room", list), dtype=float),
        pos_mic=np.asarray(_get(room_block, "pos_mic", "scene.room", list), dtype=float))
    speaker = _build_array(_get(scene, "loudspeaker", "scene", dict),
                           "loudspeaker", "scene.loudspeaker")
    microphone = _build_array(_get(scene, "microphone", "scene", dict),
                              "microphone", "scene.microphone")
    room.geometry.validate_clearance(speaker, microphone)

    synth = _get(raw, "synthesis", "config", dict)
    fs = _get(synth, "fs", "synthesis", int)
    num_samples = _get(synth, "num_samples", "synthesis", int)
    if fs <= 0:
        raise ValidationError("synthesis.fs: must be > 0")
    if num_samples < 4 or num_samples & (num_samples - 1):
        raise ValidationError("synthesis.num_samples: must be a power of two >= 4")

    an = raw.get("analysis", {})
    frequency_hz = float(an.get("frequency_hz", 700.0))
    if not 0 < frequency_hz < fs / 2:
        raise ValidationError(f"analysis.frequency_hz: must lie in (0, fs/2), got {frequency_hz}")
    threshold_db = float(an.get("threshold_db", ana.DEFAULT_THRESHOLD_DB))
    tau_grid = an.get("tau_grid", "log:1e-3:full:60")
    parse_tau_grid(tau_grid, duration=num_samples / fs)  # validate early
    spectrum_taus = tuple(an.get("spectrum_taus", []))
    for tau in spectrum_taus:
        if tau != "full" and not isinstance(tau, (int, float)):
            raise ValidationError("analysis.spectrum_taus: entries must be numbers or 'full'")

    outputs = raw.get("outputs", {})
    output_dir = Path(outputs.get("directory", "out"))
    return RunConfig(room=room, speaker=speaker, microphone=microphone, fs=fs,
                     num_samples=num_samples, frequency_hz=frequency_hz,
                     tau_grid=tau_grid, threshold_db=threshold_db,
                     spectrum_taus=spectrum_taus, output_dir=output_dir, raw=raw)


def parse_tau_grid(spec: str, duration: float) -> np.ndarray:
    """Window grids: "log:<start>:<end|full>:<count>" or a comma list of seconds."""
    if isinstance(spec, (list, tuple)):
        taus = np.asarray(spec, dtype=float)
    elif spec.startswith("log:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise ValidationError(f"tau_grid: expected log:<start>:<end|full>:<count>, got {spec!r}")
        try:
            start = float(parts[1])
            end = duration if parts[2] == "full" else float(parts[2])
            count = int(parts[3])
        except ValueError:
            raise ValidationError(f"tau_grid: could not parse {spec!r}") from None
        if not 0 < start < end or count < 2:
            raise ValidationError(f"tau_grid: need 0 < start < end and count >= 2, got {spec!r}")
        taus = np.geomspace(start, end, count)
    else:
        try:
            taus = np.array([float(v) for v in spec.split(",")])
        except ValueError:
            raise ValidationError(f"tau_grid: could not parse {spec!r}") from None
    if taus.size == 0 or np.any(np.diff(taus) <= 0):
        raise ValidationError("tau_grid: values must be strictly increasing")
    return taus


# ---------------------------------------------------------------------------
# Atomic writers and file formats
# ---------------------------------------------------------------------------

def _atomic_write(path: Path, writer) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)
    return path


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> Path:
    def writer(tmp):
        with open(tmp, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    return _atomic_write(path, writer)


def read_csv_rows(path, expected_header):
    path = Path(path)
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header.split(",") != list(expected_header):
            raise FormatError(f"{path}: expected header {','.join(expected_header)!r}, "
                              f"got {header!r} (byte offset 0)")
        rows = []
        offset = len(header) + 1
        for lineno, line in enumerate(fh, start=2):
            if line.strip():
                parts = line.strip().split(",")
                if len(parts) != len(expected_header):
                    raise FormatError(f"{path}: line {lineno} (byte offset {offset}): "
                                      f"expected {len(expected_header)} columns")
                rows.append(parts)
            offset += len(line)
    return rows


def write_metadata(path, payload: dict) -> Path:
    def writer(tmp):
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return _atomic_write(path, writer)


def write_wav_float32(path, fs: int, data: np.ndarray) -> Path:
    data = np.ascontiguousarray(data, dtype=np.float32)
    return _atomic_write(path, lambda tmp: wavfile.write(tmp, int(fs), data))


def read_wav(path):
    path = Path(path)
    try:
        fs, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise FormatError(f"{path}: unreadable WAV ({exc})") from None
    if data.ndim == 1:
        data = data[:, None]
    return int(fs), data


# ---------------------------------------------------------------------------
# RIR tensor export / import
# ---------------------------------------------------------------------------

def export_rir_tensor(outdir, stem, samples: np.ndarray, fs: int,
                      domain: str = "sh") -> tuple[Path, Path]:
    """Write a (rows, cols, T) tensor as a multichannel float32 WAV plus a
    sidecar CSV mapping channel -> (row, col) in row-major order."""
    outdir = Path(outdir)
    rows, cols, T = samples.shape
    data = samples.reshape(rows * cols, T).T  # (T, channels)
    wav_path = write_wav_float32(outdir / f"{stem}.wav", fs, data)
    header = SH_MANIFEST_HEADER if domain == "sh" else ELEMENT_MANIFEST_HEADER
    manifest_rows = [(ch, ch // cols, ch % cols) for ch in range(rows * cols)]
    manifest_path = write_csv(outdir / f"{stem}_channels.csv", header, manifest_rows)
    return wav_path, manifest_path


def import_rir_tensor(wav_path, manifest_path=None):
    """Read a tensor WAV and its channel manifest; returns (samples, fs, domain).

    The manifest header decides whether the channels carry SH-domain or
    element-space indices.
    """
    wav_path = Path(wav_path)
    if manifest_path is None:
        manifest_path = wav_path.with_name(wav_path.stem + "_channels.csv")
    with open(manifest_path, newline="") as fh:
        header = fh.readline().strip().split(",")
    if header == SH_MANIFEST_HEADER:
        domain = "sh"
    elif header == ELEMENT_MANIFEST_HEADER:
        domain = "element"
    else:
        raise FormatError(f"{manifest_path}: unrecognized channel manifest header {header!r}")
    rows = read_csv_rows(manifest_path, header)
    fs, data = read_wav(wav_path)
    if data.shape[1] != len(rows):
        raise FormatError(f"{wav_path}: {data.shape[1]} channels but manifest lists {len(rows)}")
    n_rows = max(int(r[1]) for r in rows) + 1
    n_cols = max(int(r[2]) for r in rows) + 1
    if n_rows * n_cols != len(rows):
        raise FormatError(f"{manifest_path}: channel map does not tile {n_rows}x{n_cols}")
    samples = np.empty((n_rows, n_cols, data.shape[0]), dtype=np.float64)
    for r in rows:
        samples[int(r[1]), int(r[2]), :] = data[:, int(r[0])]
    return samples, fs, domain


# ---------------------------------------------------------------------------
# Measured-RIR ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasuredRir:
    """Element-space responses: (mic channel, speaker channel, time)."""

    samples: np.ndarray
    fs: float

    @property
    def num_mics(self) -> int:
        return self.samples.shape[0]

    @property
    def num_speakers(self) -> int:
        return self.samples.shape[1]


def read_layout_manifest(path):
    """Ingestion layout: CSV with header `file,speaker_index`; one WAV per
    loudspeaker unit, microphone index given by the WAV channel order."""
    rows = read_csv_rows(path, ["file", "speaker_index"])
    entries = []
    for r in rows:
        try:
            entries.append((r[0], int(r[1])))
        except ValueError:
            raise FormatError(f"{path}: speaker_index {r[1]!r} is not an integer") from None
    indices = sorted(idx for _, idx in entries)
    if indices != list(range(len(entries))):
        raise ValidationError(
            f"layout manifest: speaker_index values must cover 0..{len(entries) - 1} "
            f"exactly once, got {indices}")
    return entries


def ingest_measured(entries, base_dir=".") -> MeasuredRir:
    """Load and validate per-loudspeaker WAVs into a MeasuredRir tensor."""
    base_dir = Path(base_dir)
    num_speakers = len(entries)
    samples = None
    fs0 = None
    for fname, spk in sorted(entries, key=lambda e: e[1]):
        fs, data = read_wav(base_dir / fname)
        if fs0 is None:
            fs0 = fs
            samples = np.zeros((data.shape[1], num_speakers, data.shape[0]), dtype=np.float32)
        if fs != fs0:
            raise ValidationError(f"ingest: {fname} has fs={fs}, expected {fs0}")
        if data.shape[1] != samples.shape[0]:
            raise ValidationError(f"ingest: {fname} has {data.shape[1]} channels, "
                                  f"expected {samples.shape[0]}")
        if data.shape[0] != samples.shape[2]:
            raise FormatError(f"ingest: {fname} holds {data.shape[0]} samples, "
                              f"expected {samples.shape[2]} (truncated file?)")
        samples[:, spk, :] = data.T
    return MeasuredRir(samples=samples, fs=float(fs0))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _meta_payload(command: str, cfg: RunConfig | None, extra: dict) -> dict:
    payload = {"tool": "sphmimo", "version": __version__, "command": command}
    if cfg is not None:
        payload["config"] = cfg.raw
    payload.update(extra)
    return payload


def cmd_simulate(cfg: RunConfig, outdir=None) -> list[Path]:
    outdir = Path(outdir) if outdir else cfg.output_dir
    rir = ri.synthesize_rir(cfg.room, cfg.speaker, cfg.microphone,
                            fs=cfg.fs, num_samples=cfg.num_samples)
    wav_path, manifest_path = export_rir_tensor(outdir, "rir", rir.samples, cfg.fs, domain="sh")
    meta = write_metadata(outdir / "simulate_meta.json", _meta_payload(
        "simulate", cfg, {"rir_wav": wav_path.name,
                          "channels": manifest_path.name,
                          "tensor_shape": list(rir.samples.shape)}))
    return [wav_path, manifest_path, meta]


def _load_analysis_tensor(rir_path, cfg: RunConfig | None):
    """Load a tensor for windowed analysis.

    Returns (RirTensor, transform): SH-domain tensors analyze as-is;
    element-space tensors (real microphone signals) keep their raw samples
    and every windowed matrix is projected onto the SH domain through the
    discrete SFT of both arrays (exactly equivalent, by linearity, to
    projecting the time samples first).
    """
    samples, fs, domain = import_rir_tensor(rir_path)
    rir = ri.RirTensor(samples=np.ascontiguousarray(samples), fs=float(fs))
    if domain == "sh":
        return rir, None
    if cfg is None:
        raise ValidationError(
            "analyze-rank: element-space tensors need --config for the array layouts")
    Mch, Lch = samples.shape[0], samples.shape[1]
    if Mch != cfg.microphone.grid.size or Lch != cfg.speaker.grid.size:
        raise ValidationError(
            f"analyze-rank: tensor is {Mch}x{Lch} channels but config declares "
            f"{cfg.microphone.grid.size}x{cfg.speaker.grid.size} elements")
    return rir, lambda G: elements_to_sh(G, cfg.speaker, cfg.microphone)


def cmd_analyze_rank(rir_path, freq_hz=None, tau_grid=None, outdir=None,
                     cfg: RunConfig | None = None, spectrum_taus=None) -> list[Path]:
    freq_hz = freq_hz if freq_hz is not None else \
        (cfg.frequency_hz if cfg else 700.0)
    tau_spec = tau_grid if tau_grid is not None else \
        (cfg.tau_grid if cfg else "log:1e-3:full:60")
    outdir = Path(outdir) if outdir else (cfg.output_dir if cfg else Path("out"))
    if spectrum_taus is None:
        spectrum_taus = cfg.spectrum_taus if cfg else ()

    rir, transform = _load_analysis_tensor(rir_path, cfg)
    taus = parse_tau_grid(tau_spec, duration=rir.duration)
    curve = ana.erank_vs_window(rir, freq_hz, taus, transform=transform)
    written = [write_csv(outdir / "erank_curve.csv", ["tau_s", "erank"],
                         zip(curve.taus, curve.eranks))]
    t = np.arange(rir.num_samples) / rir.fs
    if transform is None:
        omni = rir.samples[0, 0, :]
    else:
        # projected (0,0)<->(0,0) entry of an element tensor reduces to the
        # channel sum over microphones of the speaker-average response
        omni = rir.samples.sum(axis=(0, 1)) / rir.samples.shape[0]
    written.append(write_csv(outdir / "rir_omni.csv", ["time_s", "amplitude"],
                             zip(t, omni)))
    spectra = []
    for tau in spectrum_taus:
        tau_s = rir.duration if tau == "full" else float(tau)
        G = ana.windowed_system(rir, tau_s, freq_hz)
        if transform is not None:
            G = transform(G)
        if not np.any(G):
            continue
        sigma = ana.singular_spectrum(G)
        name = f"singular_spectrum_tau{tau_s * 1e3:.3f}ms.csv"
        written.append(write_csv(outdir / name, ["index", "sigma"],
                                 enumerate(sigma, start=1)))
        spectra.append(name)
    written.append(write_metadata(outdir / "analyze_rank_meta.json", _meta_payload(
        "analyze-rank", cfg,
        {"rir": str(rir_path), "frequency_hz": freq_hz, "tau_grid": str(tau_spec),
         "spectra": spectra})))
    return written


def cmd_reproduce(cfg: RunConfig, freq_hz=None, threshold_db=None, outdir=None,
                  rir_path=None) -> list[Path]:
    freq_hz = freq_hz if freq_hz is not None else cfg.frequency_hz
    threshold_db = threshold_db if threshold_db is not None else cfg.threshold_db
    outdir = Path(outdir) if outdir else cfg.output_dir
    if rir_path is not None:
        rir, transform = _load_analysis_tensor(rir_path, cfg)
        system = ana.windowed_system(rir, rir.duration, freq_hz)
        if transform is not None:
            system = transform(system)
    else:
        from .sph_special import SPEED_OF_SOUND
        k = 2 * np.pi * freq_hz / SPEED_OF_SOUND
        system = ri.room_system_sh(cfg.room, cfg.speaker, cfg.microphone, k).entries
    target = ana.multibeam_target(cfg.microphone.sh_order)
    report = ana.reproduce_field(system, target, threshold_db=threshold_db)
    rows = [(i, report.target[i].real, report.target[i].imag,
             report.achieved[i].real, report.achieved[i].imag)
            for i in range(target.shape[0])]
    written = [write_csv(outdir / "reproduction.csv",
                         ["coeff_index", "target_re", "target_im",
                          "achieved_re", "achieved_im"], rows)]
    written.append(write_metadata(outdir / "reproduce_meta.json", _meta_payload(
        "reproduce", cfg,
        {"frequency_hz": freq_hz, "threshold_db": threshold_db,
         "error_db": report.error_db, "inverted_count": report.inverted_count,
         "source": str(rir_path) if rir_path else "scene"})))
    return written


def cmd_ingest(manifest_path, out_path) -> list[Path]:
    manifest_path = Path(manifest_path)
    entries = read_layout_manifest(manifest_path)
    measured = ingest_measured(entries, base_dir=manifest_path.parent)
    out_path = Path(out_path)
    wav_path, channels_path = export_rir_tensor(
        out_path.parent, out_path.stem, measured.samples, int(measured.fs),
        domain="element")
    meta = write_metadata(out_path.parent / f"{out_path.stem}_meta.json", _meta_payload(
        "ingest", None,
        {"manifest": str(manifest_path), "num_mics": measured.num_mics,
         "num_speakers": measured.num_speakers, "fs": measured.fs}))
    return [wav_path, channels_path, meta]


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphmimo",
        description="Spherical-array MIMO room simulation and rank analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize an RIR tensor from a scene config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override outputs.directory")

    p = sub.add_parser("analyze-rank", help="effective-rank analysis of an RIR tensor")
    p.add_argument("--rir", required=True)
    p.add_argument("--freq", type=float, help="analysis frequency in Hz")
    p.add_argument("--tau-grid", help="log:<start>:<end|full>:<count> or comma list")
    p.add_argument("--spectrum-taus", help="comma list of window lengths (or 'full') "
                                           "for singular-spectrum CSVs")
    p.add_argument("--config", help="config for defaults / element-space layouts")
    p.add_argument("--out")

    p = sub.add_parser("reproduce", help="regularized sound-field reproduction report")
    p.add_argument("--config", required=True)
    p.add_argument("--rir", help="reproduce through a synthesized tensor instead "
                                 "of the frequency-domain scene matrix")
    p.add_argument("--freq", type=float)
    p.add_argument("--threshold-db", type=float)
    p.add_argument("--out")

    p = sub.add_parser("ingest", help="pack measured per-loudspeaker WAVs into a tensor")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        cmd_simulate(load_config(args.config), outdir=args.out)
    elif args.command == "analyze-rank":
        cfg = load_config(args.config) if args.config else None
        spectrum = None
        if args.spectrum_taus:
            spectrum = tuple(v if v == "full" else float(v)
                             for v in args.spectrum_taus.split(","))
        cmd_analyze_rank(args.rir, freq_hz=args.freq, tau_grid=args.tau_grid,
                         outdir=args.out, cfg=cfg, spectrum_taus=spectrum)
    elif args.command == "reproduce":
        cmd_reproduce(load_config(args.config), freq_hz=args.freq,
                      threshold_db=args.threshold_db, outdir=args.out,
                      rir_path=args.rir)
    elif args.command == "ingest":
        cmd_ingest(args.manifest, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ValueError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
