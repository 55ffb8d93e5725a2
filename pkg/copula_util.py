import os
import sys
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Exit codes of the command line front end (argparse exits with 2 on usage errors)
EXIT_OK = 0
EXIT_DATA = 3
EXIT_NUMERICAL = 4

ENV_JOBS = 'COPULA_TRANSPORT_JOBS'
ENV_SEED = 'COPULA_TRANSPORT_SEED'
DEFAULT_SEED = 42


class CopulaTransportError(Exception):
    exit_code = EXIT_DATA


class DataError(CopulaTransportError, ValueError):
    """Rejected input: bad shape, non-finite value, malformed file, violated precondition."""
    exit_code = EXIT_DATA


class NumericalError(CopulaTransportError, ArithmeticError):
    """A solver could not produce a trustworthy number."""
    exit_code = EXIT_NUMERICAL


def init_logging(args):

    verbose = getattr(args, 'verbose', False)
    log_file = getattr(args, 'log_file', None)

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        logfile = Path(log_file)
        logfile.parent.mkdir(exist_ok=True, parents=True)
        handlers.append(logging.FileHandler(str(logfile)))

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt='%Y-%m-%d %H:%M:%S',
        handlers=handlers,
        force=True
    )


def _environment_integer(name, default):
    value = os.environ.get(name)
    if value is None or value.strip() == '':
        return default
    try:
        return int(value)
    except ValueError as e:
        raise DataError(f'${name} must be an integer, got "{value}"') from e


def initialize(args):
    """Load the .env file, configure logging and resolve the options shared by every sub-command."""

    load_dotenv()
    init_logging(args)

    seed = getattr(args, 'seed', None)
    if seed is None:
        seed = _environment_integer(ENV_SEED, DEFAULT_SEED)
    if seed < 0:
        raise DataError(f'the seed must be a non-negative integer, got {seed}')

    jobs = getattr(args, 'jobs', None)
    if jobs is None:
        jobs = _environment_integer(ENV_JOBS, 1)
    if jobs == 0:
        raise DataError('--jobs must be a positive integer or -1 (all cores)')

    return { 'seed': seed, 'jobs': jobs, 'quiet': getattr(args, 'quiet', False) }


# CSV

def read_panel_csv(path, series_id=None):
    """Read a Panel from a CSV file: header row, one column per variable, one row per observation."""
    from copula import Panel

    path = Path(path)
    if not path.exists():
        raise DataError(f'{path}: file does not exist')
    try:
        df = pandas.read_csv(str(path), float_precision='round_trip')
    except pandas.errors.ParserError as e:
        raise DataError(f'{path}: malformed CSV ({str(e).strip()})') from e
    except pandas.errors.EmptyDataError as e:
        raise DataError(f'{path}: empty file') from e
    except UnicodeDecodeError as e:
        raise DataError(f'{path}: not a UTF-8 text file ({e.reason} at byte {e.start})') from e

    numeric = df.apply(pandas.to_numeric, errors='coerce')
    bad = numeric.isna() & ~df.isna()
    if bad.any().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        raise DataError(f'{path}: row {row + 1}, column "{df.columns[col]}": non-numeric cell {df.iat[row, col]!r}')
    missing = df.isna()
    if missing.any().any():
        row, col = np.argwhere(missing.to_numpy())[0]
        raise DataError(f'{path}: row {row + 1}, column "{df.columns[col]}": missing value')

    try:
        return Panel(numeric.to_numpy(dtype=float), series_id=series_id or path.stem, columns=tuple(str(c) for c in df.columns))
    except DataError as e:
        raise DataError(f'{path}: {e}') from e


def write_matrix_csv(path, values, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pandas.DataFrame(np.asarray(values), columns=list(columns)).to_csv(str(path), index=False, float_format=None)


def write_panel_csv(path, panel):
    write_matrix_csv(path, panel.values, panel.column_names())


def read_distance_matrix_csv(path):
    from cluster import DistanceMatrix

    path = Path(path)
    if not path.exists():
        raise DataError(f'{path}: file does not exist')
    try:
        df = pandas.read_csv(str(path), index_col=0, float_precision='round_trip')
    except pandas.errors.ParserError as e:
        raise DataError(f'{path}: malformed CSV ({str(e).strip()})') from e
    except pandas.errors.EmptyDataError as e:
        raise DataError(f'{path}: empty file') from e
    except UnicodeDecodeError as e:
        raise DataError(f'{path}: not a UTF-8 text file ({e.reason} at byte {e.start})') from e
    try:
        entries = df.to_numpy(dtype=float)
    except ValueError as e:
        raise DataError(f'{path}: non-numeric distance ({e})') from e
    if list(map(str, df.index)) != list(map(str, df.columns)):
        raise DataError(f'{path}: row labels and column labels differ')
    return DistanceMatrix(entries, labels=tuple(str(label) for label in df.columns))


def write_distance_matrix_csv(path, dm):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pandas.DataFrame(dm.entries, index=list(dm.labels), columns=list(dm.labels))
    df.index.name = 'label'
    df.to_csv(str(path))


# JSON

def read_json(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f'{path}: file does not exist')
    try:
        with open(path, encoding='utf-8') as file:
            return json.load(file)
    except json.JSONDecodeError as e:
        raise DataError(f'{path}: malformed JSON (line {e.lineno}: {e.msg})') from e
    except UnicodeDecodeError as e:
        raise DataError(f'{path}: not a UTF-8 text file ({e.reason} at byte {e.start})') from e


def write_json(path, document):
    """Write a JSON document; floats keep their shortest round-trip repr."""
    text = json.dumps(document, indent=2)
    if path is None or str(path) == '-':
        print(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as file:
        file.write(text + '\n')


def check_keys(document, mandatory, authorized, where):
    """Validate a JSON object against mandatory and authorized key lists."""
    if not isinstance(document, dict):
        raise DataError(f'{where}: expected a JSON object')
    for key in document.keys():
        if key not in authorized:
            logger.warning(f'{where}: unknown key "{key}" ignored')
    for key in mandatory:
        if key not in document:
            raise DataError(f'{where}: missing key "{key}"')


# Manifest

K_JSON_PANELS = 'panels'
K_JSON_PATH = 'path'
K_JSON_LABEL = 'label'
K_JSON_RESOLUTION = 'resolution'
K_JSON_SOLVER = 'solver'
K_JSON_SEED = 'seed'
K_JSON_MODE = 'mode'
K_JSON_TARGETS = 'targets'
LIST_MANDATORY_KEYS_JSON = [K_JSON_PANELS]
LIST_AUTHORIZED_KEYS_JSON = [K_JSON_PANELS, K_JSON_RESOLUTION, K_JSON_SOLVER, K_JSON_SEED, K_JSON_MODE, K_JSON_TARGETS]


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: Optional[str] = None

    @property
    def series_id(self):
        return self.path.stem


@dataclass(frozen=True)
class Manifest:
    """A dataset of panel files with the options shared by the whole run."""
    entries: Tuple[ManifestEntry, ...]
    resolution: Optional[int] = None
    solver: Optional[str] = None
    seed: Optional[int] = None
    mode: Optional[str] = None
    targets: Optional[dict] = None

    def read_panels(self):
        return [read_panel_csv(entry.path) for entry in self.entries]

    def truth(self):
        """Class label of every series id, for the entries that carry one."""
        return {entry.series_id: entry.label for entry in self.entries if entry.label is not None}


def read_manifest(path):
    """Read a Manifest; relative panel and target paths are resolved against the manifest's folder."""
    path = Path(path)
    document = read_json(path)
    check_keys(document, LIST_MANDATORY_KEYS_JSON, LIST_AUTHORIZED_KEYS_JSON, str(path))
    folder = path.parent

    panels = document[K_JSON_PANELS]
    if not isinstance(panels, list) or len(panels) == 0:
        raise DataError(f'{path}: "{K_JSON_PANELS}" must be a non-empty list')
    entries = []
    for i, panel in enumerate(panels):
        where = f'{path}: panels[{i}]'
        if isinstance(panel, str):
            panel = {K_JSON_PATH: panel}
        check_keys(panel, [K_JSON_PATH], [K_JSON_PATH, K_JSON_LABEL], where)
        panel_path = Path(panel[K_JSON_PATH])
        if not panel_path.is_absolute():
            panel_path = folder / panel_path
        if not panel_path.exists():
            raise DataError(f'{where}: {panel_path} does not exist')
        label = panel.get(K_JSON_LABEL)
        entries.append(ManifestEntry(panel_path, None if label is None else str(label)))

    stems = [entry.series_id for entry in entries]
    if len(set(stems)) != len(stems):
        raise DataError(f'{path}: panel file names must be unique, they identify the series')

    resolution = document.get(K_JSON_RESOLUTION)
    if resolution is not None and (not isinstance(resolution, int) or isinstance(resolution, bool) or resolution < 2):
        raise DataError(f'{path}: "{K_JSON_RESOLUTION}" must be an integer >= 2')
    seed = document.get(K_JSON_SEED)
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise DataError(f'{path}: "{K_JSON_SEED}" must be a non-negative integer')

    targets = document.get(K_JSON_TARGETS)
    if isinstance(targets, str):
        targets_path = Path(targets)
        targets = read_json(targets_path if targets_path.is_absolute() else folder / targets_path)

    return Manifest(tuple(entries), resolution, document.get(K_JSON_SOLVER), seed, document.get(K_JSON_MODE), targets)


def write_manifest(path, panel_paths, labels, **options):
    """Write a manifest listing `panel_paths` (made relative to the manifest's folder when possible)."""
    path = Path(path)
    panels = []
    for panel_path, label in zip(panel_paths, labels):
        panel_path = Path(panel_path)
        try:
            panel_path = panel_path.relative_to(path.parent)
        except ValueError:
            pass
        entry = {K_JSON_PATH: panel_path.as_posix()}
        if label is not None:
            entry[K_JSON_LABEL] = label
        panels.append(entry)
    document = {K_JSON_PANELS: panels}
    document.update({key: value for key, value in options.items() if value is not None})
    write_json(path, document)
