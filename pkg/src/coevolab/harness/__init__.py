"""Manifests, on-disk archives and checkpoints, CSV export and the CLI."""
from .csvio import export_grid_csv, read_grid_csv
from .manifest import ExperimentManifest, load_manifest, parse_manifest
from .rundir import (RunDirectory, load_checkpoint, read_archive, resume_run, run_archives,
                     save_checkpoint, start_run, write_archive)
