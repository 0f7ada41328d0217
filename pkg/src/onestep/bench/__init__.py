"""Brusselator benchmark problem, experiment drivers and command line."""

from .brusselator import Brusselator, PRESETS
from .harness import (RunReport, get_reference, make_reference, mri_run, run_case, table1,
                      table1_run, table2, table2_run, work_precision_sweep)
