from .diversity import DiversityFit, OutageResult, check_snr_upper_bound, estimate_outage, fit_diversity, fit_result
from .engine import PointRecord, SweepResult, SweepSpec, run_sweep, wilson_interval
from .io import emit, from_json, load_result, to_csv, to_json
