"""Samplers: RW, AM, RBAM, GAM, KAM and cyclical KAM behind one interface."""
from .adaptive import am_step, gam_step, metropolis, rbam_step, rw_step
from .chain import SAMPLERS, ChainResult, VirtualClock, WallClock, ckam_run, iterate, run_chain
from .cyclical import CycleTransition, ckam_step, freeze_covariance, iterate_ckam
from .kam import kam_covariance, kam_log_proposal, kam_step, refresh_subsample
from .schedules import (
    CycleSchedule,
    cosine_stepsize,
    noise_schedule,
    rm_gain,
    rm_stepsize_update,
    transition_stepsize,
)
from .state import (
    ChainState,
    History,
    SamplerConfig,
    SamplerError,
    TraceRecord,
    cholesky_jitter,
    init_state,
    mvn_logpdf,
)
