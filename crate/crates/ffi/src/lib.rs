//! C ABI for the `inpg` library.
//!
//! Games, policies and run logs are opaque heap handles created by
//! `inpg_*` constructors and released with the matching `*_free`. Every
//! fallible function returns an [`InpgStatus`]; on failure a description is
//! available from [`inpg_last_error`] on the same thread. Panics are caught
//! at the boundary and reported as `INPG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use inpg::dynamics::{self, IterateLog, Method, RunConfig, StepSize};
use inpg::game::{self, PotentialGame};
use inpg::harness::csv::format_log;
use inpg::{metrics, Error, JointPolicy};

/// Opaque game handle.
pub struct InpgGame(PotentialGame);
/// Opaque joint-policy handle.
pub struct InpgPolicy(JointPolicy);
/// Opaque run-log handle.
pub struct InpgRunLog(IterateLog);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    DimensionMismatch = 4,
    MonotonicityViolation = 5,
    Format = 6,
    Io = 7,
    OracleScale = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InpgMethod {
    Npg = 0,
    Mwu = 1,
    PgDirect = 2,
}

impl From<InpgMethod> for Method {
    fn from(m: InpgMethod) -> Self {
        match m {
            InpgMethod::Npg => Method::Npg,
            InpgMethod::Mwu => Method::Mwu,
            InpgMethod::PgDirect => Method::PgDirect,
        }
    }
}

/// Run parameters. `eta <= 0` selects the default step size.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct InpgRunConfig {
    pub method: InpgMethod,
    pub tau: f64,
    pub eta: f64,
    pub max_iters: u64,
    pub seed: u64,
    pub log_every: u64,
    pub monotonicity_check: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InpgIterateRecord {
    pub iter: u64,
    pub phi_tau: f64,
    pub ne_gap: f64,
    pub qre_gap: f64,
    pub jeffrey_step: f64,
    pub avg_ne_gap: f64,
    pub avg_qre_gap: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> InpgStatus {
    match e {
        Error::Capacity { .. } => InpgStatus::Capacity,
        Error::DimensionMismatch(_) => InpgStatus::DimensionMismatch,
        Error::InvalidParameter(_) => InpgStatus::InvalidArgument,
        Error::MonotonicityViolation { .. } => InpgStatus::MonotonicityViolation,
        Error::OracleScale(_) => InpgStatus::OracleScale,
        Error::Format(_) | Error::Csv { .. } => InpgStatus::Format,
        Error::Io { .. } => InpgStatus::Io,
    }
}

struct Fail(InpgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(InpgStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> InpgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            InpgStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            InpgStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_scalar(out: *mut f64, value: f64) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Fail(InpgStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `inpg_*` call on the same thread.
#[no_mangle]
pub extern "C" fn inpg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Random identical-interest game with Beta(1/2, 1/2) potential.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn inpg_game_identical(
    num_agents: usize,
    num_actions: usize,
    seed: u64,
    out: *mut *mut InpgGame,
) -> InpgStatus {
    guard(|| put(out, InpgGame(game::make_identical_interest(num_agents, num_actions, seed)?)))
}

/// Random potential game with per-agent dummy terms.
///
/// # Safety
/// As for [`inpg_game_identical`].
#[no_mangle]
pub unsafe extern "C" fn inpg_game_general(
    num_agents: usize,
    num_actions: usize,
    seed: u64,
    out: *mut *mut InpgGame,
) -> InpgStatus {
    guard(|| put(out, InpgGame(game::make_general_potential(num_agents, num_actions, seed)?)))
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` as for [`inpg_game_identical`].
#[no_mangle]
pub unsafe extern "C" fn inpg_game_load(path: *const c_char, out: *mut *mut InpgGame) -> InpgStatus {
    guard(|| put(out, InpgGame(game::read_game(&path_arg(path)?)?)))
}

/// # Safety
/// `game` must come from an `inpg_game_*` constructor; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn inpg_game_save(game: *const InpgGame, path: *const c_char) -> InpgStatus {
    guard(|| {
        let g = as_ref(game, "game")?;
        game::write_game(&g.0, &path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `game` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn inpg_game_free(game: *mut InpgGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `game` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inpg_game_num_agents(game: *const InpgGame) -> usize {
    game.as_ref().map_or(0, |g| g.0.num_agents())
}

/// # Safety
/// `game` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inpg_game_num_actions(game: *const InpgGame) -> usize {
    game.as_ref().map_or(0, |g| g.0.num_actions())
}

/// Declared upper bound of the potential, NaN for a null handle.
///
/// # Safety
/// `game` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inpg_game_phi_max(game: *const InpgGame) -> f64 {
    game.as_ref().map_or(f64::NAN, |g| g.0.phi_max())
}

/// Scans the unilateral-deviation identity; writes whether it holds within
/// `tol` and the largest residual.
///
/// # Safety
/// `game` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_game_check_potential(
    game: *const InpgGame,
    tol: f64,
    holds: *mut bool,
    max_residual: *mut f64,
) -> InpgStatus {
    guard(|| {
        let g = as_ref(game, "game")?;
        if holds.is_null() {
            return Err(null("holds"));
        }
        let check = game::check_potential_property(&g.0, tol);
        *holds = check.holds;
        write_scalar(max_residual, check.max_residual)
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_policy_uniform(
    num_agents: usize,
    num_actions: usize,
    out: *mut *mut InpgPolicy,
) -> InpgStatus {
    guard(|| {
        if num_agents == 0 || num_actions == 0 {
            return Err(Fail(InpgStatus::InvalidArgument, "dimensions must be positive".into()));
        }
        put(out, InpgPolicy(JointPolicy::uniform(num_agents, num_actions)))
    })
}

/// Policy from `num_agents * num_actions` row-major nonnegative weights;
/// each row is normalized.
///
/// # Safety
/// `probs` must point to that many doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_policy_from_probs(
    num_agents: usize,
    num_actions: usize,
    probs: *const f64,
    out: *mut *mut InpgPolicy,
) -> InpgStatus {
    guard(|| {
        if probs.is_null() {
            return Err(null("probs"));
        }
        if num_agents == 0 || num_actions == 0 {
            return Err(Fail(InpgStatus::InvalidArgument, "dimensions must be positive".into()));
        }
        let flat = std::slice::from_raw_parts(probs, num_agents * num_actions);
        let rows: Vec<Vec<f64>> = flat.chunks_exact(num_actions).map(<[f64]>::to_vec).collect();
        put(out, InpgPolicy(JointPolicy::from_probs(&rows)?))
    })
}

/// Copies the probabilities, row-major, into `out` of length `len`, which
/// must equal `num_agents * num_actions`.
///
/// # Safety
/// `policy` must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn inpg_policy_probs(policy: *const InpgPolicy, out: *mut f64, len: usize) -> InpgStatus {
    guard(|| {
        let p = as_ref(policy, "policy")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let need = p.0.num_agents() * p.0.num_actions();
        if len != need {
            return Err(Fail(InpgStatus::DimensionMismatch, format!("buffer holds {len}, need {need}")));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, s) in dst.iter_mut().zip(p.0.probs().into_iter().flatten()) {
            *d = s;
        }
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn inpg_policy_free(policy: *mut InpgPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// One simultaneous NPG step, `log π' = (1 - ητ) log π + η r - LSE`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_npg_step(
    game: *const InpgGame,
    policy: *const InpgPolicy,
    eta: f64,
    tau: f64,
    out: *mut *mut InpgPolicy,
) -> InpgStatus {
    guard(|| {
        let (g, p) = (as_ref(game, "game")?, as_ref(policy, "policy")?);
        put(out, InpgPolicy(dynamics::npg_step(&g.0, &p.0, eta, tau)?))
    })
}

/// One projected gradient step with direct parameterization.
///
/// # Safety
/// As for [`inpg_npg_step`].
#[no_mangle]
pub unsafe extern "C" fn inpg_pg_step(
    game: *const InpgGame,
    policy: *const InpgPolicy,
    eta: f64,
    out: *mut *mut InpgPolicy,
) -> InpgStatus {
    guard(|| {
        let (g, p) = (as_ref(game, "game")?, as_ref(policy, "policy")?);
        put(out, InpgPolicy(dynamics::pg_direct_step(&g.0, &p.0, eta)?))
    })
}

/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_ne_gap(game: *const InpgGame, policy: *const InpgPolicy, out: *mut f64) -> InpgStatus {
    guard(|| {
        let (g, p) = (as_ref(game, "game")?, as_ref(policy, "policy")?);
        write_scalar(out, metrics::ne_gap(&g.0, &p.0)?)
    })
}

/// Requires `tau > 0`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_qre_gap(
    game: *const InpgGame,
    policy: *const InpgPolicy,
    tau: f64,
    out: *mut f64,
) -> InpgStatus {
    guard(|| {
        let (g, p) = (as_ref(game, "game")?, as_ref(policy, "policy")?);
        write_scalar(out, metrics::qre_gap(&g.0, &p.0, tau)?)
    })
}

/// `Φ(π) + τ Σ_i H(π_i)`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_regularized_potential(
    game: *const InpgGame,
    policy: *const InpgPolicy,
    tau: f64,
    out: *mut f64,
) -> InpgStatus {
    guard(|| {
        let (g, p) = (as_ref(game, "game")?, as_ref(policy, "policy")?);
        write_scalar(out, metrics::regularized_potential(&g.0, &p.0, tau)?)
    })
}

/// Writes `r_agent^π` into `out`, which must hold `num_actions` doubles.
///
/// # Safety
/// Handles must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn inpg_marginal_utility(
    game: *const InpgGame,
    policy: *const InpgPolicy,
    agent: usize,
    out: *mut f64,
    len: usize,
) -> InpgStatus {
    guard(|| {
        let (g, p) = (as_ref(game, "game")?, as_ref(policy, "policy")?);
        if out.is_null() {
            return Err(null("out"));
        }
        if len != g.0.num_actions() {
            return Err(Fail(
                InpgStatus::DimensionMismatch,
                format!("buffer holds {len}, need {}", g.0.num_actions()),
            ));
        }
        let r = metrics::marginalized_utility(&g.0, agent, &p.0)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&r.values);
        Ok(())
    })
}

/// `1 / (2 (min(sqrt N, 2 Φ_max) + τ))`.
#[no_mangle]
pub extern "C" fn inpg_default_learning_rate(num_agents: usize, phi_max: f64, tau: f64) -> f64 {
    dynamics::default_learning_rate(num_agents, phi_max, tau)
}

/// Runs the configured dynamics from uniform policies.
///
/// # Safety
/// `game` and `config` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_run(
    game: *const InpgGame,
    config: *const InpgRunConfig,
    out: *mut *mut InpgRunLog,
) -> InpgStatus {
    guard(|| {
        let g = as_ref(game, "game")?;
        let c = as_ref(config, "config")?;
        let mut rc = RunConfig::new(c.method.into(), c.tau, c.max_iters as usize)
            .with_seed(c.seed)
            .with_eta(if c.eta > 0.0 { StepSize::Fixed(c.eta) } else { StepSize::Auto });
        if c.log_every > 0 {
            rc.log_every = c.log_every as usize;
        }
        rc.monotonicity_check = c.monotonicity_check;
        put(out, InpgRunLog(dynamics::run(&g.0, &rc)?))
    })
}

/// Number of logged rows, or 0 for a null handle.
///
/// # Safety
/// `log` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inpg_run_log_len(log: *const InpgRunLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.records.len())
}

/// # Safety
/// `log` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_run_log_record(
    log: *const InpgRunLog,
    index: usize,
    out: *mut InpgIterateRecord,
) -> InpgStatus {
    guard(|| {
        let l = as_ref(log, "log")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = l.0.records.get(index).ok_or_else(|| {
            Fail(
                InpgStatus::OutOfRange,
                format!("row {index} of {}", l.0.records.len()),
            )
        })?;
        *out = InpgIterateRecord {
            iter: r.iter as u64,
            phi_tau: r.phi_tau,
            ne_gap: r.ne_gap,
            qre_gap: r.qre_gap,
            jeffrey_step: r.jeffrey_step,
            avg_ne_gap: r.avg_ne_gap,
            avg_qre_gap: r.avg_qre_gap,
        };
        Ok(())
    })
}

/// Copy of the policy after the last iteration.
///
/// # Safety
/// `log` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inpg_run_log_final_policy(log: *const InpgRunLog, out: *mut *mut InpgPolicy) -> InpgStatus {
    guard(|| {
        let l = as_ref(log, "log")?;
        put(out, InpgPolicy(l.0.final_policy.clone()))
    })
}

/// Writes the log in the CLI's CSV format.
///
/// # Safety
/// `log` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn inpg_run_log_write_csv(log: *const InpgRunLog, path: *const c_char) -> InpgStatus {
    guard(|| {
        let l = as_ref(log, "log")?;
        let path = path_arg(path)?;
        std::fs::write(&path, format_log(&l.0.records))
            .map_err(|e| Fail(InpgStatus::Io, format!("{}: {e}", path.display())))
    })
}

/// # Safety
/// `log` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn inpg_run_log_free(log: *mut InpgRunLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
