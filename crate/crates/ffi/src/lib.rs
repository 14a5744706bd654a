//! C interface to trained policies and the configuration space.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`CbStatus`] and, on failure, stores a message readable through
//! [`cb_last_error_message`]. Strings returned through out-pointers must be
//! released with [`cb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use confbandit::cli::ENV_EMBED_KEY;
use confbandit::prompts::render_generation_prompt;
use confbandit::{ActionSpace, ActionTriple, Axis, Checkpoint, Embedder, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfBounds = 3,
    Io = 4,
    Format = 5,
    Checkpoint = 6,
    Environment = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbAxis {
    Instruction = 0,
    Temperature = 1,
    Steps = 2,
}

impl From<CbAxis> for Axis {
    fn from(a: CbAxis) -> Self {
        match a {
            CbAxis::Instruction => Axis::Instruction,
            CbAxis::Temperature => Axis::Temperature,
            CbAxis::Steps => Axis::Steps,
        }
    }
}

/// Indices into the three axes of a space.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CbTriple {
    pub instruction_index: usize,
    pub temperature_index: usize,
    pub steps_index: usize,
}

impl From<CbTriple> for ActionTriple {
    fn from(t: CbTriple) -> Self {
        ActionTriple::new(t.instruction_index, t.temperature_index, t.steps_index)
    }
}

impl From<ActionTriple> for CbTriple {
    fn from(t: ActionTriple) -> Self {
        Self {
            instruction_index: t.instruction_index,
            temperature_index: t.temperature_index,
            steps_index: t.steps_index,
        }
    }
}

/// A resolved triple. `instruction` is owned by the caller.
#[repr(C)]
#[derive(Debug)]
pub struct CbRendered {
    pub instruction: *mut c_char,
    pub temperature: f64,
    pub steps: u32,
}

/// Opaque action space.
pub struct CbSpace {
    space: ActionSpace,
}

/// Opaque trained policy with its space and embedder.
pub struct CbPolicy {
    space: CbSpace,
    checkpoint: Checkpoint,
    embedder: Embedder,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CbStatus {
    match e {
        Error::Validation(_) | Error::Unsupported(_) | Error::Training { .. } => CbStatus::InvalidArgument,
        Error::Bounds { .. } => CbStatus::OutOfBounds,
        Error::Format(_) => CbStatus::Format,
        Error::Checkpoint(_) => CbStatus::Checkpoint,
        Error::Environment(_) => CbStatus::Environment,
        Error::Io { .. } => CbStatus::Io,
    }
}

struct Fail(CbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CbStatus::Internal
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(CbStatus::NullPointer, format!("{name} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CbStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn owned(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(CbStatus::Internal, "string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn cb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn cb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The built-in 100 × 11 × 8 space.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_space_default(out: *mut *mut CbSpace) -> CbStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        *slot = Box::into_raw(Box::new(CbSpace { space: ActionSpace::build_default() }));
        Ok(())
    })
}

/// # Safety
/// `space` must be null or a handle from [`cb_space_default`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_space_free(space: *mut CbSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of values on one axis.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cb_space_axis_len(space: *const CbSpace, axis: CbAxis, out: *mut usize) -> CbStatus {
    guard(|| {
        let s = borrow(space, "space")?;
        *self::out(out, "out")? = s.space.axis_len(axis.into());
        Ok(())
    })
}

/// Number of joint configurations.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cb_space_cardinality(space: *const CbSpace, out: *mut usize) -> CbStatus {
    guard(|| {
        let s = borrow(space, "space")?;
        *self::out(out, "out")? = s.space.cardinality();
        Ok(())
    })
}

/// Look up the concrete instruction, temperature and step count.
///
/// # Safety
/// Pointers must be valid. Free `out->instruction` with [`cb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cb_space_resolve(
    space: *const CbSpace,
    triple: CbTriple,
    out: *mut CbRendered,
) -> CbStatus {
    guard(|| {
        let s = borrow(space, "space")?;
        let slot = self::out(out, "out")?;
        let r = s.space.resolve(&triple.into())?;
        *slot = CbRendered {
            instruction: owned(r.instruction_text)?,
            temperature: r.temperature,
            steps: r.steps,
        };
        Ok(())
    })
}

/// Generation prompt for `question` under `triple`.
///
/// # Safety
/// Pointers must be valid; `question` NUL-terminated UTF-8. Free `*out`
/// with [`cb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cb_render_prompt(
    space: *const CbSpace,
    triple: CbTriple,
    question: *const c_char,
    out: *mut *mut c_char,
) -> CbStatus {
    guard(|| {
        let s = borrow(space, "space")?;
        let q = text(question, "question")?;
        let slot = self::out(out, "out")?;
        let config = s.space.resolve(&triple.into())?;
        *slot = owned(render_generation_prompt(q, &config)?)?;
        Ok(())
    })
}

/// Load a checkpoint file.
///
/// # Safety
/// `path` must be NUL-terminated UTF-8 and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cb_policy_load(path: *const c_char, out: *mut *mut CbPolicy) -> CbStatus {
    guard(|| {
        let p = text(path, "path")?;
        let slot = self::out(out, "out")?;
        let checkpoint = Checkpoint::load(Path::new(p))?;
        let key = std::env::var(ENV_EMBED_KEY).ok().filter(|k| !k.is_empty());
        let embedder = checkpoint.embedder.build(key)?;
        *slot = Box::into_raw(Box::new(CbPolicy {
            space: CbSpace { space: checkpoint.space.clone() },
            checkpoint,
            embedder,
        }));
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a handle from [`cb_policy_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_policy_free(policy: *mut CbPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// The policy's space, borrowed; valid while `policy` is alive. Null if
/// `policy` is null.
///
/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cb_policy_space(policy: *const CbPolicy) -> *const CbSpace {
    policy.as_ref().map_or(ptr::null(), |p| &p.space as *const CbSpace)
}

/// Most probable configuration for `question`.
///
/// # Safety
/// Pointers must be valid; `question` NUL-terminated UTF-8.
#[no_mangle]
pub unsafe extern "C" fn cb_policy_greedy(
    policy: *const CbPolicy,
    question: *const c_char,
    out: *mut CbTriple,
) -> CbStatus {
    guard(|| {
        let p = borrow(policy, "policy")?;
        let q = text(question, "question")?;
        let slot = self::out(out, "out")?;
        let context = p.embedder.embed_text(q)?;
        *slot = p.checkpoint.params.greedy(context.values())?.into();
        Ok(())
    })
}
