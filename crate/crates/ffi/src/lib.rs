//! C interface to les3d.
//!
//! Clouds and results are opaque heap handles released with their `_free`
//! functions. Every call returns a [`Les3dStatus`]; on failure the message is
//! available from [`les3d_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use les3d::io::{self, CloudFormat};
use les3d::oracle::{exact_les, grid_les};
use les3d::scoring::{MdsDirection, PairSamplingPolicy};
use les3d::search::{run_les, LesResult, SearchParams, DEFAULT_BEST_SEGMENTS, DEFAULT_MAX_ORDER};
use les3d::{LesError, Point3, PointCloud, Sphere};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Les3dStatus {
    Ok = 0,
    InvalidInput = 2,
    Degenerate = 3,
    Io = 4,
    NullPointer = 5,
    Internal = 6,
}

/// Opaque point cloud.
pub struct Les3dCloud {
    cloud: PointCloud,
}

/// Opaque search result.
pub struct Les3dResult {
    result: LesResult,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Les3dSphere {
    pub center: [f64; 3],
    pub radius: f64,
}

/// Pair policy selector for [`Les3dParams::pair_mode`].
pub const LES3D_PAIRS_AUTO: i32 = 0;
pub const LES3D_PAIRS_ALL: i32 = 1;
pub const LES3D_PAIRS_SAMPLED: i32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Les3dParams {
    /// Sweep positions per segment; 0 selects `min(64, n)`.
    pub k: u32,
    pub best_segment_count: u32,
    pub max_order: u32,
    /// 0 ranks segments by minimum score, 1 by maximum.
    pub mds_direction: i32,
    /// One of `LES3D_PAIRS_AUTO`, `LES3D_PAIRS_ALL`, `LES3D_PAIRS_SAMPLED`.
    pub pair_mode: i32,
    pub sample_fraction: f64,
    pub seed: u64,
}

impl Default for Les3dParams {
    fn default() -> Self {
        Les3dParams {
            k: 0,
            best_segment_count: DEFAULT_BEST_SEGMENTS as u32,
            max_order: DEFAULT_MAX_ORDER,
            mds_direction: 0,
            pair_mode: LES3D_PAIRS_AUTO,
            sample_fraction: 0.01,
            seed: 0,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

enum Failure {
    Null(&'static str),
    Les(LesError),
}

impl From<LesError> for Failure {
    fn from(e: LesError) -> Self {
        Failure::Les(e)
    }
}

fn status_of(e: &LesError) -> Les3dStatus {
    match e.exit_code() {
        3 => Les3dStatus::Degenerate,
        4 => Les3dStatus::Io,
        _ => Les3dStatus::InvalidInput,
    }
}

fn guarded(body: impl FnOnce() -> Result<(), Failure>) -> Les3dStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            Les3dStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed for {what}"));
            Les3dStatus::NullPointer
        }
        Ok(Err(Failure::Les(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            Les3dStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_slot<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

fn to_sphere(s: &Sphere) -> Les3dSphere {
    Les3dSphere {
        center: s.center.to_array(),
        radius: s.radius,
    }
}

fn to_params(p: &Les3dParams) -> Result<SearchParams, Failure> {
    let mds_direction = match p.mds_direction {
        0 => MdsDirection::Min,
        1 => MdsDirection::Max,
        other => {
            return Err(LesError::InvalidInput(format!(
                "mds_direction must be 0 or 1, got {other}"
            ))
            .into())
        }
    };
    let pairs = match p.pair_mode {
        LES3D_PAIRS_AUTO => None,
        LES3D_PAIRS_ALL => Some(PairSamplingPolicy {
            seed: p.seed,
            ..PairSamplingPolicy::all_pairs()
        }),
        LES3D_PAIRS_SAMPLED => Some(PairSamplingPolicy::sampled(p.sample_fraction, p.seed)?),
        other => return Err(LesError::InvalidInput(format!("unknown pair_mode {other}")).into()),
    };
    Ok(SearchParams {
        k: (p.k != 0).then_some(p.k as usize),
        best_segment_count: p.best_segment_count as usize,
        max_order: p.max_order,
        mds_direction,
        pairs,
        seed: p.seed,
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next les3d call on the same thread.
#[no_mangle]
pub extern "C" fn les3d_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Fills `out` with the default search parameters.
///
/// # Safety
/// `out` must be null or point to writable memory for one `Les3dParams`.
#[no_mangle]
pub unsafe extern "C" fn les3d_params_default(out: *mut Les3dParams) -> Les3dStatus {
    guarded(|| {
        *out_slot(out, "out")? = Les3dParams::default();
        Ok(())
    })
}

/// Builds a cloud from `n_points` packed `x, y, z` triples.
///
/// # Safety
/// `coords` must point to `3 * n_points` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_cloud_from_xyz(
    coords: *const f64,
    n_points: usize,
    out: *mut *mut Les3dCloud,
) -> Les3dStatus {
    guarded(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        if coords.is_null() {
            return Err(Failure::Null("coords"));
        }
        let flat = std::slice::from_raw_parts(coords, n_points * 3);
        let pts = flat
            .chunks_exact(3)
            .map(|c| Point3::new(c[0], c[1], c[2]))
            .collect();
        let cloud = PointCloud::new(pts)?;
        *out = Box::into_raw(Box::new(Les3dCloud { cloud }));
        Ok(())
    })
}

/// Reads a cloud file. `format` is `"xyz"`, `"csv"` or `"ply-ascii"`, or
/// null to guess from the extension.
///
/// # Safety
/// `path` and a non-null `format` must be NUL-terminated strings; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_cloud_read(
    path: *const c_char,
    format: *const c_char,
    out: *mut *mut Les3dCloud,
) -> Les3dStatus {
    guarded(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| LesError::InvalidInput("path is not valid UTF-8".into()))?;
        let path = Path::new(path);
        let format = if format.is_null() {
            CloudFormat::from_path(path).ok_or_else(|| {
                LesError::InvalidInput(format!("cannot tell the format of {}", path.display()))
            })?
        } else {
            CStr::from_ptr(format)
                .to_str()
                .map_err(|_| LesError::InvalidInput("format is not valid UTF-8".into()))?
                .parse()?
        };
        let cloud = io::read_cloud(path, format)?;
        *out = Box::into_raw(Box::new(Les3dCloud { cloud }));
        Ok(())
    })
}

/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_cloud_len(cloud: *const Les3dCloud, out: *mut usize) -> Les3dStatus {
    guarded(|| {
        let c = deref(cloud, "cloud")?;
        *out_slot(out, "out")? = c.cloud.len();
        Ok(())
    })
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn les3d_cloud_free(cloud: *mut Les3dCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Runs the search. `params` may be null for defaults.
///
/// # Safety
/// `cloud` must be a live handle, `params` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_solve(
    cloud: *const Les3dCloud,
    params: *const Les3dParams,
    out: *mut *mut Les3dResult,
) -> Les3dStatus {
    guarded(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let c = deref(cloud, "cloud")?;
        let p = params.as_ref().copied().unwrap_or_default();
        let result = run_les(&c.cloud, &to_params(&p)?)?;
        *out = Box::into_raw(Box::new(Les3dResult { result }));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_result_sphere(
    result: *const Les3dResult,
    out: *mut Les3dSphere,
) -> Les3dStatus {
    guarded(|| {
        let r = deref(result, "result")?;
        *out_slot(out, "out")? = to_sphere(&r.result.les.sphere);
        Ok(())
    })
}

/// Iteration order at which the winning sphere was found.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_result_order(
    result: *const Les3dResult,
    out: *mut u32,
) -> Les3dStatus {
    guarded(|| {
        let r = deref(result, "result")?;
        *out_slot(out, "out")? = r.result.les.order;
        Ok(())
    })
}

/// Copies up to `capacity` contact indices of the winning sphere into
/// `buffer` and stores the total count in `len`. `buffer` may be null when
/// `capacity` is 0.
///
/// # Safety
/// `buffer` must have room for `capacity` values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_result_contacts(
    result: *const Les3dResult,
    buffer: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> Les3dStatus {
    guarded(|| {
        let r = deref(result, "result")?;
        let len = out_slot(len, "len")?;
        let contacts = &r.result.les.contact_indices;
        *len = contacts.len();
        let n = contacts.len().min(capacity);
        if n > 0 {
            if buffer.is_null() {
                return Err(Failure::Null("buffer"));
            }
            ptr::copy_nonoverlapping(contacts.as_ptr(), buffer, n);
        }
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_result_candidate_count(
    result: *const Les3dResult,
    out: *mut usize,
) -> Les3dStatus {
    guarded(|| {
        let r = deref(result, "result")?;
        *out_slot(out, "out")? = r.result.candidates.len();
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_result_candidate(
    result: *const Les3dResult,
    index: usize,
    out: *mut Les3dSphere,
) -> Les3dStatus {
    guarded(|| {
        let r = deref(result, "result")?;
        let c = r.result.candidates.get(index).ok_or_else(|| {
            LesError::InvalidInput(format!(
                "candidate index {index} out of range ({} candidates)",
                r.result.candidates.len()
            ))
        })?;
        *out_slot(out, "out")? = to_sphere(&c.sphere);
        Ok(())
    })
}

/// The result document as a NUL-terminated JSON string, released with
/// [`les3d_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_result_json(
    result: *const Les3dResult,
    out: *mut *mut c_char,
) -> Les3dStatus {
    guarded(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let r = deref(result, "result")?;
        let text = io::result_json(&r.result, false, None);
        *out = CString::new(text)
            .expect("JSON has no NUL bytes")
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn les3d_result_free(result: *mut Les3dResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn les3d_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Best in-hull Voronoi vertex sphere.
///
/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_exact_les(
    cloud: *const Les3dCloud,
    out: *mut Les3dSphere,
) -> Les3dStatus {
    guarded(|| {
        let c = deref(cloud, "cloud")?;
        let out = out_slot(out, "out")?;
        *out = to_sphere(&exact_les(&c.cloud)?);
        Ok(())
    })
}

/// Best node of a `resolution³` grid over the bounding box.
///
/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn les3d_grid_les(
    cloud: *const Les3dCloud,
    resolution: u32,
    out: *mut Les3dSphere,
) -> Les3dStatus {
    guarded(|| {
        let c = deref(cloud, "cloud")?;
        let out = out_slot(out, "out")?;
        *out = to_sphere(&grid_les(&c.cloud, resolution as usize)?);
        Ok(())
    })
}
