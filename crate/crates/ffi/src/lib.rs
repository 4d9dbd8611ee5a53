//! C ABI for kpasat.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free`. Every fallible call returns a [`KpaStatus`]; on failure
//! [`kpa_last_error`] describes the problem. Strings are NUL-terminated
//! UTF-8; output buffers include room for the terminator.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::time::Duration;

use kpasat::cipher::{Cipher, CipherParams};
use kpasat::dimacs::{self, SolveStatus};
use kpasat::encoder::{generate_instance, CnfInstance, EncoderOptions};
use kpasat::harness;
use kpasat::solver::{solve_internal, SolverOptions};
use kpasat::stats;
use kpasat::textpairs::resolve_key;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Solver = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Outcome of [`kpa_instance_solve`], numbered like solver exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpaSolveResult {
    Unknown = 0,
    Sat = 10,
    Unsat = 20,
}

/// Runtime summary; quartiles interpolate linearly.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KpaSummary {
    pub count: usize,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub mean: f64,
    pub cv_percent: f64,
    pub min: f64,
    pub max: f64,
}

/// A small-scale AES cipher.
pub struct KpaCipher(Cipher);

/// A CNF instance, possibly carrying attack metadata.
pub struct KpaInstance(CnfInstance);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(KpaStatus, String);

impl Failure {
    fn input(e: impl ToString) -> Self {
        Failure(KpaStatus::InvalidInput, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KpaStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (KpaStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(_) => (KpaStatus::Panic, "internal panic".to_string()),
    };
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(KpaStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(KpaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(KpaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_str(s: &str, out: *mut c_char, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            KpaStatus::NullPointer,
            "output buffer is null".into(),
        ));
    }
    if s.len() + 1 > len {
        return Err(Failure(
            KpaStatus::BufferTooSmall,
            format!("need {} bytes", s.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), out as *mut u8, s.len());
    *out.add(s.len()) = 0;
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next kpasat call on the same thread.
#[no_mangle]
pub extern "C" fn kpa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates SR(rounds, rows, cols, word_bits) with default field, matrices
/// and S-box.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kpa_cipher_new(
    rounds: u32,
    rows: u32,
    cols: u32,
    word_bits: u32,
    out: *mut *mut KpaCipher,
) -> KpaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(KpaStatus::NullPointer, "out is null".into()));
        }
        let params =
            CipherParams::small_scale(rounds as usize, rows as usize, cols as usize, word_bits)
                .map_err(Failure::input)?;
        let c = Cipher::new(params).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(KpaCipher(c)));
        Ok(())
    })
}

/// # Safety
/// `cipher` must come from [`kpa_cipher_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kpa_cipher_free(cipher: *mut KpaCipher) {
    if !cipher.is_null() {
        drop(Box::from_raw(cipher));
    }
}

unsafe fn crypt(
    cipher: *const KpaCipher,
    key: *const c_char,
    input: *const c_char,
    out: *mut c_char,
    out_len: usize,
    decrypt: bool,
) -> KpaStatus {
    guard(|| {
        let c = &ref_arg(cipher, "cipher")?.0;
        let (_, key_hex) = resolve_key(str_arg(key, "key")?, None);
        let km = c
            .expand_key(&c.parse_state(&key_hex).map_err(Failure::input)?)
            .map_err(Failure::input)?;
        let block = c
            .parse_state(str_arg(input, "block")?)
            .map_err(Failure::input)?;
        let res = if decrypt {
            c.decrypt_block(&block, &km)
        } else {
            c.encrypt(&block, &km)
        }
        .map_err(Failure::input)?;
        write_str(&res.to_hex(c.params().word_bits), out, out_len)
    })
}

/// Encrypts one hex block; `key` is hex or a named key (k3, k4, k6).
///
/// # Safety
/// Pointers must be valid; `out` must hold `out_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn kpa_cipher_encrypt(
    cipher: *const KpaCipher,
    key: *const c_char,
    plaintext: *const c_char,
    out: *mut c_char,
    out_len: usize,
) -> KpaStatus {
    crypt(cipher, key, plaintext, out, out_len, false)
}

/// # Safety
/// As [`kpa_cipher_encrypt`].
#[no_mangle]
pub unsafe extern "C" fn kpa_cipher_decrypt(
    cipher: *const KpaCipher,
    key: *const c_char,
    ciphertext: *const c_char,
    out: *mut c_char,
    out_len: usize,
) -> KpaStatus {
    crypt(cipher, key, ciphertext, out, out_len, true)
}

/// Builds the known-plaintext instance for `key` and `count` plaintexts.
/// `key_token` may be null.
///
/// # Safety
/// `plaintexts` must point to `count` valid strings.
#[no_mangle]
pub unsafe extern "C" fn kpa_instance_generate(
    cipher: *const KpaCipher,
    key: *const c_char,
    key_token: *const c_char,
    plaintexts: *const *const c_char,
    count: usize,
    out: *mut *mut KpaInstance,
) -> KpaStatus {
    guard(|| {
        let c = &ref_arg(cipher, "cipher")?.0;
        if out.is_null() || (plaintexts.is_null() && count > 0) {
            return Err(Failure(KpaStatus::NullPointer, "null argument".into()));
        }
        let token = if key_token.is_null() {
            None
        } else {
            Some(str_arg(key_token, "key_token")?)
        };
        let (token, key_hex) = resolve_key(str_arg(key, "key")?, token);
        let key = c.parse_state(&key_hex).map_err(Failure::input)?;
        let mut pts = Vec::with_capacity(count);
        for i in 0..count {
            pts.push(
                c.parse_state(str_arg(*plaintexts.add(i), "plaintext")?)
                    .map_err(Failure::input)?,
            );
        }
        let opts = EncoderOptions::for_word_bits(c.params().word_bits);
        let (_, cnf) = generate_instance(c, &token, key, &pts, &opts).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(KpaInstance(cnf)));
        Ok(())
    })
}

/// Reads a DIMACS file.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kpa_instance_read(
    path: *const c_char,
    out: *mut *mut KpaInstance,
) -> KpaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(Failure(KpaStatus::NullPointer, "out is null".into()));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure(KpaStatus::Io, format!("{path}: {e}")))?;
        let cnf = dimacs::read_dimacs(&text).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(KpaInstance(cnf)));
        Ok(())
    })
}

/// Writes DIMACS with metadata comments; the secret key only if asked.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kpa_instance_write_dimacs(
    instance: *const KpaInstance,
    path: *const c_char,
    include_key: bool,
) -> KpaStatus {
    guard(|| {
        let cnf = &ref_arg(instance, "instance")?.0;
        let path = Path::new(str_arg(path, "path")?);
        let text = dimacs::to_dimacs_string(cnf, include_key);
        std::fs::write(path, text)
            .map_err(|e| Failure(KpaStatus::Io, format!("{}: {e}", path.display())))
    })
}

/// Variable count, 0 for a null handle.
///
/// # Safety
/// `instance` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn kpa_instance_num_vars(instance: *const KpaInstance) -> u32 {
    instance.as_ref().map_or(0, |i| i.0.num_vars)
}

/// Clause count, 0 for a null handle.
///
/// # Safety
/// `instance` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn kpa_instance_num_clauses(instance: *const KpaInstance) -> u64 {
    instance.as_ref().map_or(0, |i| i.0.num_clauses() as u64)
}

/// Solves with the built-in solver. A non-positive `timeout_secs` means no
/// limit. When SAT and the instance has metadata, the recovered key is
/// written to `key_out` (empty string otherwise) and `verified` tells
/// whether it re-encrypts every plaintext correctly.
///
/// # Safety
/// Pointers must be valid; `key_out` must hold `key_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn kpa_instance_solve(
    instance: *const KpaInstance,
    seed: u64,
    timeout_secs: f64,
    result: *mut KpaSolveResult,
    key_out: *mut c_char,
    key_len: usize,
    verified: *mut bool,
) -> KpaStatus {
    guard(|| {
        let cnf = &ref_arg(instance, "instance")?.0;
        if result.is_null() || verified.is_null() {
            return Err(Failure(KpaStatus::NullPointer, "null output".into()));
        }
        let opts = SolverOptions {
            seed,
            timeout: (timeout_secs > 0.0).then(|| Duration::from_secs_f64(timeout_secs)),
            ..SolverOptions::default()
        };
        let m =
            solve_internal(cnf, &opts).map_err(|e| Failure(KpaStatus::Solver, e.to_string()))?;
        *result = match m.status {
            SolveStatus::Sat => KpaSolveResult::Sat,
            SolveStatus::Unsat => KpaSolveResult::Unsat,
            _ => KpaSolveResult::Unknown,
        };
        *verified = false;
        let mut key = String::new();
        if let (SolveStatus::Sat, Some(meta)) = (m.status, cnf.meta.as_ref()) {
            key = harness::extract_key(&m, &meta.layout()).map_err(Failure::input)?;
            *verified = harness::verify_key(meta, &key).map_err(Failure::input)?;
        }
        write_str(&key, key_out, key_len)
    })
}

/// # Safety
/// `instance` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kpa_instance_free(instance: *mut KpaInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Summarizes `n` runtimes.
///
/// # Safety
/// `times` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn kpa_stats_summarize(
    times: *const f64,
    n: usize,
    out: *mut KpaSummary,
) -> KpaStatus {
    guard(|| {
        if times.is_null() || out.is_null() {
            return Err(Failure(KpaStatus::NullPointer, "null argument".into()));
        }
        let s = stats::summarize(std::slice::from_raw_parts(times, n)).map_err(Failure::input)?;
        *out = KpaSummary {
            count: s.count,
            median: s.median,
            lower_quartile: s.lower_quartile,
            upper_quartile: s.upper_quartile,
            mean: s.mean,
            cv_percent: s.cv_percent,
            min: s.min,
            max: s.max,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(kpa_last_error()) }
            .to_string_lossy()
            .into_owned()
    }

    #[test]
    fn cipher_round_trip_and_errors() {
        let mut c = ptr::null_mut();
        assert_eq!(unsafe { kpa_cipher_new(3, 4, 4, 4, &mut c) }, KpaStatus::Ok);
        let mut buf = [0 as c_char; 17];
        let key = c"k3";
        let st = unsafe {
            kpa_cipher_encrypt(
                c,
                key.as_ptr(),
                c"6162636465666768".as_ptr(),
                buf.as_mut_ptr(),
                buf.len(),
            )
        };
        assert_eq!(st, KpaStatus::Ok);
        let ct = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_owned();
        let mut back = [0 as c_char; 17];
        unsafe { kpa_cipher_decrypt(c, key.as_ptr(), ct.as_ptr(), back.as_mut_ptr(), back.len()) };
        assert_eq!(
            unsafe { CStr::from_ptr(back.as_ptr()) }.to_str().unwrap(),
            "6162636465666768"
        );

        let mut small = [0 as c_char; 16];
        let st = unsafe {
            kpa_cipher_encrypt(
                c,
                key.as_ptr(),
                ct.as_ptr(),
                small.as_mut_ptr(),
                small.len(),
            )
        };
        assert_eq!(st, KpaStatus::BufferTooSmall);
        let st = unsafe {
            kpa_cipher_encrypt(c, key.as_ptr(), c"zz".as_ptr(), buf.as_mut_ptr(), buf.len())
        };
        assert_eq!(st, KpaStatus::InvalidInput);
        assert!(!last_error().is_empty());
        assert_eq!(
            unsafe {
                kpa_cipher_encrypt(ptr::null(), key.as_ptr(), ct.as_ptr(), buf.as_mut_ptr(), 17)
            },
            KpaStatus::NullPointer
        );
        unsafe { kpa_cipher_free(c) };

        let mut bad = ptr::null_mut();
        assert_eq!(
            unsafe { kpa_cipher_new(0, 4, 4, 4, &mut bad) },
            KpaStatus::InvalidInput
        );
        assert!(bad.is_null());
    }

    #[test]
    fn generate_solve_and_recover() {
        let mut c = ptr::null_mut();
        unsafe { kpa_cipher_new(1, 2, 2, 4, &mut c) };
        let pts = [c"0123".as_ptr(), c"4567".as_ptr(), c"89ab".as_ptr()];
        let mut inst = ptr::null_mut();
        let st = unsafe {
            kpa_instance_generate(
                c,
                c"beef".as_ptr(),
                c"t".as_ptr(),
                pts.as_ptr(),
                3,
                &mut inst,
            )
        };
        assert_eq!(st, KpaStatus::Ok, "{}", last_error());
        assert_eq!(unsafe { kpa_instance_num_vars(inst) }, 16 * 2 + 3 * 16);
        assert!(unsafe { kpa_instance_num_clauses(inst) } > 0);

        let mut res = KpaSolveResult::Unknown;
        let mut key = [0 as c_char; 8];
        let mut ok = false;
        let st = unsafe {
            kpa_instance_solve(inst, 1, 0.0, &mut res, key.as_mut_ptr(), key.len(), &mut ok)
        };
        assert_eq!(st, KpaStatus::Ok, "{}", last_error());
        assert_eq!(res, KpaSolveResult::Sat);
        assert!(ok);
        unsafe {
            kpa_instance_free(inst);
            kpa_cipher_free(c);
        }
    }

    #[test]
    fn summary() {
        let xs = [1.0, 2.0, 3.0, 4.0, 100.0];
        let mut s = KpaSummary::default();
        assert_eq!(
            unsafe { kpa_stats_summarize(xs.as_ptr(), xs.len(), &mut s) },
            KpaStatus::Ok
        );
        assert_eq!((s.count, s.median, s.mean), (5, 3.0, 22.0));
        assert_eq!(
            unsafe { kpa_stats_summarize(xs.as_ptr(), 0, &mut s) },
            KpaStatus::InvalidInput
        );
    }
}
