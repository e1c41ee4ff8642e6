use std::ffi::CStr;
use std::os::raw::c_char;
use std::path::Path;
use std::process::Command;
use std::ptr;

use khessian_ffi::*;

fn last_error() -> String {
    let len = kh_last_error_length();
    let mut buf = vec![0 as c_char; len.max(1)];
    unsafe {
        kh_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn params(n: usize, k: usize) -> *mut KhParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { kh_params_new(n, k, &mut p) }, KhStatus::Ok);
    p
}

#[test]
fn params_round_trip_and_domain_errors() {
    let p = params(3, 2);
    let (mut c, mut a, mut b) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(kh_params_constants(p, &mut c, &mut a, &mut b), KhStatus::Ok);
        kh_params_free(p);
    }
    assert_eq!(c, 1.0);
    // alpha = n / (n(k-1) + 2k), beta = 1 / (n(k-1) + 2k)
    assert!((a - 3.0 / 7.0).abs() < 1e-15 && (b - 1.0 / 7.0).abs() < 1e-15);

    let mut q = ptr::null_mut();
    assert_eq!(unsafe { kh_params_new(2, 3, &mut q) }, KhStatus::ParamDomain);
    assert!(q.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_handles_are_reported() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { kh_barenblatt_value(ptr::null(), 1.0, 0.0, &mut out) },
        KhStatus::NullPointer
    );
    assert_eq!(last_error(), "barenblatt is null");
    assert_eq!(
        unsafe { kh_params_new(3, 2, ptr::null_mut()) },
        KhStatus::NullPointer
    );
    unsafe {
        kh_params_free(ptr::null_mut());
        kh_stationary_free(ptr::null_mut());
        kh_barenblatt_free(ptr::null_mut());
    }
}

#[test]
fn error_message_is_truncated_safely() {
    let mut q = ptr::null_mut();
    unsafe { kh_params_new(0, 0, &mut q) };
    let full = kh_last_error_length();
    let mut buf = [1 as c_char; 4];
    let reported = unsafe { kh_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(reported, full);
    assert_eq!(buf[3], 0);
}

#[test]
fn torsion_function_through_the_abi() {
    let p = params(3, 3);
    let cells = 32;
    let radius = 1.5;
    let mut c_nk = 0.0;
    unsafe { kh_params_constants(p, &mut c_nk, ptr::null_mut(), ptr::null_mut()) };
    let coeff = 0.5 * (3.0 * c_nk).powf(-1.0 / 3.0);
    let u: Vec<f64> = (0..=cells)
        .map(|i| {
            let r = radius * i as f64 / cells as f64;
            coeff * (r * r - radius * radius)
        })
        .collect();
    let mut s = vec![0.0; cells + 1];
    assert_eq!(
        unsafe { kh_apply_sk_radial(p, radius, cells, u.as_ptr(), s.as_mut_ptr()) },
        KhStatus::Ok
    );
    for v in &s[..cells] {
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
    unsafe { kh_params_free(p) };
}

#[test]
fn stationary_profile_through_the_abi() {
    let p = params(3, 2);
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { kh_stationary_solve(p, 1.0, 256, 2000, &mut s) },
        KhStatus::Ok
    );
    let mut len = 0;
    unsafe { kh_stationary_len(s, &mut len) };
    assert_eq!(len, 257);

    let mut short = vec![0.0; 10];
    assert_eq!(
        unsafe { kh_stationary_profile(s, ptr::null_mut(), short.as_mut_ptr(), short.len()) },
        KhStatus::BufferTooSmall
    );
    let (mut r, mut theta) = (vec![0.0; len], vec![0.0; len]);
    assert_eq!(
        unsafe { kh_stationary_profile(s, r.as_mut_ptr(), theta.as_mut_ptr(), len) },
        KhStatus::Ok
    );
    assert_eq!(r[len - 1], 1.0);
    assert_eq!(theta[len - 1], 0.0);
    assert!(theta[0] < 0.0);

    let mut info = KhStationaryInfo::default();
    assert_eq!(unsafe { kh_stationary_info(s, &mut info) }, KhStatus::Ok);
    assert!(info.residual < 1e-5 && info.bounds_satisfied);
    assert_eq!(info.sup_norm, -theta[0]);
    unsafe {
        kh_stationary_free(s);
        kh_params_free(p);
    }
}

#[test]
fn stationary_rejects_k1() {
    let p = params(3, 1);
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { kh_stationary_solve(p, 1.0, 64, 2000, &mut s) },
        KhStatus::ParamDomain
    );
    assert!(last_error().contains("k >= 2"));
    unsafe { kh_params_free(p) };
}

#[test]
fn barenblatt_mass_round_trip() {
    let p = params(3, 2);
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { kh_barenblatt_from_mass(p, 5.0, &mut b) }, KhStatus::Ok);
    let (mut c, mut m, mut r0) = (0.0, 0.0, 0.0);
    unsafe { kh_barenblatt_constants(b, &mut c, &mut m, &mut r0) };
    assert!((m / 5.0 - 1.0).abs() < 1e-13);
    let mut edge = 0.0;
    unsafe { kh_barenblatt_support_radius(b, 1.0, &mut edge) };
    // r0 = sqrt(2C/gamma) while the support edge at t = 1 is sqrt(C/gamma)
    assert!((edge * 2f64.sqrt() - r0).abs() < 1e-12 * r0);
    let (mut inside, mut outside) = (0.0, 1.0);
    unsafe {
        kh_barenblatt_value(b, 1.0, 0.5 * edge, &mut inside);
        kh_barenblatt_value(b, 1.0, 1.01 * edge, &mut outside);
    }
    assert!(inside > 0.0);
    assert_eq!(outside, 0.0);

    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { kh_barenblatt_new(p, -1.0, &mut bad) },
        KhStatus::InvalidArgument
    );
    unsafe {
        kh_barenblatt_free(b);
        kh_params_free(p);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/khessian.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for name in [
        "kh_params_new",
        "kh_stationary_solve",
        "kh_barenblatt_value",
        "KH_STATUS_PANIC",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"khessian.h\"\nint main(void) { KhParams *p = 0; return kh_params_new(3, 2, &p) == KH_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}", header.parent().unwrap().display()))
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    let _ = std::fs::remove_dir_all(&dir);
    assert!(status.success());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("khessian-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
