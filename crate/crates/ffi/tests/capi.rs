use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rnmvar_ffi::*;

fn c(re: f64, im: f64) -> RnmComplex {
    RnmComplex { re, im }
}

fn last_error() -> String {
    let p = rnm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn ginibre_round_trip() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(rnm_potential_ginibre(&mut p), RnmStatus::Ok);
        let mut q = 0.0;
        assert_eq!(rnm_potential_eval(p, c(0.3, 0.4), &mut q), RnmStatus::Ok);
        assert!((q - 0.25).abs() < 1e-15);
        assert_eq!(rnm_potential_laplacian(p, c(0.3, 0.4), &mut q), RnmStatus::Ok);
        assert!((q - 1.0).abs() < 1e-12);

        let mut k = ptr::null_mut();
        assert_eq!(rnm_kernel_new(p, 20, &mut k), RnmStatus::Ok);
        assert_eq!(rnm_kernel_size(k), 20);
        let z = c(0.1, -0.2);
        let mut kzz = c(0.0, 0.0);
        let mut rho = 0.0;
        assert_eq!(rnm_kernel_eval(k, z, z, &mut kzz), RnmStatus::Ok);
        assert_eq!(rnm_kernel_density(k, z, &mut rho), RnmStatus::Ok);
        assert!((kzz.re - 20.0 * rho).abs() < 1e-12 * kzz.re && kzz.im.abs() < 1e-12);

        let (mut exact, mut quad) = (0.0, 0.0);
        assert_eq!(rnm_variance_radial_exact(p, 20, 0.5, &mut exact), RnmStatus::Ok);
        assert_eq!(
            rnm_variance_disc_quadrature(k, c(0.0, 0.0), 0.5, 16, &mut quad),
            RnmStatus::Ok
        );
        assert!((exact - quad).abs() <= 1e-6 * exact);

        let mut pred = 0.0;
        assert_eq!(
            rnm_bulk_prediction_disc(p, c(0.0, 0.0), 0.5, 100, &mut pred),
            RnmStatus::Ok
        );
        assert!((pred - 5.0 / std::f64::consts::PI.sqrt()).abs() < 1e-9);

        rnm_kernel_free(k);
        rnm_potential_free(p);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(rnm_potential_elliptic_ginibre(1.5, &mut p), RnmStatus::InvalidArgument);
        assert!(p.is_null());
        assert!(last_error().contains("tau"));

        assert_eq!(rnm_potential_ginibre(ptr::null_mut()), RnmStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(
            rnm_potential_eval(ptr::null(), c(0.0, 0.0), &mut v),
            RnmStatus::NullPointer
        );
        assert_eq!(
            rnm_kernel_density(ptr::null(), c(0.0, 0.0), &mut v),
            RnmStatus::NullPointer
        );
        assert_eq!(rnm_kernel_size(ptr::null()), 0);

        assert_eq!(rnm_potential_elliptic_ginibre(0.5, &mut p), RnmStatus::Ok);
        assert!(rnm_last_error_message().is_null());
        assert_eq!(rnm_variance_radial_exact(p, 10, 0.5, &mut v), RnmStatus::Unsupported);
        let mut k = ptr::null_mut();
        assert_eq!(rnm_kernel_new(p, 0, &mut k), RnmStatus::InvalidArgument);
        rnm_potential_free(p);
        rnm_potential_free(ptr::null_mut());
        rnm_kernel_free(ptr::null_mut());
    }
}

#[test]
fn edge_profile_midpoint() {
    let mut f = 0.0;
    assert_eq!(unsafe { rnm_edge_profile(0.0, &mut f) }, RnmStatus::Ok);
    assert!((f - 0.5).abs() < 1e-10);
    assert_eq!(
        unsafe { rnm_edge_profile(f64::NAN, &mut f) },
        RnmStatus::InvalidArgument
    );
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("rnmvar.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "rnm_kernel_new",
        "rnm_last_error_message",
        "RNM_STATUS_PANIC",
        "typedef struct RnmKernel RnmKernel",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let src = std::env::temp_dir().join(format!("rnmvar_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"rnmvar.h\"\nint use(void) {\n  RnmPotential *p = 0;\n  RnmKernel *k = 0;\n  RnmComplex z = {0.1, 0.2};\n  double v;\n  if (rnm_potential_ginibre(&p) != RNM_STATUS_OK) return 1;\n  if (rnm_kernel_new(p, 10, &k) != RNM_STATUS_OK) return 2;\n  rnm_kernel_density(k, z, &v);\n  rnm_kernel_free(k);\n  rnm_potential_free(p);\n  return 0;\n}\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status();
    let _ = std::fs::remove_file(&src);
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(e) => eprintln!("skipping C compile check: {e}"),
    }
}
