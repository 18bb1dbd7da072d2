use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sci_workbench_ffi::*;

fn last_error() -> String {
    let p = sci_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dispatch_argv_round_trip() {
    let args: Vec<CString> = ["family", "classify", "--heights", "0,2", "--k", "2"]
        .iter()
        .map(|s| CString::new(*s).unwrap())
        .collect();
    let ptrs: Vec<*const std::ffi::c_char> = args.iter().map(|a| a.as_ptr()).collect();
    let mut report = ptr::null_mut();
    let st = unsafe { sci_dispatch(ptrs.len(), ptrs.as_ptr(), &mut report) };
    assert_eq!(st, SciStatus::Ok);
    assert_eq!(unsafe { sci_report_passed(report) }, 1);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sci_report_json(report, &mut json) }, SciStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["result"]["verdict"], "(F,T,T)");
    assert_eq!(v["command"], "family classify");
    unsafe {
        sci_string_free(json);
        sci_report_free(report);
    }
}

#[test]
fn dispatch_json_reports_usage_errors() {
    let bad = CString::new(r#"["integrate", "nonsense"]"#).unwrap();
    let mut report = ptr::null_mut();
    let st = unsafe { sci_dispatch_json(bad.as_ptr(), &mut report) };
    assert_eq!(st, SciStatus::Usage);
    assert!(report.is_null());
    assert!(last_error().contains("nonsense"));

    let not_json = CString::new("integrate").unwrap();
    assert_eq!(unsafe { sci_dispatch_json(not_json.as_ptr(), &mut report) }, SciStatus::InvalidArgument);

    let ok = CString::new(r#"["degrees", "counterexample", "--class", "id"]"#).unwrap();
    assert_eq!(unsafe { sci_dispatch_json(ok.as_ptr(), &mut report) }, SciStatus::Ok);
    assert!(sci_last_error_message().is_null());
    assert_eq!(unsafe { sci_report_check_count(report) }, 2);
    unsafe { sci_report_free(report) };
}

#[test]
fn null_pointers_are_rejected() {
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { sci_dispatch_json(ptr::null(), &mut report) }, SciStatus::NullPointer);
    assert_eq!(unsafe { sci_dispatch(1, ptr::null(), &mut report) }, SciStatus::NullPointer);
    assert_eq!(unsafe { sci_report_passed(ptr::null()) }, -1);
    assert_eq!(unsafe { sci_report_check_count(ptr::null()) }, 0);
    unsafe {
        sci_report_free(ptr::null_mut());
        sci_catalog_free(ptr::null_mut());
        sci_string_free(ptr::null_mut());
    }
}

#[test]
fn catalogs() {
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { sci_catalog_load(ptr::null(), &mut cat) }, SciStatus::Ok);
    assert!(unsafe { sci_catalog_spectral_pairs(cat) } >= 30);
    assert!(unsafe { sci_catalog_entry_count(cat) } > 0);
    unsafe { sci_catalog_free(cat) };

    let missing = CString::new("/nonexistent/catalog.json").unwrap();
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { sci_catalog_load(missing.as_ptr(), &mut cat) }, SciStatus::Catalog);
    assert!(last_error().contains("/nonexistent/catalog.json"));
}

#[test]
fn classify_flags() {
    let hs = [0u32, 2];
    let mut v = SciVerdict::default();
    assert_eq!(unsafe { sci_classify_heights(hs.as_ptr(), hs.len(), 2, &mut v) }, SciStatus::Ok);
    assert_eq!((v.pointwise_exact, v.witness_sharp, v.worst_case_exact), (0, 1, 1));
    assert_eq!(unsafe { sci_classify_heights(hs.as_ptr(), 0, 2, &mut v) }, SciStatus::Domain);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(sci_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/sci_workbench.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in ["sci_dispatch", "sci_dispatch_json", "sci_report_free", "sci_last_error_message", "SCI_STATUS_OK"] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let probe = std::env::temp_dir().join(format!("sci_header_probe_{}.c", std::process::id()));
    std::fs::write(
        &probe,
        "#include \"sci_workbench.h\"\n\
         int main(void) {\n\
           SciReport *r = NULL;\n\
           const char *args[] = {\"family\", \"classify\", \"--heights\", \"1\", \"--k\", \"1\"};\n\
           SciStatus st = sci_dispatch(6, args, &r);\n\
           sci_report_free(r);\n\
           return st == SCI_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let out = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&probe)
        .output()
    {
        Ok(o) => o,
        Err(e) => {
            eprintln!("skipping C syntax check: {e}");
            return;
        }
    };
    let _ = std::fs::remove_file(&probe);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
