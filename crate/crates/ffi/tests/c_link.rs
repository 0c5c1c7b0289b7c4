//! Compiles and runs a C program against the generated header and the
//! static library. Skipped when no C compiler is on the PATH.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in target/<profile>/deps; the library one level up
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libbestcell_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("bestcell_smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status);
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("q_inverse"), "{text}");
}
