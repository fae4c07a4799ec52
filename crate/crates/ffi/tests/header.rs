use std::path::Path;
use std::process::Command;

/// The generated header must be accepted by a C compiler on its own.
#[test]
fn generated_header_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/trni.h");
    assert!(
        header.exists(),
        "build script did not write {}",
        header.display()
    );
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let src = std::env::temp_dir().join(format!("trni_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"trni.h\"\nint main(void) { TrniPolicy *p = 0; return trni_policy_parse(\"\", 0, &p) == TRNI_STATUS_OK; }\n",
    )
    .unwrap();
    let status = match Command::new(&cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: no C compiler ({cc}: {e})");
            return;
        }
    };
    let _ = std::fs::remove_file(&src);
    assert!(status.success(), "{cc} rejected trni.h");
}
