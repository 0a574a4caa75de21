// Records the build profile so benchmark reports can state how they were compiled.
fn main() {
    for (var, key) in [
        ("PROFILE", "EXPRBENCH_PROFILE"),
        ("OPT_LEVEL", "EXPRBENCH_OPT_LEVEL"),
    ] {
        let value = std::env::var(var).unwrap_or_else(|_| "unknown".into());
        println!("cargo:rustc-env={key}={value}");
    }
    println!("cargo:rerun-if-changed=build.rs");
}
