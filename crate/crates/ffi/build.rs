//! Regenerates `include/nbrw.h` from the exported functions.

fn main() {
    let dir = std::env::var("CARGO_MANIFEST_DIR").expect("set by cargo");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(format!("{dir}/cbindgen.toml")).expect("cbindgen.toml parses");
    match cbindgen::generate_with_config(&dir, config) {
        Ok(b) => {
            b.write_to_file(format!("{dir}/include/nbrw.h"));
        }
        // Keep building with the checked-in header when generation fails.
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
