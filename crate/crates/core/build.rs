fn main() {
    // cblas-sys / lapack-sys declare the symbols; OpenBLAS provides both.
    println!("cargo:rustc-link-lib=openblas");
}
