fn main() {
    // System LAPACK (OpenBLAS on Debian) provides dsyevd_/dgesvd_ for lapack-sys.
    println!("cargo:rustc-link-lib=dylib=lapack");
}
