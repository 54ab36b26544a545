//! Drive the command-line interface in-process.
//!
//!     cargo run --example cli

fn main() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = selfsim::cli::run(["selfsim", "dim", "--preset", "cantor3", "--n", "6"], &mut out, &mut err);
    print!("{}", String::from_utf8_lossy(&out));
    println!("exit {code}");

    out.clear();
    let code = selfsim::cli::run(["selfsim", "dim", "--preset", "no-such-thing"], &mut out, &mut err);
    print!("{}", String::from_utf8_lossy(&err));
    println!("exit {code}");
}
