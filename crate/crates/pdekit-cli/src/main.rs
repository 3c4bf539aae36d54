use std::io::Write;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed = std::env::var("PDEKIT_SEED").ok();
    let out = pdekit_cli::cli::run_cli(&args, seed.as_deref());
    let mut so = std::io::stdout().lock();
    let _ = so.write_all(out.stdout.as_bytes());
    if !out.stderr.is_empty() {
        eprint!("{}", out.stderr);
    }
    std::process::exit(out.code);
}
