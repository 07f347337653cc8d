fn main() {
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let code = isle::cli::run(std::env::args_os(), std::env::vars(), &mut out, &mut err);
    std::process::exit(code);
}
