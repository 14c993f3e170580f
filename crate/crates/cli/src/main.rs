use std::io;

fn main() {
    let code = rkhs_denoise_cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
