use std::io;

fn main() {
    let code = pullback_heaviside::cli::main_with_args(
        std::env::args(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    std::process::exit(code);
}
