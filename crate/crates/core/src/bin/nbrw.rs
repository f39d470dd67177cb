//! `nbrw` command-line tool; see [`nbrw::cli`].

fn main() {
    let code = nbrw::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
