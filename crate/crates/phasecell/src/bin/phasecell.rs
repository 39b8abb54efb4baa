fn main() {
    std::process::exit(phasecell::cli::run(std::env::args_os().collect()));
}
