fn main() {
    std::process::exit(akt_core::cli::run(std::env::args()));
}
