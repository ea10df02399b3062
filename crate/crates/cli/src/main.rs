fn main() {
    std::process::exit(fkspline_cli::run(std::env::args()));
}
