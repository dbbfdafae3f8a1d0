fn main() {
    std::process::exit(hierperc::cli::run(std::env::args().collect()));
}
