fn main() {
    std::process::exit(docdistill::cli::run(std::env::args().collect()));
}
