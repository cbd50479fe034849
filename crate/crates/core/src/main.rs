fn main() {
    std::process::exit(liftlab::cli::run(std::env::args()));
}
