fn main() {
    std::process::exit(pairrank::cli::run());
}
