fn main() {
    std::process::exit(bebound::cli::run());
}
