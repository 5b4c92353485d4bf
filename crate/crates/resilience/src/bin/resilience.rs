fn main() {
    std::process::exit(resilience::cli::run());
}
