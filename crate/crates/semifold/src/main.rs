fn main() {
    std::process::exit(semifold::cli::run());
}
