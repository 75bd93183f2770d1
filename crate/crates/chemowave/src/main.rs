fn main() {
    std::process::exit(chemowave::cli::run());
}
