fn main() {
    std::process::exit(slinv::cli::run());
}
