fn main() {
    std::process::exit(escalator_phm::cli::run());
}
