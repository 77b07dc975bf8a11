fn main() {
    std::process::exit(euii::cli::run());
}
