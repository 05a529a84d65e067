fn main() {
    std::process::exit(catbell::cli::run());
}
