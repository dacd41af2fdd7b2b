fn main() {
    std::process::exit(leftist::cli::run(std::env::args_os()));
}
