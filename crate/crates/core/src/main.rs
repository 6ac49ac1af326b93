fn main() {
    std::process::exit(frechet::cli::run(std::env::args_os()));
}
