fn main() {
    std::process::exit(sigma2::cli::run_cli(std::env::args_os()));
}
